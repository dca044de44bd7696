//! Layered SVG of one floor: walls, rooms, trajectory, memo graph.

use std::fmt::Write;

use explorer_core::geometry::{GridIndex, Pose, Vec2};
use explorer_core::scene::{Scene, SnaType};
use explorer_core::sgmemo::SgMemo;

/// Pixels per meter of the nominal image size.
const PX_PER_M: f64 = 40.0;

fn colour(t: SnaType) -> &'static str {
    match t {
        SnaType::Stairs => "#d62728",
        SnaType::RoomEntry => "#2ca02c",
        SnaType::Intersection => "#ff7f0e",
        SnaType::Normal => "#1f77b4",
        SnaType::Unknown => "#7f7f7f",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn pt(p: Vec2) -> String {
    format!("{:.3},{:.3}", p.x, p.y)
}

pub fn svg(scene: &Scene, floor: usize, poses: &[Pose], memo: Option<&SgMemo>) -> String {
    let fl = &scene.floors[floor];
    let grid = &fl.grid;
    let res = grid.resolution();
    let (w, h) = (grid.width() as f64 * res, grid.height() as f64 * res);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {w:.3} {h:.3}">"#,
        w * PX_PER_M,
        h * PX_PER_M
    );

    // occupied cells merged into horizontal runs
    let _ = writeln!(s, r##"<g id="grid"><rect x="0" y="0" width="{w:.3}" height="{h:.3}" fill="#ffffff"/>"##);
    for r in 0..grid.height() as i64 {
        let mut c = 0i64;
        while c < grid.width() as i64 {
            if !grid.is_occupied(GridIndex::new(c, r)) {
                c += 1;
                continue;
            }
            let start = c;
            while c < grid.width() as i64 && grid.is_occupied(GridIndex::new(c, r)) {
                c += 1;
            }
            let _ = writeln!(
                s,
                r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{res:.3}" fill="#404040"/>"##,
                start as f64 * res,
                r as f64 * res,
                (c - start) as f64 * res
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="rooms">"#);
    for room in &fl.rooms {
        let points: Vec<String> = room.polygon.iter().map(|v| pt(*v)).collect();
        let c = room.polygon.iter().fold(Vec2::default(), |a, v| a + *v) * (1.0 / room.polygon.len().max(1) as f64);
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.25" stroke="#6baed6" stroke-width="0.03"/>"##,
            points.join(" ")
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.3}" y="{:.3}" font-size="0.35" text-anchor="middle" fill="#08306b">{}</text>"##,
            c.x,
            c.y,
            escape(&room.category)
        );
    }
    let _ = writeln!(s, "</g>");

    let track: Vec<String> = poses.iter().filter(|p| p.floor == floor).map(|p| pt(p.position())).collect();
    if !track.is_empty() {
        let _ = writeln!(
            s,
            r##"<g id="trajectory"><polyline points="{}" fill="none" stroke="#9467bd" stroke-width="0.06"/></g>"##,
            track.join(" ")
        );
    }

    if let Some(memo) = memo {
        let _ = writeln!(s, r#"<g id="memo-edges">"#);
        for (a, b) in memo.edges() {
            let (Some(na), Some(nb)) = (memo.node(a), memo.node(b)) else { continue };
            if na.floor != floor || nb.floor != floor {
                continue;
            }
            let _ = writeln!(
                s,
                r##"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#636363" stroke-width="0.03"/>"##,
                na.position.x, na.position.y, nb.position.x, nb.position.y
            );
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<g id="memo-nodes">"#);
        for n in memo.nodes().filter(|n| n.floor == floor) {
            let fill = if n.is_visited() { colour(n.sna_type) } else { "#ffffff" };
            let _ = writeln!(
                s,
                r#"<circle class="node {}" data-id="{}" cx="{:.3}" cy="{:.3}" r="0.15" fill="{fill}" stroke="{}" stroke-width="0.04"/>"#,
                n.sna_type.as_str(),
                n.id,
                n.position.x,
                n.position.y,
                colour(n.sna_type)
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}
