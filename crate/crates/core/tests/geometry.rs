use std::f64::consts::PI;

use explorer_core::geometry::{
    ipm_project, point_in_polygon, project_to_pixel, raycast_los, GeometryError, GridIndex, OccupancyGrid, Pose,
    Vec2,
};
use explorer_core::perception::default_rig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RES: f64 = 0.5;

fn random_grid(seed: u64, n: usize, density: f64) -> OccupancyGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = (0..n * n).map(|_| rng.gen_bool(density)).collect();
    OccupancyGrid::from_cells(n, n, RES, cells)
}

/// Closed segment against a closed axis-aligned box (slab clipping), cell units.
fn segment_touches_box(a: Vec2, b: Vec2, lo: Vec2, hi: Vec2) -> bool {
    const EPS: f64 = 1e-9;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, d, l, h) in [(a.x, b.x - a.x, lo.x, hi.x), (a.y, b.y - a.y, lo.y, hi.y)] {
        if d.abs() < 1e-15 {
            if p < l - EPS || p > h + EPS {
                return false;
            }
            continue;
        }
        let (mut ta, mut tb) = ((l - EPS - p) / d, (h + EPS - p) / d);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return false;
        }
    }
    true
}

fn analytic_los(grid: &OccupancyGrid, a: GridIndex, b: GridIndex) -> bool {
    let pa = Vec2::new(a.col as f64 + 0.5, a.row as f64 + 0.5);
    let pb = Vec2::new(b.col as f64 + 0.5, b.row as f64 + 0.5);
    for r in 0..grid.height() as i64 {
        for c in 0..grid.width() as i64 {
            let idx = GridIndex::new(c, r);
            if idx == a || idx == b || !grid.is_occupied(idx) {
                continue;
            }
            let lo = Vec2::new(c as f64, r as f64);
            if segment_touches_box(pa, pb, lo, lo + Vec2::new(1.0, 1.0)) {
                return false;
            }
        }
    }
    true
}

/// Samples the segment every 0.1 cell; any occupied non-endpoint cell hit is
/// a genuine blocker (sampling can miss grazes but never invents one).
fn sampled_blocker(grid: &OccupancyGrid, a: GridIndex, b: GridIndex) -> bool {
    let pa = grid.center(a);
    let pb = grid.center(b);
    let steps = ((pa.distance(pb) / (RES * 0.1)).ceil() as usize).max(1);
    (0..=steps).any(|k| {
        let p = pa + (pb - pa) * (k as f64 / steps as f64);
        let c = grid.cell_of(p).unwrap();
        c != a && c != b && grid.is_occupied(c)
    })
}

#[test]
fn los_matches_analytic_and_sampled_oracles_on_seed_7_grid() {
    let grid = random_grid(7, 20, 0.2);
    let cells: Vec<GridIndex> = (0..20).flat_map(|r| (0..20).map(move |c| GridIndex::new(c, r))).collect();
    let mut blocked = 0;
    for (i, &a) in cells.iter().enumerate() {
        for &b in &cells[i..] {
            let got = raycast_los(&grid, grid.center(a), grid.center(b)).unwrap();
            assert_eq!(got, analytic_los(&grid, a, b), "{a:?} -> {b:?}");
            if sampled_blocker(&grid, a, b) {
                assert!(!got, "sampled blocker missed {a:?} -> {b:?}");
            }
            blocked += usize::from(!got);
        }
    }
    // the grid must actually exercise both outcomes
    assert!(blocked > 1000);
}

#[test]
fn los_out_of_bounds_is_an_error() {
    let grid = random_grid(7, 20, 0.0);
    let r = raycast_los(&grid, Vec2::new(1.0, 1.0), Vec2::new(11.0, 1.0));
    assert!(matches!(r, Err(GeometryError::OutOfBounds { .. })));
}

fn l_polygon() -> Vec<Vec2> {
    [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]
        .iter()
        .map(|&(x, y)| Vec2::new(x, y))
        .collect()
}

fn winding_number(p: Vec2, poly: &[Vec2]) -> i32 {
    let mut w = 0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let side = (b - a).cross(p - a);
        if a.y <= p.y {
            if b.y > p.y && side > 0.0 {
                w += 1;
            }
        } else if b.y <= p.y && side < 0.0 {
            w -= 1;
        }
    }
    w
}

fn boundary_distance(p: Vec2, poly: &[Vec2]) -> f64 {
    (0..poly.len())
        .map(|i| explorer_core::geometry::segment_distance(p, poly[i], poly[(i + 1) % poly.len()]))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn l_polygon_notch_is_outside() {
    let l = l_polygon();
    assert!(!point_in_polygon(Vec2::new(1.5, 1.5), &l).unwrap());
    assert!(point_in_polygon(Vec2::new(0.5, 1.5), &l).unwrap());
    assert!(point_in_polygon(Vec2::new(1.5, 1.0), &l).unwrap());
    assert_eq!(winding_number(Vec2::new(1.5, 1.5), &l), 0);
}

#[test]
fn containment_agrees_with_winding_number_on_random_star_polygons() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.gen_range(3..12);
        let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        angles.sort_by(f64::total_cmp);
        let poly: Vec<Vec2> = angles
            .iter()
            .map(|&a| {
                let r = rng.gen_range(0.5..3.0);
                Vec2::new(r * a.cos(), r * a.sin())
            })
            .collect();
        if point_in_polygon(Vec2::default(), &poly).is_err() {
            continue;
        }
        for _ in 0..200 {
            let p = Vec2::new(rng.gen_range(-3.5..3.5), rng.gen_range(-3.5..3.5));
            if boundary_distance(p, &poly) < 1e-6 {
                continue;
            }
            assert_eq!(point_in_polygon(p, &poly).unwrap(), winding_number(p, &poly) != 0);
        }
    }
}

proptest! {
    #[test]
    fn polygon_test_is_translation_and_rotation_equivariant(
        px in -1.0f64..3.0, py in -1.0f64..3.0, tx in -50.0f64..50.0, ty in -50.0f64..50.0, quarter in 0u8..4,
    ) {
        let l = l_polygon();
        let rot = |v: Vec2| (0..quarter).fold(v, |v, _| Vec2::new(-v.y, v.x));
        let moved: Vec<Vec2> = l.iter().map(|&v| rot(v) + Vec2::new(tx, ty)).collect();
        let p = Vec2::new(px, py);
        prop_assume!(boundary_distance(p, &l) > 1e-6);
        prop_assert_eq!(
            point_in_polygon(p, &l).unwrap(),
            point_in_polygon(rot(p) + Vec2::new(tx, ty), &moved).unwrap()
        );
    }

    #[test]
    fn los_is_symmetric(a in 0usize..400, b in 0usize..400) {
        let grid = random_grid(7, 20, 0.2);
        let (pa, pb) = (grid.center(grid.unflat(a)), grid.center(grid.unflat(b)));
        prop_assert_eq!(raycast_los(&grid, pa, pb).unwrap(), raycast_los(&grid, pb, pa).unwrap());
    }

    #[test]
    fn ipm_round_trip_within_frustum(
        x in -20.0f64..20.0, y in -20.0f64..20.0, heading in -PI..PI, dist in 0.5f64..8.0, bearing in -PI..PI,
    ) {
        let pose = Pose::new(x, y, heading, 0);
        let p = pose.position() + Vec2::new(bearing.cos(), bearing.sin()) * dist;
        for cam in default_rig() {
            if let Some(px) = project_to_pixel([p.x, p.y, 0.0], &cam, &pose).pixel() {
                let back = ipm_project(px, &cam, &pose).unwrap();
                prop_assert!(back.distance(p) < 0.05, "error {}", back.distance(p));
            }
        }
    }

    #[test]
    fn rotations_keep_heading_normalized(turns in proptest::collection::vec(-20.0f64..20.0, 1..50)) {
        let mut pose = Pose::new(0.0, 0.0, 0.0, 0);
        for t in turns {
            pose = pose.rotated(t);
            prop_assert!((-PI..PI).contains(&pose.heading));
        }
    }
}

#[test]
fn point_behind_camera_is_out_of_frame_and_axis_point_hits_principal_point() {
    let cam = default_rig()[0];
    let pose = Pose::new(0.0, 0.0, 0.0, 0);
    assert!(project_to_pixel([-2.0, 0.0, 0.0], &cam, &pose).pixel().is_none());
    // a point on the optical axis 2 m ahead of the camera centre
    let d = 2.0;
    let p = [d * cam.pitch.cos(), 0.0, cam.mount_height - d * cam.pitch.sin()];
    let (u, v) = project_to_pixel(p, &cam, &pose).pixel().unwrap();
    let (cx, cy) = cam.principal_point();
    assert!((u - cx).abs() < 1e-9 && (v - cy).abs() < 1e-9);
}
