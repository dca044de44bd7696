use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use explorer_core::baselines::frontier_explore;
use explorer_core::evalkit::{
    auc, coverage_occ, coverage_topo, discovery_distances, downstream, evaluate, graph_quality, grounding_queries,
    gt_memo, node_grounding_eval, objectnav_eval, room_identification_eval, room_queries, AucError, CoverageCurve,
    OCC_RANGE_M,
};
use explorer_core::geometry::{Pose, Vec2};
use explorer_core::perception::default_rig;
use explorer_core::planner::{run_episode, PlannerParams};
use explorer_core::scene::{generate_scene, load_scene, sample_start, GenParams, NodeRef, Scene, SnaType, CORRIDOR};
use explorer_core::sgmemo::{MemoNode, MemoParams, NodeStatus, SgMemo};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

fn grid_scene(rows: &[&str], res: f64, nodes: serde_json::Value, rooms: serde_json::Value) -> Scene {
    let doc = json!({
        "resolution": res,
        "floors": [{"grid": rows, "rooms": rooms, "nodes": nodes, "edges": [], "objects": []}],
        "stair_links": [],
    });
    load_scene(&doc.to_string()).unwrap()
}

fn open_rows(w: usize, h: usize) -> Vec<String> {
    let wall = "#".repeat(w + 2);
    let free = format!("#{}#", ".".repeat(w));
    let mut rows = vec![wall.clone()];
    rows.extend(std::iter::repeat_n(free, h));
    rows.push(wall);
    rows
}

fn sna_log(scene: &Scene, seed: u64) -> explorer_core::episode::EpisodeLog {
    let start = sample_start(scene, seed, 0.3, 1.0).unwrap();
    run_episode(scene, start, MemoParams::default(), PlannerParams::default(), &default_rig(), None).unwrap()
}

fn curve(samples: &[(f64, f64)]) -> CoverageCurve {
    CoverageCurve {
        samples: samples.to_vec(),
    }
}

#[test]
fn auc_staircases() {
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    assert!(close(auc(&curve(&[(0.0, 1.0)]), 10.0).unwrap(), 1.0));
    assert!(close(auc(&curve(&[(0.0, 0.0), (5.0, 1.0)]), 10.0).unwrap(), 0.5));
    // 0 -> 0.5 at a quarter of the path, -> 1.0 at half of it
    assert!(close(auc(&curve(&[(0.0, 0.0), (2.5, 0.5), (5.0, 1.0)]), 10.0).unwrap(), 0.625));
    // the same staircase with its second step at three quarters
    assert!(close(auc(&curve(&[(0.0, 0.0), (2.5, 0.5), (7.5, 1.0)]), 10.0).unwrap(), 0.5));
    assert_eq!(auc(&curve(&[(0.0, 0.4)]), 0.0), Err(AucError::ZeroLength { coverage: 0.4 }));
}

#[test]
fn discovery_radius_is_a_closed_ball() {
    let rows = open_rows(30, 3);
    let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
    let scene = grid_scene(&rows, 0.5, json!([{"id": "n", "pos": [0.75, 0.75], "type": "normal"}]), json!([]));
    let at = |x: f64| {
        let (_, cr) = coverage_topo(&scene, &[Pose::new(x, 0.75, 0.0, 0)], &[0.0]);
        cr
    };
    assert_eq!(at(2.75), 1.0);
    assert_eq!(at(2.76), 0.0);
}

fn brute_force_discovery(scene: &Scene, poses: &[Pose], dist: &[f64]) -> BTreeMap<NodeRef, f64> {
    let mut out = BTreeMap::new();
    for (f, fl) in scene.floors.iter().enumerate() {
        for (i, n) in fl.nodes.iter().enumerate() {
            let mut first: Option<f64> = None;
            for (p, d) in poses.iter().zip(dist) {
                let dx = p.x - n.position.x;
                let dy = p.y - n.position.y;
                if p.floor == f && dx * dx + dy * dy <= 4.0 + 1e-9 {
                    first = Some(first.map_or(*d, |v: f64| v.min(*d)));
                }
            }
            if let Some(d) = first {
                out.insert(NodeRef { floor: f, index: i }, d);
            }
        }
    }
    out
}

#[test]
fn topological_coverage_matches_all_pairs_check_on_random_logs() {
    let two = GenParams {
        floors: 2,
        ..GenParams::default()
    };
    let scenes = [generate_scene(1, &GenParams::default()).unwrap(), generate_scene(2, &two).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..100 {
        let scene = &scenes[case % 2];
        let n = rng.gen_range(1..60);
        let mut poses = Vec::new();
        let mut dist = Vec::new();
        let mut d = 0.0;
        for _ in 0..n {
            let floor = rng.gen_range(0..scene.floors.len());
            let fl = &scene.floors[floor].grid;
            let free: Vec<_> = fl.free_cells().collect();
            let c = fl.center(free[rng.gen_range(0..free.len())]);
            poses.push(Pose::new(c.x, c.y, 0.0, floor));
            d += if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.1..3.0) };
            dist.push(d);
        }
        let want = brute_force_discovery(scene, &poses, &dist);
        assert_eq!(discovery_distances(scene, &poses, &dist), want, "case {case}");
        let (c, cr) = coverage_topo(scene, &poses, &dist);
        assert_eq!(cr, want.len() as f64 / scene.node_count() as f64);
        assert_eq!(c.samples[0], (0.0, c.at(0.0)));
        assert!(c.samples.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        for &v in want.values() {
            let expect = want.values().filter(|&&u| u <= v).count() as f64 / scene.node_count() as f64;
            assert!((c.at(v) - expect).abs() < 1e-12);
        }
        // prefixes never cover more
        let k = rng.gen_range(0..=n);
        let (_, prefix) = coverage_topo(scene, &poses[..k], &dist[..k]);
        assert!(prefix <= cr);
    }
}

#[test]
fn stationary_occupancy_coverage_is_the_sensor_disk() {
    // 30 m x 30 m empty room at 0.25 m, agent in the middle
    let n = 120;
    let rows = open_rows(n, n);
    let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
    let res = 0.25;
    let scene = grid_scene(&rows, res, json!([]), json!([]));
    let p = Pose::new(15.125, 15.125, 0.0, 0);
    let (_, cr) = coverage_occ(&scene, &[p], &[0.0], OCC_RANGE_M);

    let mut inside = 0usize;
    for r in 1..=n {
        for c in 1..=n {
            let (x, y) = ((c as f64 + 0.5) * res, (r as f64 + 0.5) * res);
            if (x - p.x).hypot(y - p.y) <= OCC_RANGE_M {
                inside += 1;
            }
        }
    }
    let free = (n * n) as f64;
    assert!((cr - inside as f64 / free).abs() < 1e-12);
    let disk = PI * OCC_RANGE_M * OCC_RANGE_M / (res * res);
    assert!((inside as f64 - disk).abs() / disk < 0.02, "{inside} vs {disk}");
}

#[test]
fn sealed_chamber_is_never_covered() {
    let rows = [
        "############",
        "#.....#....#",
        "#.....#....#",
        "#.....#....#",
        "############",
    ];
    let scene = grid_scene(&rows, 0.5, json!([]), json!([]));
    let poses: Vec<Pose> = (0..5).map(|k| Pose::new(0.75 + 0.5 * k as f64, 1.25, 0.0, 0)).collect();
    let dist: Vec<f64> = (0..5).map(|k| 0.5 * k as f64).collect();
    let (_, cr) = coverage_occ(&scene, &poses, &dist, 10.0);
    assert!((cr - 15.0 / 27.0).abs() < 1e-12, "{cr}");
}

fn gen(seed: u64) -> Scene {
    generate_scene(seed, &GenParams::default()).unwrap()
}

#[test]
fn ground_truth_memo_is_the_ceiling() {
    for seed in 1..=6 {
        let scene = gen(seed);
        let memo = gt_memo(&scene);
        assert_eq!(memo.validate(), Ok(()));
        let q = graph_quality(&memo, &scene);
        assert_eq!((q.room_coverage, q.room_type_acc, q.object_recall), (1.0, 1.0, 1.0), "seed {seed}");
        let d = downstream(&memo, &scene, 0);
        assert_eq!(d.room_identification, 1.0, "seed {seed}");
        assert_eq!(d.node_grounding, 1.0, "seed {seed}");
        assert_eq!(d.objectnav_sr, 1.0, "seed {seed}");
        assert!(d.objectnav_spl >= 0.9 && d.objectnav_spl <= d.objectnav_sr, "seed {seed}: {}", d.objectnav_spl);
    }
}

#[test]
fn graph_quality_examples() {
    let scene = gen(2);
    // one visited node per room at its centroid, correctly labelled
    let mut nodes = Vec::new();
    for (i, room) in scene.floors[0].rooms.iter().enumerate() {
        let c = room.polygon.iter().fold(Vec2::default(), |a, v| a + *v) * (1.0 / room.polygon.len() as f64);
        let mut n = MemoNode::new(i as u64, c, 0, SnaType::Normal, NodeStatus::Visited);
        n.room_votes.insert(room.category.clone(), 1);
        nodes.push(n);
    }
    let edges: Vec<(u64, u64)> = (1..nodes.len() as u64).map(|i| (i - 1, i)).collect();
    let memo = SgMemo::from_parts(MemoParams::default(), nodes, &edges, 0).unwrap();
    let q = graph_quality(&memo, &scene);
    assert_eq!((q.room_coverage, q.room_type_acc), (1.0, 1.0));

    // a lone corridor root carries nothing
    let corridor_pt = scene.floors[0]
        .nodes
        .iter()
        .find(|n| scene.room_at(n.position, 0).unwrap() == CORRIDOR)
        .unwrap()
        .position;
    let mut root = MemoNode::new(0, corridor_pt, 0, SnaType::Normal, NodeStatus::Visited);
    root.room_votes.insert(CORRIDOR.to_string(), 1);
    let memo = SgMemo::from_parts(MemoParams::default(), vec![root], &[], 0).unwrap();
    let q = graph_quality(&memo, &scene);
    assert_eq!((q.room_coverage, q.room_type_acc, q.object_recall), (0.0, 0.0, 0.0));
}

#[test]
fn objectnav_counts_absent_categories_as_failures() {
    let scene = gen(3);
    let memo = gt_memo(&scene);
    let present = scene.floors[0].objects[0].category.clone();
    let r = objectnav_eval(&memo, &scene, &[present.clone(), "unicorn".to_string()], 0);
    assert_eq!(r.sr, 0.5);
    assert!(r.spl <= r.sr);

    // starting on the object's own node: route and shortest path coincide
    let obj = scene.floors[0].objects[0].position;
    let id = memo
        .nodes()
        .filter(|n| n.object_set.contains(&present))
        .min_by(|a, b| a.position.distance(obj).total_cmp(&b.position.distance(obj)))
        .unwrap()
        .id;
    let r = objectnav_eval(&memo, &scene, &[present], id);
    assert_eq!(r.sr, 1.0);
    assert!(r.spl <= 1.0);
}

#[test]
fn grounding_fails_exactly_for_a_mislabelled_room() {
    let scene = gen(4);
    let gt = gt_memo(&scene);
    let queries = grounding_queries(&scene);
    let target_room = scene.floors[0].rooms[0].category.clone();
    let in_room0 = |p: Vec2| scene.room_index_at(p, 0) == Some(0);
    let nodes: Vec<MemoNode> = gt
        .nodes()
        .cloned()
        .map(|mut n| {
            if n.floor == 0 && in_room0(n.position) {
                n.room_votes = BTreeMap::from([("attic".to_string(), 1)]);
            }
            n
        })
        .collect();
    let memo = SgMemo::from_parts(MemoParams::default(), nodes, &gt.edges(), 0).unwrap();
    let lost = queries
        .iter()
        .filter(|q| q.target.floor == 0 && in_room0(scene.node(q.target).position))
        .count();
    assert!(lost > 0);
    let got = node_grounding_eval(&memo, &scene, &queries);
    assert!((got - (queries.len() - lost) as f64 / queries.len() as f64).abs() < 1e-12);
    assert!(queries.iter().any(|q| q.room_category == target_room));
}

#[test]
fn room_identification_with_duplicate_inventories_breaks_ties_by_lowest_id() {
    // two identical rooms with one chair each
    let rows = open_rows(16, 4);
    let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
    let doc = json!({
        "resolution": 0.5,
        "floors": [{
            "grid": rows,
            "rooms": [
                {"polygon": [[0.5, 0.5], [4.5, 0.5], [4.5, 2.5], [0.5, 2.5]], "category": "office"},
                {"polygon": [[4.5, 0.5], [8.5, 0.5], [8.5, 2.5], [4.5, 2.5]], "category": "office"},
            ],
            "nodes": [
                {"id": "a", "pos": [2.0, 1.5], "type": "normal"},
                {"id": "b", "pos": [7.0, 1.5], "type": "normal"},
            ],
            "edges": [["a", "b"]],
            "objects": [{"category": "chair", "pos": [2.5, 1.5]}, {"category": "chair", "pos": [6.5, 1.5]}],
        }],
        "stair_links": [],
    });
    let scene = load_scene(&doc.to_string()).unwrap();
    let memo = gt_memo(&scene);
    let queries = room_queries(&scene);
    assert_eq!(queries.len(), 2);
    // one connected "office" group spanning both rooms: inside neither
    assert_eq!(room_identification_eval(&memo, &scene, &queries), 0.0);

    // separate the rooms with a corridor node: both groups match equally and
    // the lowest id wins both queries
    let node = |id: u64, x: f64, label: &str| {
        let mut n = MemoNode::new(id, Vec2::new(x, 1.5), 0, SnaType::Normal, NodeStatus::Visited);
        n.room_votes.insert(label.to_string(), 1);
        if label == "office" {
            n.object_set.insert("chair".to_string());
        }
        n
    };
    let nodes = vec![node(0, 2.0, "office"), node(1, 4.5, CORRIDOR), node(2, 7.0, "office")];
    let split = SgMemo::from_parts(MemoParams::default(), nodes, &[(0, 1), (1, 2)], 0).unwrap();
    assert_eq!(room_identification_eval(&split, &scene, &queries), 0.5);
}

#[test]
fn pipeline_memos_beat_trajectory_memos_downstream() {
    let (mut sna, mut frontier) = (0.0, 0.0);
    let mut grounding_bound_checked = 0;
    for seed in 1..=20 {
        let scene = gen(seed);
        let log = sna_log(&scene, seed);
        let report = evaluate(&scene, &log, OCC_RANGE_M);
        assert!(report.downstream.objectnav_spl <= report.downstream.objectnav_sr + 1e-12);
        assert!(report.auc_topo <= report.cr_topo + 1e-12 && report.auc_occ <= report.cr_occ + 1e-12);
        sna += report.downstream.room_identification;

        // a grounding can only succeed where a memo node sits within 2 m of the target in its room
        let queries = grounding_queries(&scene);
        let reachable = queries
            .iter()
            .filter(|q| {
                let t = scene.node(q.target);
                let room = scene.room_at(t.position, q.target.floor).unwrap();
                log.final_memo.nodes().any(|n| {
                    n.floor == q.target.floor
                        && n.position.distance(t.position) <= 2.0 + 1e-9
                        && scene.room_at(n.position, n.floor).is_ok_and(|r| r == room)
                })
            })
            .count();
        assert!(report.downstream.node_grounding <= reachable as f64 / queries.len() as f64 + 1e-12);
        grounding_bound_checked += 1;

        let start = sample_start(&scene, seed, 0.3, 1.0).unwrap();
        let flog = frontier_explore(&scene, start, OCC_RANGE_M, 300.0).unwrap();
        let fr = evaluate(&scene, &flog, OCC_RANGE_M);
        assert!(fr.downstream.objectnav_spl <= fr.downstream.objectnav_sr + 1e-12);
        frontier += fr.downstream.room_identification;
    }
    assert_eq!(grounding_bound_checked, 20);
    assert!(sna >= frontier, "room identification {} vs {}", sna / 20.0, frontier / 20.0);
}

#[test]
fn evaluation_is_pure() {
    let scene = gen(5);
    let log = sna_log(&scene, 5);
    let a = evaluate(&scene, &log, OCC_RANGE_M);
    let b = evaluate(&scene, &log, OCC_RANGE_M);
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.csv_row(), b.csv_row());
    let cats: BTreeSet<&str> = scene.floors[0].objects.iter().map(|o| o.category.as_str()).collect();
    assert!(!cats.is_empty());
}
