use explorer_core::episode::{parse_jsonl, replay, EventKind, TerminationReason};
use explorer_core::evalkit::coverage_topo;
use explorer_core::geometry::{Pose, Vec2};
use explorer_core::perception::{default_rig, NoiseModel};
use explorer_core::planner::{execute_leg, run_episode, select_subgoal, PlannerParams};
use explorer_core::scene::{generate_scene, load_scene, sample_start, GenParams, Scene};
use explorer_core::sgmemo::MemoParams;

const ONE_ROOM: &str = include_str!("fixtures/one_room.json");

fn episode(scene: &Scene, seed: u64, budget_m: f64, noise: Option<NoiseModel>) -> explorer_core::episode::EpisodeLog {
    let start = sample_start(scene, seed, 0.3, 1.0).unwrap();
    let params = PlannerParams {
        budget_m,
        ..PlannerParams::default()
    };
    run_episode(scene, start, MemoParams::default(), params, &default_rig(), noise).unwrap()
}

fn assert_log_invariants(scene: &Scene, log: &explorer_core::episode::EpisodeLog) {
    assert_eq!(log.poses.len(), log.distances.len());
    for (p, w) in log.poses.iter().zip(log.distances.windows(2).map(|w| w[1] - w[0]).chain([0.0])) {
        assert!(scene.is_free(p.position(), p.floor), "pose {p:?} off free space");
        assert!(w >= 0.0, "distance decreased");
    }
    let terminated: Vec<usize> = log
        .events
        .iter()
        .enumerate()
        .filter(|(_, e)| matches!(e.kind, EventKind::Terminated { .. }))
        .map(|(i, _)| i)
        .collect();
    assert_eq!(terminated, vec![log.events.len() - 1]);
    assert_eq!(log.final_memo.validate(), Ok(()));
}

#[test]
fn single_room_terminates_explored() {
    let scene = load_scene(ONE_ROOM).unwrap();
    let start = Pose::new(2.25, 1.75, 0.0, 0);
    let log = run_episode(
        &scene,
        start,
        MemoParams::default(),
        PlannerParams::default(),
        &default_rig(),
        None,
    )
    .unwrap();
    assert_eq!(log.termination, TerminationReason::Explored);
    let visited = log.final_memo.nodes().filter(|n| n.is_visited()).count();
    assert!((1..=2).contains(&visited), "{visited} visited nodes");
    assert_log_invariants(&scene, &log);
}

#[test]
fn small_budget_stops_early() {
    let scene = generate_scene(4, &GenParams::default()).unwrap();
    let log = episode(&scene, 4, 0.5, None);
    assert_eq!(log.termination, TerminationReason::Budget);
    assert!(log.path_length_m() <= 0.5 + PlannerParams::default().step_m + 1e-9);
    assert_log_invariants(&scene, &log);
}

#[test]
fn invalid_start_is_rejected() {
    let scene = load_scene(ONE_ROOM).unwrap();
    let wall = Pose::new(0.25, 0.25, 0.0, 0);
    let r = run_episode(&scene, wall, MemoParams::default(), PlannerParams::default(), &default_rig(), None);
    assert!(r.is_err());
    let bad = PlannerParams {
        heading_cone_deg: 120.0,
        ..PlannerParams::default()
    };
    let r = run_episode(&scene, Pose::new(1.25, 1.25, 0.0, 0), MemoParams::default(), bad, &default_rig(), None);
    assert!(r.is_err());
}

#[test]
fn generated_scenes_reach_full_node_recall_at_200m() {
    // averaged: individual seeds may leave a corner node just outside 2 m
    let mut total = 0.0;
    for seed in 1..=10 {
        let scene = generate_scene(seed, &GenParams::default()).unwrap();
        let log = episode(&scene, seed, 200.0, None);
        let (_, cr) = coverage_topo(&scene, &log.poses, &log.distances);
        total += cr;
    }
    assert!(total / 10.0 >= 0.97, "mean CR_topo {}", total / 10.0);
}

#[test]
fn unlimited_budget_always_terminates_explored() {
    for seed in 1..=100 {
        let params = GenParams {
            floors: 1 + (seed % 2) as usize,
            rooms_per_floor: 2 + (seed % 7) as usize,
            ..GenParams::default()
        };
        let scene = generate_scene(seed, &params).unwrap();
        let log = episode(&scene, seed, f64::INFINITY, None);
        assert_eq!(log.termination, TerminationReason::Explored, "seed {seed}");
        assert_log_invariants(&scene, &log);
        assert!(log.final_memo.nodes().all(|n| n.is_visited()), "seed {seed} left unvisited nodes");
        let pose = *log.poses.last().unwrap();
        assert!(select_subgoal(&log.final_memo, &pose, &PlannerParams::default()).is_none());
    }
}

#[test]
fn replay_reproduces_the_final_memo_bytes() {
    let noise = NoiseModel {
        pixel_sigma: 3.0,
        dropout_prob: 0.2,
        type_confusion_prob: 0.1,
        rng_seed: 5,
    };
    for (seed, floors, noise) in [(1u64, 1usize, None), (2, 2, None), (3, 1, Some(noise)), (6, 2, Some(noise))] {
        let scene = generate_scene(
            seed,
            &GenParams {
                floors,
                ..GenParams::default()
            },
        )
        .unwrap();
        let log = episode(&scene, seed, 300.0, noise);
        let want = log.final_memo.to_json();
        let direct = replay(&log.header, &log.poses, &log.events).unwrap();
        assert_eq!(direct.to_json(), want);
        let parsed = parse_jsonl(&log.to_jsonl()).unwrap();
        assert_eq!(parsed.termination(), Some(log.termination));
        let again = replay(&parsed.header, &parsed.poses, &parsed.events).unwrap();
        assert_eq!(again.to_json(), want);
    }
}

#[test]
fn episodes_are_deterministic() {
    let scene = generate_scene(9, &GenParams::default()).unwrap();
    let noise = Some(NoiseModel {
        pixel_sigma: 3.0,
        dropout_prob: 0.3,
        type_confusion_prob: 0.0,
        rng_seed: 7,
    });
    let a = episode(&scene, 9, 300.0, noise);
    let b = episode(&scene, 9, 300.0, noise);
    assert_eq!(a.to_jsonl(), b.to_jsonl());
    assert_eq!(a.final_memo.to_json(), b.final_memo.to_json());
}

#[test]
fn two_floor_episode_changes_floor() {
    let scene = generate_scene(
        3,
        &GenParams {
            floors: 2,
            ..GenParams::default()
        },
    )
    .unwrap();
    let log = episode(&scene, 3, 600.0, None);
    assert!(log
        .events
        .iter()
        .any(|e| matches!(e.kind, EventKind::StairTransition { .. })));
    assert!(log.poses.iter().any(|p| p.floor == 1));
    assert_log_invariants(&scene, &log);
}

#[test]
fn straight_leg_is_monotone_with_17_poses() {
    let row_wall = "#".repeat(12);
    let row_free = format!("#{}#", ".".repeat(10));
    let doc = format!(
        r#"{{"resolution": 0.5, "floors": [{{"grid": ["{row_wall}", "{row_free}", "{row_wall}"],
        "rooms": [], "nodes": [], "edges": [], "objects": []}}], "stair_links": []}}"#
    );
    let scene = load_scene(&doc).unwrap();
    let leg = execute_leg(&scene, &Pose::new(0.75, 0.75, 0.0, 0), (Vec2::new(4.75, 0.75), 0), 0.25).unwrap();
    assert_eq!(leg.poses.len(), 17);
    assert!(leg.poses.windows(2).all(|w| w[1].x > w[0].x));
    assert!(leg.poses.iter().all(|p| p.heading.abs() < 1e-12));
    assert!((leg.length_m() - 4.0).abs() < 1e-9);
}

#[test]
fn leg_around_corner_respects_walls() {
    let rows = ["#######", "#.....#", "#####.#", "#####.#", "#.....#", "#######"];
    let doc = format!(
        r#"{{"resolution": 0.5, "floors": [{{"grid": {},
        "rooms": [], "nodes": [], "edges": [], "objects": []}}], "stair_links": []}}"#,
        serde_json::to_string(&rows).unwrap()
    );
    let scene = load_scene(&doc).unwrap();
    let (a, b) = (Vec2::new(0.75, 0.75), Vec2::new(0.75, 2.25));
    let leg = execute_leg(&scene, &Pose::new(a.x, a.y, 0.0, 0), (b, 0), 0.25).unwrap();
    assert!(leg.length_m() >= (a.x - b.x).abs() + (a.y - b.y).abs());
    assert!(leg.poses.iter().all(|p| scene.is_free(p.position(), 0)));
    assert!(leg.poses.last().unwrap().position().distance(b) < 1e-9);
}
