use std::collections::BTreeSet;

use explorer_core::geometry::{project_to_pixel, raycast_los, Pose};
use explorer_core::perception::{default_rig, observe, NoiseModel, NoiseSampler, DEFAULT_RANGE_M};
use explorer_core::scene::{generate_scene, load_scene, sample_start, GenParams, Scene, SnaType};

const OPEN_ROOM: &str = include_str!("fixtures/open_room.json");

fn scene() -> Scene {
    generate_scene(3, &GenParams::default()).unwrap()
}

fn poses(scene: &Scene, n: u64) -> Vec<Pose> {
    (0..n).map(|k| sample_start(scene, 100 + k, 0.0, 0.0).unwrap()).collect()
}

fn in_some_frustum(p: [f64; 3], pose: &Pose) -> bool {
    default_rig().iter().any(|c| project_to_pixel(p, c, pose).pixel().is_some())
}

#[test]
fn detections_match_brute_force_visibility() {
    let s = scene();
    for pose in poses(&s, 10) {
        let obs = observe(&s, &pose, &default_rig(), DEFAULT_RANGE_M, None).unwrap();
        let grid = &s.floors[0].grid;
        let want: BTreeSet<String> = s.floors[0]
            .nodes
            .iter()
            .filter(|n| {
                n.position.distance(pose.position()) <= DEFAULT_RANGE_M
                    && in_some_frustum([n.position.x, n.position.y, 0.0], &pose)
                    && raycast_los(grid, pose.position(), n.position).unwrap()
            })
            .map(|n| n.id.clone())
            .collect();
        let got: Vec<String> = obs.detections.iter().map(|d| d.source_gt_id.clone().unwrap()).collect();
        let unique: BTreeSet<String> = got.iter().cloned().collect();
        assert_eq!(unique.len(), got.len(), "a node was reported twice");
        assert_eq!(unique, want);

        let objects: BTreeSet<String> = s.floors[0]
            .objects
            .iter()
            .filter(|o| {
                o.position.distance(pose.position()) <= DEFAULT_RANGE_M
                    && in_some_frustum([o.position.x, o.position.y, 0.0], &pose)
                    && raycast_los(grid, pose.position(), o.position).unwrap()
            })
            .map(|o| o.category.clone())
            .collect();
        assert_eq!(obs.visible_objects, objects.into_iter().collect::<Vec<_>>());
        assert_eq!(obs.room_label, s.room_at(pose.position(), 0).unwrap());
        for &(a, b) in &obs.local_edges {
            assert!(a < b && b < obs.detections.len());
        }
    }
}

#[test]
fn node_behind_wall_is_not_detected() {
    let s = load_scene(OPEN_ROOM).unwrap();
    // the wall at x = 4.5 hides "hidden" from the left part of the room
    let pose = Pose::new(2.05, 1.05, 0.0, 0);
    let obs = observe(&s, &pose, &default_rig(), DEFAULT_RANGE_M, None).unwrap();
    assert!(obs.detections.iter().all(|d| d.source_gt_id.as_deref() != Some("hidden")));
    assert!(!obs.visible_objects.contains(&"plant".to_string()));
}

#[test]
fn larger_range_never_removes_detections() {
    let s = scene();
    for pose in poses(&s, 10) {
        let ids = |r: f64| -> BTreeSet<String> {
            observe(&s, &pose, &default_rig(), r, None)
                .unwrap()
                .detections
                .into_iter()
                .map(|d| d.source_gt_id.unwrap())
                .collect()
        };
        let mut prev = BTreeSet::new();
        for r in [1.0, 2.5, 5.0, 8.0] {
            let cur = ids(r);
            assert!(prev.is_subset(&cur));
            prev = cur;
        }
    }
}

#[test]
fn noise_is_seeded_and_bounded() {
    let s = scene();
    let model = NoiseModel {
        pixel_sigma: 3.0,
        dropout_prob: 0.3,
        type_confusion_prob: 0.5,
        rng_seed: 42,
    };
    let run = || {
        let mut sampler = NoiseSampler::new(model);
        poses(&s, 10)
            .iter()
            .map(|p| observe(&s, p, &default_rig(), DEFAULT_RANGE_M, Some(&mut sampler)).unwrap())
            .collect::<Vec<_>>()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    let rig = default_rig();
    let mut saw_unknown = false;
    for obs in &a {
        for d in &obs.detections {
            assert!(rig[d.camera_index].contains_pixel(d.pixel.0, d.pixel.1));
            saw_unknown |= d.sna_type == SnaType::Unknown;
        }
    }
    assert!(saw_unknown, "confusion at 0.5 should produce some unknown types");
    for pose in poses(&s, 10) {
        let clean = observe(&s, &pose, &rig, DEFAULT_RANGE_M, None).unwrap();
        assert!(clean.detections.iter().all(|d| d.sna_type != SnaType::Unknown));
    }
}
