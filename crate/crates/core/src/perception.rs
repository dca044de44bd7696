//! Ground-truth perception oracle.
//!
//! Stands in for a learned detector: a GT node or object is reported when it
//! is within range, lands inside at least one camera image, and has an
//! unobstructed line of sight from the agent. Detections are expressed in
//! pixel space so downstream code has to lift them back to the floor.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{project_to_pixel, raycast_los, CameraModel, Pose, Vec2};
use crate::scene::{Scene, SnaType};

pub const DEFAULT_RANGE_M: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error("pose ({x:.3}, {y:.3}) on floor {floor} is not on a free cell")]
    InvalidPose { x: f64, y: f64, floor: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub camera_index: usize,
    pub pixel: (f64, f64),
    pub sna_type: SnaType,
    /// Ground-truth node id. Bookkeeping only; the planner never reads it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_gt_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalObservation {
    pub detections: Vec<Detection>,
    /// Pairs of indices into `detections`, `a < b`, sorted.
    pub local_edges: Vec<(usize, usize)>,
    pub room_label: String,
    /// Sorted, deduplicated object categories.
    pub visible_objects: Vec<String>,
    pub pose_at_capture: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub pixel_sigma: f64,
    pub dropout_prob: f64,
    pub type_confusion_prob: f64,
    pub rng_seed: u64,
}

impl NoiseModel {
    pub fn is_valid(&self) -> bool {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        self.pixel_sigma >= 0.0
            && self.pixel_sigma.is_finite()
            && unit(self.dropout_prob)
            && unit(self.type_confusion_prob)
    }
}

/// Per-episode noise state. Each episode owns one; it is never shared.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    model: NoiseModel,
    rng: ChaCha8Rng,
}

impl NoiseSampler {
    pub fn new(model: NoiseModel) -> Self {
        Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(model.rng_seed),
        }
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }
}

/// Four cameras at 90° yaw spacing, 110°×104° field of view, 720×640 pixels,
/// mounted 0.6 m above the floor and tilted 15° down.
pub fn default_rig() -> Vec<CameraModel> {
    (0..4)
        .map(|k| CameraModel {
            yaw_offset: (90.0 * k as f64).to_radians(),
            hfov: 110f64.to_radians(),
            vfov: 104f64.to_radians(),
            image_width: 720,
            image_height: 640,
            mount_height: 0.6,
            pitch: 15f64.to_radians(),
        })
        .collect()
}

/// Best-centred view of a ground point across the rig: `(camera, u, v)`.
///
/// Range and line of sight are not checked here.
pub fn best_view(rig: &[CameraModel], pose: &Pose, p: Vec2) -> Option<(usize, f64, f64)> {
    let mut best: Option<(f64, usize, f64, f64)> = None;
    for (k, cam) in rig.iter().enumerate() {
        if let Some((u, v)) = project_to_pixel([p.x, p.y, 0.0], cam, pose).pixel() {
            let (cx, cy) = cam.principal_point();
            let off = (u - cx).hypot(v - cy);
            // strict comparison keeps the lower camera index on ties
            if best.is_none_or(|b| off < b.0) {
                best = Some((off, k, u, v));
            }
        }
    }
    best.map(|(_, k, u, v)| (k, u, v))
}

fn visible(scene: &Scene, pose: &Pose, p: Vec2, range_m: f64) -> bool {
    let grid = &scene.floors[pose.floor].grid;
    pose.position().distance(p) <= range_m && raycast_los(grid, pose.position(), p).unwrap_or(false)
}

/// One multi-camera observation from `pose`.
pub fn observe(
    scene: &Scene,
    pose: &Pose,
    rig: &[CameraModel],
    range_m: f64,
    noise: Option<&mut NoiseSampler>,
) -> Result<LocalObservation, PerceptionError> {
    let invalid = PerceptionError::InvalidPose {
        x: pose.x,
        y: pose.y,
        floor: pose.floor,
    };
    if !scene.is_free(pose.position(), pose.floor) {
        return Err(invalid);
    }
    let floor = scene.floor(pose.floor);
    let room_label = scene
        .room_at(pose.position(), pose.floor)
        .map_err(|_| invalid)?
        .to_string();

    // (gt index, detection)
    let mut seen: Vec<(usize, Detection)> = Vec::new();
    for (i, node) in floor.nodes.iter().enumerate() {
        if !visible(scene, pose, node.position, range_m) {
            continue;
        }
        if let Some((k, u, v)) = best_view(rig, pose, node.position) {
            seen.push((
                i,
                Detection {
                    camera_index: k,
                    pixel: (u, v),
                    sna_type: node.sna_type,
                    source_gt_id: Some(node.id.clone()),
                },
            ));
        }
    }

    if let Some(sampler) = noise {
        seen = apply_noise(sampler, rig, seen);
    }

    let slot: std::collections::BTreeMap<usize, usize> =
        seen.iter().enumerate().map(|(k, (gt, _))| (*gt, k)).collect();
    let mut local_edges: Vec<(usize, usize)> = floor
        .edges
        .iter()
        .filter_map(|(a, b)| {
            let (x, y) = (*slot.get(a)?, *slot.get(b)?);
            Some((x.min(y), x.max(y)))
        })
        .collect();
    local_edges.sort_unstable();

    let visible_objects: BTreeSet<String> = floor
        .objects
        .iter()
        .filter(|o| visible(scene, pose, o.position, range_m) && best_view(rig, pose, o.position).is_some())
        .map(|o| o.category.clone())
        .collect();

    Ok(LocalObservation {
        detections: seen.into_iter().map(|(_, d)| d).collect(),
        local_edges,
        room_label,
        visible_objects: visible_objects.into_iter().collect(),
        pose_at_capture: *pose,
    })
}

fn apply_noise(
    sampler: &mut NoiseSampler,
    rig: &[CameraModel],
    seen: Vec<(usize, Detection)>,
) -> Vec<(usize, Detection)> {
    let m = sampler.model;
    let jitter = Normal::new(0.0, m.pixel_sigma.max(0.0)).expect("finite sigma");
    let mut out = Vec::with_capacity(seen.len());
    for (gt, mut det) in seen {
        // A fixed number of draws per detection regardless of outcome keeps the stream
        // aligned across parameter changes.
        let drop = sampler.rng.gen::<f64>() < m.dropout_prob;
        let du = jitter.sample(&mut sampler.rng);
        let dv = jitter.sample(&mut sampler.rng);
        let confuse = sampler.rng.gen::<f64>() < m.type_confusion_prob;
        let pick = sampler.rng.gen_range(0..4usize);
        if drop {
            continue;
        }
        let cam = &rig[det.camera_index];
        let max_u = cam.image_width as f64 - 1e-6;
        let max_v = cam.image_height as f64 - 1e-6;
        det.pixel = (
            (det.pixel.0 + du).clamp(0.0, max_u),
            (det.pixel.1 + dv).clamp(0.0, max_v),
        );
        if confuse {
            let others: Vec<SnaType> = SnaType::KNOWN
                .iter()
                .copied()
                .filter(|t| *t != det.sna_type)
                .chain(std::iter::once(SnaType::Unknown))
                .collect();
            det.sna_type = others[pick % others.len()];
        }
        out.push((gt, det));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::load_scene;

    const OPEN_ROOM: &str = include_str!("../tests/fixtures/open_room.json");

    #[test]
    fn rig_covers_full_circle_with_overlap() {
        let rig = default_rig();
        assert_eq!(rig.len(), 4);
        for w in rig.windows(2) {
            let gap = (w[1].yaw_offset - w[0].yaw_offset).to_degrees();
            assert!((w[0].hfov.to_degrees() - gap - 20.0).abs() < 1e-9);
        }
        let covered: f64 = rig.iter().map(|c| c.hfov.to_degrees()).sum();
        assert!(covered > 360.0);
    }

    #[test]
    fn node_ahead_is_detected_on_front_camera() {
        let s = load_scene(OPEN_ROOM).unwrap();
        let rig = default_rig();
        let pose = Pose::new(1.05, 2.05, 0.0, 0);
        let obs = observe(&s, &pose, &rig, DEFAULT_RANGE_M, None).unwrap();
        let d = obs
            .detections
            .iter()
            .find(|d| d.source_gt_id.as_deref() == Some("ahead"))
            .unwrap();
        assert_eq!(d.camera_index, 0);
        assert_eq!(d.sna_type, SnaType::RoomEntry);
        let expect = project_to_pixel([3.05, 2.05, 0.0], &rig[0], &pose).pixel().unwrap();
        assert!((d.pixel.0 - expect.0).abs() < 1e-9 && (d.pixel.1 - expect.1).abs() < 1e-9);
    }

    #[test]
    fn full_dropout_keeps_room_label() {
        let s = load_scene(OPEN_ROOM).unwrap();
        let mut noise = NoiseSampler::new(NoiseModel {
            pixel_sigma: 0.0,
            dropout_prob: 1.0,
            type_confusion_prob: 0.0,
            rng_seed: 1,
        });
        let obs = observe(&s, &Pose::new(1.05, 2.05, 0.0, 0), &default_rig(), 5.0, Some(&mut noise)).unwrap();
        assert!(obs.detections.is_empty());
        assert!(obs.local_edges.is_empty());
        assert_eq!(obs.room_label, "lounge");
    }

    #[test]
    fn pose_on_wall_is_rejected() {
        let s = load_scene(OPEN_ROOM).unwrap();
        let r = observe(&s, &Pose::new(0.05, 0.05, 0.0, 0), &default_rig(), 5.0, None);
        assert!(matches!(r, Err(PerceptionError::InvalidPose { .. })));
    }
}
