//! Scene-graph exploration policy and the episode loop.
//!
//! Each iteration picks an unvisited memo node (nearest one roughly ahead,
//! otherwise the one farthest away through the graph), walks to it along a
//! grid route while observing at a fixed cadence, and consolidates the memo
//! on arrival.


use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::{EpisodeHeader, EpisodeLog, Event, EventKind, TerminationReason, LOG_VERSION};
use crate::geometry::{normalize_angle, CameraModel, OccupancyGrid, Pose, Vec2};
use crate::perception::{observe, LocalObservation, NoiseModel, NoiseSampler};
use crate::scene::{Scene, SceneError, SnaType, STAIR_COST_M};
use crate::sgmemo::{lift_local, MemoError, MemoParams, SgMemo};

/// A target that moves farther than this while walking triggers a replan.
const REPLAN_SHIFT_M: f64 = 0.25;
/// Consecutive legs without any travel before the episode is declared stuck.
const MAX_IDLE_LEGS: usize = 200;
const MAX_REPLANS: usize = 32;
/// Extra observations from a standstill before a noisy episode ends as explored.
const NOISY_RELOOKS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Half-angle of the cone counted as "ahead" when choosing the next target.
    pub heading_cone_deg: f64,
    pub budget_m: f64,
    /// Pose spacing along executed paths.
    pub step_m: f64,
    /// Travel between observations while walking a leg.
    pub observe_every_m: f64,
    /// Perception range.
    pub range_m: f64,
    /// When false the agent never uses stairs.
    pub allow_stairs: bool,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            heading_cone_deg: 60.0,
            budget_m: 300.0,
            step_m: 0.25,
            observe_every_m: 1.0,
            range_m: 5.0,
            allow_stairs: true,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<(), PlannerError> {
        let bad = |m: &str| Err(PlannerError::InvalidParams(m.to_string()));
        if !(self.heading_cone_deg > 0.0 && self.heading_cone_deg <= 90.0) {
            return bad("heading_cone_deg must be in (0, 90]");
        }
        if self.budget_m.is_nan() || self.budget_m < 0.0 {
            return bad("budget_m must be non-negative");
        }
        if !(self.step_m > 0.0 && self.step_m.is_finite()) {
            return bad("step_m must be positive");
        }
        if !(self.observe_every_m > 0.0 && self.observe_every_m.is_finite()) {
            return bad("observe_every_m must be positive");
        }
        if !(self.range_m > 0.0 && self.range_m.is_finite()) {
            return bad("range_m must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("invalid planner parameters: {0}")]
    InvalidParams(String),
    #[error("start pose ({x:.3}, {y:.3}) on floor {floor} is not on a free cell")]
    InvalidStart { x: f64, y: f64, floor: usize },
    #[error(transparent)]
    Memo(#[from] MemoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subgoal {
    pub node: u64,
    /// 1: nearest node inside the heading cone; 2: farthest node by graph distance.
    pub tier: u8,
}

/// Chooses the next unvisited node to explore, or `None` when none is reachable.
pub fn select_subgoal(memo: &SgMemo, pose: &Pose, params: &PlannerParams) -> Option<Subgoal> {
    let dist = memo.graph_distances(memo.current());
    let candidates: Vec<_> = memo
        .nodes()
        .filter(|n| !n.is_visited() && dist.contains_key(&n.id))
        .collect();
    let cone = params.heading_cone_deg.to_radians();
    let here = pose.position();
    let aligned = candidates
        .iter()
        .filter(|n| n.floor == pose.floor)
        .filter_map(|n| {
            let v = n.position - here;
            let d = v.norm();
            let off = if d < 1e-9 {
                0.0
            } else {
                normalize_angle(v.y.atan2(v.x) - pose.heading).abs()
            };
            (off <= cone + 1e-12).then_some((d, n.id))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    if let Some((_, id)) = aligned {
        return Some(Subgoal { node: id, tier: 1 });
    }
    candidates
        .iter()
        .map(|n| (dist[&n.id], n.id))
        .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|(_, id)| Subgoal { node: id, tier: 2 })
}

/// A resampled route.
#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    /// Starts with the origin pose.
    pub poses: Vec<Pose>,
    /// Distance from the origin at each pose.
    pub distances: Vec<f64>,
    /// `(pose index, from floor, to floor)` for each stair traversal.
    pub stair_transitions: Vec<(usize, usize, usize)>,
}

impl Leg {
    pub fn length_m(&self) -> f64 {
        self.distances.last().copied().unwrap_or(0.0)
    }
}

/// Routes from `from` to `target` on the ground-truth grid and resamples the
/// route every `step_m`, headings following the direction of motion.
pub fn execute_leg(scene: &Scene, from: &Pose, target: (Vec2, usize), step_m: f64) -> Result<Leg, SceneError> {
    let route = scene.route((from.position(), from.floor), target)?;
    // Polyline: exact start, interior cell centres, exact target. The target
    // lies in the final route cell, so it replaces that cell's centre.
    let mut points: Vec<(usize, Vec2)> = Vec::with_capacity(route.cells.len() + 1);
    points.push((from.floor, from.position()));
    for &(f, c) in route.cells.iter().skip(1) {
        points.push((f, scene.floors[f].grid.center(c)));
    }
    if route.cells.len() >= 2 {
        *points.last_mut().expect("non-empty") = (target.1, target.0);
    } else {
        points.push((target.1, target.0));
    }
    Ok(resample(from, &points, step_m))
}

/// Resamples a polyline of `(floor, point)` vertices starting at `from`
/// every `step_m`. Floor changes between vertices are stair traversals.
pub fn resample(from: &Pose, points: &[(usize, Vec2)], step_m: f64) -> Leg {
    let mut poses = vec![*from];
    let mut distances = vec![0.0];
    let mut stair_transitions = Vec::new();
    let mut heading = from.heading;
    let mut travelled = 0.0;
    let mut since = 0.0;
    for w in points.windows(2) {
        let ((fa, a), (fb, b)) = (w[0], w[1]);
        if fa != fb {
            travelled += STAIR_COST_M;
            since = 0.0;
            poses.push(Pose::new(b.x, b.y, heading, fb));
            distances.push(travelled);
            stair_transitions.push((poses.len() - 1, fa, fb));
            continue;
        }
        let seg = b - a;
        let len = seg.norm();
        if len < 1e-12 {
            continue;
        }
        heading = seg.y.atan2(seg.x);
        let mut s = step_m - since;
        while s < len - 1e-9 {
            let p = a + seg * (s / len);
            poses.push(Pose::new(p.x, p.y, heading, fa));
            distances.push(travelled + s);
            s += step_m;
        }
        since = len - (s - step_m);
        travelled += len;
    }
    let end = points.last().expect("non-empty polyline");
    let last = *poses.last().expect("origin pose");
    if last.floor != end.0 || last.position().distance(end.1) > 1e-9 {
        poses.push(Pose::new(end.1.x, end.1.y, heading, end.0));
        distances.push(travelled);
    }
    Leg {
        poses,
        distances,
        stair_transitions,
    }
}

/// Nearest free cell centre within `radius` of `p`, or `p` itself when free.
pub fn snap_to_free(grid: &OccupancyGrid, p: Vec2, radius: f64) -> Option<Vec2> {
    if grid.is_free_point(p) {
        return Some(p);
    }
    let res = grid.resolution();
    let reach = (radius / res).ceil() as i64 + 1;
    let c0 = ((p.x / res).floor() as i64, (p.y / res).floor() as i64);
    let mut best: Option<(f64, Vec2)> = None;
    for dr in -reach..=reach {
        for dc in -reach..=reach {
            let idx = crate::geometry::GridIndex::new(c0.0 + dc, c0.1 + dr);
            if !grid.contains(idx) || !grid.is_free(idx) {
                continue;
            }
            let q = grid.center(idx);
            let d = q.distance(p);
            if d <= radius && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, q));
            }
        }
    }
    best.map(|(_, q)| q)
}

enum Outcome {
    Continue { moved: bool },
    Terminate(TerminationReason),
}

struct Runner<'a> {
    scene: &'a Scene,
    rig: &'a [CameraModel],
    memo_params: MemoParams,
    params: PlannerParams,
    sampler: Option<NoiseSampler>,
    memo: SgMemo,
    poses: Vec<Pose>,
    distances: Vec<f64>,
    events: Vec<Event>,
    since_obs: f64,
}

impl Runner<'_> {
    fn push(&mut self, kind: EventKind) {
        self.events.push(Event {
            pose_index: self.poses.len() - 1,
            kind,
        });
    }

    fn travelled(&self) -> f64 {
        *self.distances.last().expect("start pose")
    }

    fn observe(&mut self) -> Option<LocalObservation> {
        let pose = *self.poses.last().expect("start pose");
        let obs = observe(self.scene, &pose, self.rig, self.params.range_m, self.sampler.as_mut()).ok()?;
        self.since_obs = 0.0;
        self.push(EventKind::Observed { obs: obs.clone() });
        Some(obs)
    }

    fn integrate(&mut self, obs: &LocalObservation) {
        let pose = obs.pose_at_capture;
        let local = lift_local(obs, self.rig, &pose);
        let candidates = self.memo.integrate(&local, &pose);
        self.push(EventKind::Integrated { candidates });
    }

    fn drop_target(&mut self, node: u64, reason: &str) {
        if self.memo.remove_unvisited(node).is_ok() {
            self.push(EventKind::SubgoalDropped {
                node,
                reason: reason.to_string(),
            });
        }
    }

    fn link_stairs(&mut self, rep: u64) {
        let node = self.memo.node(rep).expect("representative").clone();
        if !self.params.allow_stairs || node.sna_type != SnaType::Stairs {
            return;
        }
        let radius = self.memo_params.epsilon_m + self.memo_params.cluster_radius_m;
        for (_, there) in self.scene.stair_partners_near(node.position, node.floor, radius) {
            let landing = self.scene.node(there).position;
            match self.memo.nearest(landing, there.floor, self.memo_params.epsilon_m) {
                Some(id) => {
                    if !self.memo.neighbors(rep).any(|n| n == id) && self.memo.connect(rep, id).is_ok() {
                        self.push(EventKind::StairsLinked {
                            landing: id,
                            floor: there.floor,
                            position: landing,
                            inserted: false,
                        });
                    }
                }
                None => {
                    let id = self.memo.insert_candidate(landing, there.floor, SnaType::Stairs);
                    self.push(EventKind::StairsLinked {
                        landing: id,
                        floor: there.floor,
                        position: landing,
                        inserted: true,
                    });
                }
            }
        }
    }

    fn pursue(&mut self, target: u64) -> Outcome {
        let start_distance = self.travelled();
        let mut replans = 0;
        'plan: loop {
            let Some(node) = self.memo.node(target) else {
                return Outcome::Continue { moved: self.travelled() > start_distance };
            };
            let (tpos, tfloor) = (node.position, node.floor);
            let Some(goal) = self
                .scene
                .floors
                .get(tfloor)
                .and_then(|f| snap_to_free(&f.grid, tpos, self.memo_params.epsilon_m))
            else {
                self.drop_target(target, "off_map");
                return Outcome::Continue { moved: self.travelled() > start_distance };
            };
            let here = *self.poses.last().expect("start pose");
            let leg = match execute_leg(self.scene, &here, (goal, tfloor), self.params.step_m) {
                Ok(leg) => leg,
                Err(_) => return Outcome::Terminate(TerminationReason::Stuck),
            };
            let base = self.travelled();
            let last = leg.poses.len() - 1;
            for i in 1..leg.poses.len() {
                let pose = leg.poses[i];
                self.poses.push(pose);
                self.distances.push(base + leg.distances[i]);
                self.memo.record_pose(pose);
                if let Some(&(_, from_floor, to_floor)) = leg.stair_transitions.iter().find(|t| t.0 == i) {
                    self.push(EventKind::StairTransition { from_floor, to_floor });
                }
                if self.travelled() >= self.params.budget_m {
                    return Outcome::Terminate(TerminationReason::Budget);
                }
                self.since_obs += leg.distances[i] - leg.distances[i - 1];
                if i < last
                    && self.since_obs >= self.params.observe_every_m - 1e-9
                    && pose.floor == self.memo.current_node().floor
                {
                    let Some(obs) = self.observe() else {
                        return Outcome::Terminate(TerminationReason::Stuck);
                    };
                    self.integrate(&obs);
                    let moved = self
                        .memo
                        .node(target)
                        .is_none_or(|n| n.floor != tfloor || n.position.distance(tpos) > REPLAN_SHIFT_M);
                    if moved {
                        replans += 1;
                        if replans > MAX_REPLANS {
                            self.drop_target(target, "unstable");
                            return Outcome::Continue { moved: true };
                        }
                        continue 'plan;
                    }
                }
            }
            break;
        }
        let Some(obs) = self.observe() else {
            return Outcome::Terminate(TerminationReason::Stuck);
        };
        match self.memo.arrive(target, &obs) {
            Ok(rep) => {
                self.push(EventKind::Arrived {
                    node: target,
                    representative: rep,
                });
                self.integrate(&obs);
                self.link_stairs(rep);
            }
            Err(_) => {
                self.drop_target(target, "not_adjacent");
                self.integrate(&obs);
            }
        }
        Outcome::Continue {
            moved: self.travelled() > start_distance,
        }
    }
}

/// Runs one scene-graph exploration episode to termination.
pub fn run_episode(
    scene: &Scene,
    start: Pose,
    memo_params: MemoParams,
    params: PlannerParams,
    rig: &[CameraModel],
    noise: Option<NoiseModel>,
) -> Result<EpisodeLog, PlannerError> {
    params.validate()?;
    memo_params.validate()?;
    if let Some(n) = noise {
        if !n.is_valid() {
            return Err(PlannerError::InvalidParams("noise probabilities must lie in [0, 1]".into()));
        }
    }
    let start = Pose::new(start.x, start.y, start.heading, start.floor);
    let mut sampler = noise.map(NoiseSampler::new);
    let first = observe(scene, &start, rig, params.range_m, sampler.as_mut()).map_err(|_| PlannerError::InvalidStart {
        x: start.x,
        y: start.y,
        floor: start.floor,
    })?;
    let memo = SgMemo::new(memo_params, &start, &first)?;
    let mut run = Runner {
        scene,
        rig,
        memo_params,
        params,
        sampler,
        memo,
        poses: vec![start],
        distances: vec![0.0],
        events: Vec::new(),
        since_obs: 0.0,
    };
    run.push(EventKind::Observed { obs: first.clone() });
    run.integrate(&first);

    let mut idle = 0;
    let mut looks = 0;
    let reason = loop {
        if run.travelled() >= params.budget_m {
            break TerminationReason::Budget;
        }
        let pose = *run.poses.last().expect("start pose");
        let Some(sg) = select_subgoal(&run.memo, &pose, &params) else {
            // With noisy perception an empty frontier may just be missed
            // detections; look again a few times before giving up.
            if run.sampler.is_some() && looks < NOISY_RELOOKS {
                looks += 1;
                if let Some(obs) = run.observe() {
                    run.integrate(&obs);
                }
                continue;
            }
            break TerminationReason::Explored;
        };
        looks = 0;
        run.push(EventKind::SubgoalSelected {
            node: sg.node,
            tier: sg.tier,
        });
        match run.pursue(sg.node) {
            Outcome::Terminate(r) => break r,
            Outcome::Continue { moved } => {
                idle = if moved { 0 } else { idle + 1 };
                if idle > MAX_IDLE_LEGS {
                    break TerminationReason::Stuck;
                }
            }
        }
    };
    run.push(EventKind::Terminated { reason });
    log::debug!(
        "episode finished: {} after {:.1} m, {} memo nodes",
        reason.as_str(),
        run.travelled(),
        run.memo.len()
    );
    Ok(EpisodeLog {
        header: EpisodeHeader {
            version: LOG_VERSION,
            planner: "sna".to_string(),
            start,
            memo_params,
            rig: rig.to_vec(),
            range_m: params.range_m,
            noise,
            budget_m: params.budget_m,
        },
        poses: run.poses,
        distances: run.distances,
        events: run.events,
        final_memo: run.memo,
        termination: reason,
    })
}
