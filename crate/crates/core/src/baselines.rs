//! Geometry-centric comparison planners.
//!
//! Both baselines carry a range sensor that reveals every cell with line of
//! sight within range, accumulate it into an [`ObservedMap`], and plan only
//! over cells they have seen to be free. They stay on the start floor. To make
//! their logs comparable with the scene-graph planner, each records a
//! trajectory memo: a waypoint node every couple of meters, annotated with the
//! perception oracle's room label and visible objects.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::episode::{EpisodeHeader, EpisodeLog, Event, EventKind, TerminationReason, LOG_VERSION};
use crate::geometry::{raycast_los, CameraModel, GridIndex, OccupancyGrid, Pose, Vec2};
use crate::pathing::{astar, dijkstra, grid8_successors, octile};
use crate::perception::{default_rig, observe};
use crate::planner::resample;
use crate::scene::{Scene, SnaType};
use crate::sgmemo::{MemoParams, SgMemo};

/// Travel between range sweeps.
pub const SWEEP_EVERY_M: f64 = 0.5;
/// Spacing of trajectory memo waypoints.
pub const WAYPOINT_EVERY_M: f64 = 2.0;
/// Frontier clusters smaller than this are ignored as sensing noise.
pub const MIN_FRONTIER_CLUSTER: usize = 3;
/// Tree extension length of the sampling planner.
pub const STEER_M: f64 = 1.0;
const STEP_M: f64 = 0.25;
/// Consecutive rejected samples before the sampling planner re-checks
/// whether anything is left to explore.
const SAMPLE_TRIES: usize = 500;
const MAX_IDLE_ROUNDS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Knowledge {
    Unknown,
    Free,
    Occupied,
}

/// Per-floor tri-state map built from range sweeps. Cells never return to
/// unknown.
#[derive(Debug, Clone)]
pub struct ObservedMap {
    floors: Vec<Vec<Knowledge>>,
}

impl ObservedMap {
    pub fn new(scene: &Scene) -> Self {
        Self {
            floors: scene.floors.iter().map(|f| vec![Knowledge::Unknown; f.grid.len()]).collect(),
        }
    }

    pub fn get(&self, floor: usize, flat: usize) -> Knowledge {
        self.floors[floor][flat]
    }

    pub fn known_count(&self, floor: usize) -> usize {
        self.floors[floor].iter().filter(|k| **k != Knowledge::Unknown).count()
    }

    /// Reveals every cell whose centre is within `range_m` and in line of
    /// sight of `pose`. Returns the number of newly known cells.
    pub fn sweep(&mut self, scene: &Scene, pose: &Pose, range_m: f64) -> usize {
        let grid = &scene.floors[pose.floor].grid;
        let known = &mut self.floors[pose.floor];
        let p = pose.position();
        let mut added = 0;
        if let Some(c) = grid.cell_of(p) {
            let i = grid.flat(c);
            if known[i] == Knowledge::Unknown {
                known[i] = if grid.is_free_flat(i) { Knowledge::Free } else { Knowledge::Occupied };
                added += 1;
            }
        }
        let res = grid.resolution();
        let reach = (range_m / res).ceil() as i64 + 1;
        let (pc, pr) = ((p.x / res).floor() as i64, (p.y / res).floor() as i64);
        for r in (pr - reach).max(0)..=(pr + reach).min(grid.height() as i64 - 1) {
            for c in (pc - reach).max(0)..=(pc + reach).min(grid.width() as i64 - 1) {
                let idx = GridIndex::new(c, r);
                let i = grid.flat(idx);
                if known[i] != Knowledge::Unknown {
                    continue;
                }
                let q = grid.center(idx);
                if q.distance(p) <= range_m && raycast_los(grid, p, q).unwrap_or(false) {
                    known[i] = if grid.is_free_flat(i) { Knowledge::Free } else { Knowledge::Occupied };
                    added += 1;
                }
            }
        }
        added
    }

    /// Known-free cell with an unknown 4-neighbour. Standing on such a cell
    /// always reveals its 4-neighbours, so every frontier can be resolved.
    pub fn is_frontier(&self, grid: &OccupancyGrid, floor: usize, flat: usize) -> bool {
        if self.floors[floor][flat] != Knowledge::Free {
            return false;
        }
        let c = grid.unflat(flat);
        [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(dc, dr)| {
            let n = GridIndex::new(c.col + dc, c.row + dr);
            grid.contains(n) && self.floors[floor][grid.flat(n)] == Knowledge::Unknown
        })
    }

    /// Frontier cells grouped by 8-connectivity, each cluster sorted, clusters
    /// ordered by their first cell.
    pub fn frontier_clusters(&self, grid: &OccupancyGrid, floor: usize) -> Vec<Vec<usize>> {
        let n = grid.len();
        let is_f: Vec<bool> = (0..n).map(|i| self.is_frontier(grid, floor, i)).collect();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if !is_f[s] || seen[s] {
                continue;
            }
            seen[s] = true;
            let mut members = vec![s];
            let mut stack = vec![s];
            while let Some(i) = stack.pop() {
                let c = grid.unflat(i);
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let m = GridIndex::new(c.col + dc, c.row + dr);
                        if !grid.contains(m) {
                            continue;
                        }
                        let j = grid.flat(m);
                        if is_f[j] && !seen[j] {
                            seen[j] = true;
                            members.push(j);
                            stack.push(j);
                        }
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

enum Walk {
    Arrived,
    Aborted,
    Budget,
}

/// Shared episode bookkeeping for the baselines.
struct Agent<'a> {
    scene: &'a Scene,
    rig: Vec<CameraModel>,
    range_m: f64,
    budget_m: f64,
    map: ObservedMap,
    memo: SgMemo,
    poses: Vec<Pose>,
    distances: Vec<f64>,
    events: Vec<Event>,
    since_sweep: f64,
    since_waypoint: f64,
}

impl<'a> Agent<'a> {
    fn new(scene: &'a Scene, start: Pose, range_m: f64, budget_m: f64) -> Option<Self> {
        let rig = default_rig();
        let first = observe(scene, &start, &rig, range_m, None).ok()?;
        let memo = SgMemo::new(MemoParams::default(), &start, &first).ok()?;
        let mut agent = Agent {
            scene,
            rig,
            range_m,
            budget_m,
            map: ObservedMap::new(scene),
            memo,
            poses: vec![start],
            distances: vec![0.0],
            events: Vec::new(),
            since_sweep: 0.0,
            since_waypoint: 0.0,
        };
        agent.push(EventKind::Observed { obs: first });
        agent.map.sweep(scene, &start, range_m);
        Some(agent)
    }

    fn push(&mut self, kind: EventKind) {
        self.events.push(Event {
            pose_index: self.poses.len() - 1,
            kind,
        });
    }

    fn pose(&self) -> Pose {
        *self.poses.last().expect("start pose")
    }

    fn travelled(&self) -> f64 {
        *self.distances.last().expect("start pose")
    }

    fn grid(&self) -> &'a OccupancyGrid {
        &self.scene.floors[self.pose().floor].grid
    }

    fn known_free(&self, floor: usize) -> impl Fn(usize) -> bool + '_ {
        move |i| self.map.get(floor, i) == Knowledge::Free
    }

    fn add_waypoint(&mut self) {
        let pose = self.pose();
        let Ok(obs) = observe(self.scene, &pose, &self.rig, self.range_m, None) else { return };
        self.push(EventKind::Observed { obs: obs.clone() });
        let node = self.memo.insert_candidate(pose.position(), pose.floor, SnaType::Normal);
        self.push(EventKind::WaypointAdded {
            node,
            position: pose.position(),
            floor: pose.floor,
        });
        if let Ok(rep) = self.memo.arrive(node, &obs) {
            self.push(EventKind::Arrived {
                node,
                representative: rep,
            });
        }
    }

    /// Route over known-free cells from the current pose to `goal`.
    fn route_to(&self, goal: usize) -> Option<Vec<usize>> {
        let grid = self.grid();
        let floor = self.pose().floor;
        let start = grid.flat(grid.cell_of(self.pose().position())?);
        let free = self.known_free(floor);
        let (w, h, res) = (grid.width(), grid.height(), grid.resolution());
        astar(
            grid.len(),
            start,
            goal,
            |c, out| grid8_successors(w, h, res, &free, c, out),
            |c| octile(w, res, c, goal),
        )
        .map(|(path, _)| path)
    }

    /// Walks a cell route, sweeping and recording waypoints on the way. Stops
    /// early when `abort` holds after a sweep.
    fn walk(&mut self, cells: &[usize], abort: &dyn Fn(&ObservedMap) -> bool) -> Walk {
        let grid = self.grid();
        let here = self.pose();
        let mut points = vec![(here.floor, here.position())];
        points.extend(cells.iter().skip(1).map(|&c| (here.floor, grid.center(grid.unflat(c)))));
        if points.len() < 2 {
            return Walk::Arrived;
        }
        let leg = resample(&here, &points, STEP_M);
        let base = self.travelled();
        for i in 1..leg.poses.len() {
            let pose = leg.poses[i];
            let step = leg.distances[i] - leg.distances[i - 1];
            self.poses.push(pose);
            self.distances.push(base + leg.distances[i]);
            self.memo.record_pose(pose);
            self.since_sweep += step;
            self.since_waypoint += step;
            let last = i + 1 == leg.poses.len();
            if self.since_sweep >= SWEEP_EVERY_M - 1e-9 || last {
                self.since_sweep = 0.0;
                self.map.sweep(self.scene, &pose, self.range_m);
            }
            if self.since_waypoint >= WAYPOINT_EVERY_M - 1e-9 {
                self.since_waypoint = 0.0;
                self.add_waypoint();
            }
            if self.travelled() >= self.budget_m {
                return Walk::Budget;
            }
            if !last && abort(&self.map) {
                return Walk::Aborted;
            }
        }
        Walk::Arrived
    }

    /// Nearest reachable frontier cluster target, skipping `banned` cells.
    fn frontier_target(&self, banned: &BTreeSet<usize>) -> Option<usize> {
        let grid = self.grid();
        let floor = self.pose().floor;
        let start = grid.flat(grid.cell_of(self.pose().position())?);
        let free = self.known_free(floor);
        let (w, h, res) = (grid.width(), grid.height(), grid.resolution());
        let dist = dijkstra(grid.len(), start, |c, out| grid8_successors(w, h, res, &free, c, out));
        let mut best: Option<(f64, usize)> = None;
        for cluster in self.map.frontier_clusters(grid, floor) {
            let members: Vec<usize> = cluster.into_iter().filter(|c| !banned.contains(c)).collect();
            if members.len() < MIN_FRONTIER_CLUSTER {
                continue;
            }
            let d = members.iter().map(|&c| dist[c]).fold(f64::INFINITY, f64::min);
            if !d.is_finite() {
                continue;
            }
            let n = members.len() as f64;
            let centroid = members
                .iter()
                .fold(Vec2::default(), |acc, &c| acc + grid.center(grid.unflat(c)) * (1.0 / n));
            // member nearest the centroid that is reachable; lowest index on ties
            let target = members
                .iter()
                .filter(|&&c| dist[c].is_finite())
                .min_by(|&&a, &&b| {
                    let da = grid.center(grid.unflat(a)).distance(centroid);
                    let db = grid.center(grid.unflat(b)).distance(centroid);
                    da.total_cmp(&db).then(a.cmp(&b))
                })
                .copied()?;
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, target));
            }
        }
        best.map(|(_, t)| t)
    }

    fn finish(mut self, planner: &str, termination: TerminationReason) -> EpisodeLog {
        self.push(EventKind::Terminated { reason: termination });
        log::debug!(
            "{planner} finished: {} after {:.1} m",
            termination.as_str(),
            self.travelled()
        );
        EpisodeLog {
            header: EpisodeHeader {
                version: LOG_VERSION,
                planner: planner.to_string(),
                start: self.poses[0],
                memo_params: MemoParams::default(),
                rig: self.rig,
                range_m: self.range_m,
                noise: None,
                budget_m: self.budget_m,
            },
            poses: self.poses,
            distances: self.distances,
            events: self.events,
            final_memo: self.memo,
            termination,
        }
    }
}

/// Nearest-frontier exploration. Returns `None` when `start` is not free.
pub fn frontier_explore(scene: &Scene, start: Pose, sensor_range_m: f64, budget_m: f64) -> Option<EpisodeLog> {
    let mut agent = Agent::new(scene, start, sensor_range_m, budget_m)?;
    let mut banned = BTreeSet::new();
    let reason = loop {
        if agent.travelled() >= budget_m {
            break TerminationReason::Budget;
        }
        let Some(target) = agent.frontier_target(&banned) else {
            break TerminationReason::Explored;
        };
        agent.push(EventKind::TargetSelected {
            position: agent.grid().center(agent.grid().unflat(target)),
            floor: agent.pose().floor,
        });
        let Some(cells) = agent.route_to(target) else {
            banned.insert(target);
            continue;
        };
        let grid = agent.grid();
        let floor = agent.pose().floor;
        let outcome = agent.walk(&cells, &|m| !m.is_frontier(grid, floor, target));
        match outcome {
            Walk::Budget => break TerminationReason::Budget,
            Walk::Aborted => {}
            Walk::Arrived => {
                // Standing on a frontier cell resolves it unless the sensor
                // range is below one cell; never chase it twice.
                if agent.map.is_frontier(grid, floor, target) {
                    banned.insert(target);
                }
            }
        }
    };
    Some(agent.finish("frontier", reason))
}

/// Whether the straight segment `a`–`b` only crosses known-free cells.
fn segment_known_free(map: &ObservedMap, grid: &OccupancyGrid, floor: usize, a: Vec2, b: Vec2) -> bool {
    let (Some(ca), Some(cb)) = (grid.cell_of(a), grid.cell_of(b)) else { return false };
    if map.get(floor, grid.flat(ca)) != Knowledge::Free || map.get(floor, grid.flat(cb)) != Knowledge::Free {
        return false;
    }
    let res = grid.resolution();
    let steps = ((a.distance(b) / (res * 0.25)).ceil() as usize).max(1);
    (0..=steps).all(|k| {
        let p = a + (b - a) * (k as f64 / steps as f64);
        grid.cell_of(p).is_some_and(|c| map.get(floor, grid.flat(c)) == Knowledge::Free)
    })
}

/// Rapidly-exploring random tree exploration: samples a point anywhere on the
/// floor, extends the tree from its nearest vertex by at most [`STEER_M`]
/// through known-free space, and drives to the new vertex. Ends when no
/// reachable frontier remains or the budget is spent.
pub fn random_tree_explore(
    scene: &Scene,
    start: Pose,
    sensor_range_m: f64,
    budget_m: f64,
    seed: u64,
) -> Option<EpisodeLog> {
    let mut agent = Agent::new(scene, start, sensor_range_m, budget_m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floor = start.floor;
    let grid = &scene.floors[floor].grid;
    let (width_m, height_m) = (
        grid.width() as f64 * grid.resolution(),
        grid.height() as f64 * grid.resolution(),
    );
    let mut tree = vec![start.position()];
    let mut idle = 0;
    let reason = loop {
        if agent.travelled() >= budget_m {
            break TerminationReason::Budget;
        }
        let mut extension = None;
        for _ in 0..SAMPLE_TRIES {
            let sample = Vec2::new(rng.gen_range(0.0..width_m), rng.gen_range(0.0..height_m));
            let near = *tree
                .iter()
                .min_by(|a, b| a.distance(sample).total_cmp(&b.distance(sample)))
                .expect("tree has a root");
            let d = near.distance(sample);
            if d < 1e-9 {
                continue;
            }
            let q = near + (sample - near) * (STEER_M.min(d) / d);
            if segment_known_free(&agent.map, grid, floor, near, q) {
                extension = Some(q);
                break;
            }
        }
        let Some(q) = extension else {
            if agent.frontier_target(&BTreeSet::new()).is_none() {
                break TerminationReason::Explored;
            }
            idle += 1;
            if idle > MAX_IDLE_ROUNDS {
                break TerminationReason::Stuck;
            }
            continue;
        };
        tree.push(q);
        agent.push(EventKind::TargetSelected { position: q, floor });
        let Some(cells) = grid.cell_of(q).and_then(|c| agent.route_to(grid.flat(c))) else {
            continue;
        };
        let before = agent.travelled();
        match agent.walk(&cells, &|_| false) {
            Walk::Budget => break TerminationReason::Budget,
            Walk::Aborted | Walk::Arrived => {}
        }
        if agent.travelled() > before {
            idle = 0;
        } else {
            // Sampling inside explored space: stop once nothing is left.
            if agent.frontier_target(&BTreeSet::new()).is_none() {
                break TerminationReason::Explored;
            }
            idle += 1;
            if idle > MAX_IDLE_ROUNDS * 10 {
                break TerminationReason::Stuck;
            }
        }
    };
    Some(agent.finish("random_tree", reason))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::load_scene;

    const OPEN_ROOM: &str = include_str!("../tests/fixtures/open_room.json");

    #[test]
    fn sweep_is_monotone_and_sees_own_cell() {
        let s = load_scene(OPEN_ROOM).unwrap();
        let mut m = ObservedMap::new(&s);
        let pose = Pose::new(1.05, 2.05, 0.0, 0);
        let first = m.sweep(&s, &pose, 2.0);
        assert!(first > 0);
        let i = s.floors[0].grid.flat(s.floors[0].grid.cell_of(pose.position()).unwrap());
        assert_eq!(m.get(0, i), Knowledge::Free);
        assert_eq!(m.sweep(&s, &pose, 2.0), 0);
        let before = m.known_count(0);
        m.sweep(&s, &Pose::new(3.05, 2.05, 0.0, 0), 2.0);
        assert!(m.known_count(0) >= before);
    }

    #[test]
    fn frontier_requires_unknown_neighbour() {
        let s = load_scene(OPEN_ROOM).unwrap();
        let grid = &s.floors[0].grid;
        let mut m = ObservedMap::new(&s);
        m.sweep(&s, &Pose::new(1.05, 2.05, 0.0, 0), 1.0);
        let clusters = m.frontier_clusters(grid, 0);
        assert!(!clusters.is_empty());
        for c in clusters.iter().flatten() {
            assert!(m.is_frontier(grid, 0, *c));
        }
    }
}
