//! Exploration metrics and downstream memo reasoning tasks.
//!
//! Coverage is tracked against travelled distance: topological coverage counts
//! ground-truth nodes the trajectory came within 2 m of, occupancy coverage
//! counts free cells seen within sensor range. The downstream tasks use
//! deterministic matchers over the serialized memo content.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::canon::Canon;
use crate::episode::{EpisodeLog, TerminationReason};
use crate::geometry::{raycast_los, GridIndex, Pose, Vec2};
use crate::planner::snap_to_free;
use crate::scene::{NodeRef, Scene, CORRIDOR};
use crate::sgmemo::{MemoNode, MemoParams, NodeStatus, SgMemo};

/// A ground-truth node counts as discovered once the trajectory comes this close.
pub const DISCOVERY_RADIUS_M: f64 = 2.0;
/// Default occupancy sensing radius.
pub const OCC_RANGE_M: f64 = 5.0;
/// Radius used for node semantics in the ground-truth memo and for task success.
pub const SEMANTIC_RADIUS_M: f64 = 2.0;

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCurve {
    /// `(distance_m, fraction)`; distances strictly increase, fractions never drop.
    pub samples: Vec<(f64, f64)>,
}

impl CoverageCurve {
    fn from_events(total: usize, mut hits: Vec<f64>) -> CoverageCurve {
        hits.sort_by(f64::total_cmp);
        let mut samples = vec![(0.0, 0.0)];
        if total == 0 {
            return CoverageCurve { samples };
        }
        for (k, d) in hits.iter().enumerate() {
            let frac = (k + 1) as f64 / total as f64;
            match samples.last_mut() {
                Some(last) if (last.0 - d).abs() <= 0.0 => last.1 = frac,
                _ => samples.push((*d, frac)),
            }
        }
        CoverageCurve { samples }
    }

    pub fn final_value(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.1)
    }

    /// Coverage at distance `l` (right-continuous step).
    pub fn at(&self, l: f64) -> f64 {
        self.samples
            .iter()
            .take_while(|s| s.0 <= l)
            .last()
            .map_or(0.0, |s| s.1)
    }
}

/// Ground-truth nodes discovered along the trajectory, with the distance of
/// first discovery.
pub fn discovery_distances(scene: &Scene, poses: &[Pose], distances: &[f64]) -> BTreeMap<NodeRef, f64> {
    let mut found = BTreeMap::new();
    for (pose, &d) in poses.iter().zip(distances) {
        let Some(fl) = scene.floors.get(pose.floor) else { continue };
        for (i, n) in fl.nodes.iter().enumerate() {
            let r = NodeRef {
                floor: pose.floor,
                index: i,
            };
            if !found.contains_key(&r) && n.position.distance(pose.position()) <= DISCOVERY_RADIUS_M + TOL {
                found.insert(r, d);
            }
        }
    }
    found
}

/// Topological coverage curve and final fraction of ground-truth nodes discovered.
pub fn coverage_topo(scene: &Scene, poses: &[Pose], distances: &[f64]) -> (CoverageCurve, f64) {
    let hits = discovery_distances(scene, poses, distances);
    let curve = CoverageCurve::from_events(scene.node_count(), hits.into_values().collect());
    let v = curve.final_value();
    (curve, v)
}

/// Occupancy coverage: a free cell is covered once some pose has line of
/// sight to its centre within `range_m`.
pub fn coverage_occ(scene: &Scene, poses: &[Pose], distances: &[f64], range_m: f64) -> (CoverageCurve, f64) {
    let mut covered: Vec<Vec<bool>> = scene.floors.iter().map(|f| vec![false; f.grid.len()]).collect();
    let mut hits = Vec::new();
    let mut last_seen: Option<Pose> = None;
    for (pose, &d) in poses.iter().zip(distances) {
        // a repeated pose cannot reveal anything new
        if last_seen.is_some_and(|p| p.floor == pose.floor && p.x == pose.x && p.y == pose.y) {
            continue;
        }
        last_seen = Some(*pose);
        let Some(fl) = scene.floors.get(pose.floor) else { continue };
        let grid = &fl.grid;
        let res = grid.resolution();
        let p = pose.position();
        let reach = (range_m / res).ceil() as i64 + 1;
        let (pc, pr) = ((p.x / res).floor() as i64, (p.y / res).floor() as i64);
        for r in (pr - reach).max(0)..=(pr + reach).min(grid.height() as i64 - 1) {
            for c in (pc - reach).max(0)..=(pc + reach).min(grid.width() as i64 - 1) {
                let idx = GridIndex::new(c, r);
                let flat = grid.flat(idx);
                if covered[pose.floor][flat] || !grid.is_free_flat(flat) {
                    continue;
                }
                let q = grid.center(idx);
                if q.distance(p) <= range_m + TOL && raycast_los(grid, p, q).unwrap_or(false) {
                    covered[pose.floor][flat] = true;
                    hits.push(d);
                }
            }
        }
    }
    let curve = CoverageCurve::from_events(scene.free_cell_count(), hits);
    let v = curve.final_value();
    (curve, v)
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum AucError {
    /// The path has zero length; carries the coverage at distance zero.
    #[error("path length is zero; instantaneous coverage is {coverage}")]
    ZeroLength { coverage: f64 },
}

/// Area under a step coverage curve over `[0, final_length_m]`, normalized by
/// the length.
pub fn auc(curve: &CoverageCurve, final_length_m: f64) -> Result<f64, AucError> {
    if final_length_m <= 0.0 {
        return Err(AucError::ZeroLength {
            coverage: curve.at(0.0),
        });
    }
    let mut area = 0.0;
    for (k, &(d, v)) in curve.samples.iter().enumerate() {
        if d >= final_length_m {
            break;
        }
        let next = curve.samples.get(k + 1).map_or(final_length_m, |s| s.0.min(final_length_m));
        area += v * (next - d);
    }
    Ok(area / final_length_m)
}

/// AUC with the zero-length convention applied.
pub fn auc_or_instant(curve: &CoverageCurve, final_length_m: f64) -> f64 {
    match auc(curve, final_length_m) {
        Ok(v) => v,
        Err(AucError::ZeroLength { coverage }) => coverage,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GraphQuality {
    pub room_coverage: f64,
    pub room_type_acc: f64,
    pub object_recall: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn room_of(scene: &Scene, n: &MemoNode) -> Option<(usize, usize)> {
    scene.room_index_at(n.position, n.floor).map(|i| (n.floor, i))
}

/// Room coverage, room-type accuracy and per-room object recall of a memo.
pub fn graph_quality(memo: &SgMemo, scene: &Scene) -> GraphQuality {
    let total_rooms = scene.room_count();
    let mut covered = BTreeSet::new();
    let (mut labelled, mut correct) = (0, 0);
    let mut seen_objects: BTreeMap<(usize, usize), BTreeSet<&str>> = BTreeMap::new();
    for n in memo.nodes() {
        let Some(room) = room_of(scene, n) else { continue };
        seen_objects
            .entry(room)
            .or_default()
            .extend(n.object_set.iter().map(String::as_str));
        if !n.is_visited() {
            continue;
        }
        covered.insert(room);
        labelled += 1;
        if n.room_label() == Some(scene.floors[room.0].rooms[room.1].category.as_str()) {
            correct += 1;
        }
    }
    let (mut found, mut total) = (0, 0);
    for (f, fl) in scene.floors.iter().enumerate() {
        for (i, _) in fl.rooms.iter().enumerate() {
            let truth: BTreeSet<&str> = fl
                .objects
                .iter()
                .filter(|o| scene.room_index_at(o.position, f) == Some(i))
                .map(|o| o.category.as_str())
                .collect();
            total += truth.len();
            if let Some(seen) = seen_objects.get(&(f, i)) {
                found += truth.intersection(seen).count();
            }
        }
    }
    GraphQuality {
        room_coverage: ratio(covered.len(), total_rooms),
        room_type_acc: ratio(correct, labelled),
        object_recall: ratio(found, total),
    }
}

/// Object categories in the same room as `p` within [`SEMANTIC_RADIUS_M`].
pub fn gt_objects_near(scene: &Scene, p: Vec2, floor: usize) -> BTreeSet<String> {
    let room = scene.room_index_at(p, floor);
    scene.floors[floor]
        .objects
        .iter()
        .filter(|o| {
            room.is_some()
                && scene.room_index_at(o.position, floor) == room
                && o.position.distance(p) <= SEMANTIC_RADIUS_M + TOL
        })
        .map(|o| o.category.clone())
        .collect()
}

/// Memo built straight from ground truth: every GT node visited, labelled with
/// its true room and the same-room objects near it. Ids follow scene order.
pub fn gt_memo(scene: &Scene) -> SgMemo {
    let mut ids = BTreeMap::new();
    let mut nodes = Vec::new();
    for (f, fl) in scene.floors.iter().enumerate() {
        for (i, n) in fl.nodes.iter().enumerate() {
            let id = nodes.len() as u64;
            ids.insert(NodeRef { floor: f, index: i }, id);
            let mut m = MemoNode::new(id, n.position, f, n.sna_type, NodeStatus::Visited);
            let room = scene.room_at(n.position, f).unwrap_or(CORRIDOR).to_string();
            m.room_votes.insert(room, 1);
            m.object_set = gt_objects_near(scene, n.position, f);
            nodes.push(m);
        }
    }
    let mut edges = Vec::new();
    for (f, fl) in scene.floors.iter().enumerate() {
        for &(a, b) in &fl.edges {
            edges.push((ids[&NodeRef { floor: f, index: a }], ids[&NodeRef { floor: f, index: b }]));
        }
    }
    for &(a, b) in &scene.stair_links {
        edges.push((ids[&a], ids[&b]));
    }
    SgMemo::from_parts(MemoParams::default(), nodes, &edges, 0).expect("ground truth forms a valid memo")
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectNavResult {
    pub sr: f64,
    pub spl: f64,
}

fn free_point(scene: &Scene, p: Vec2, floor: usize) -> Option<Vec2> {
    snap_to_free(&scene.floors.get(floor)?.grid, p, 1.0)
}

/// Object-goal navigation guided by the memo graph.
pub fn objectnav_eval(memo: &SgMemo, scene: &Scene, queries: &[String], start: u64) -> ObjectNavResult {
    if queries.is_empty() {
        return ObjectNavResult::default();
    }
    let Some(start_node) = memo.node(start) else {
        return ObjectNavResult::default();
    };
    let start_floor = start_node.floor;
    let start_pt = free_point(scene, start_node.position, start_floor);
    let field = start_pt.and_then(|p| scene.distance_field((p, start_floor)).ok());
    let graph = memo.graph_distances(start);
    let (mut sr, mut spl) = (0.0, 0.0);
    for category in queries {
        let target = memo
            .nodes()
            .filter(|n| n.object_set.contains(category) && graph.contains_key(&n.id))
            .min_by(|a, b| graph[&a.id].total_cmp(&graph[&b.id]).then(a.id.cmp(&b.id)));
        let (Some(target), Some(field)) = (target, field.as_ref()) else { continue };
        let success = scene.floors[target.floor]
            .objects
            .iter()
            .any(|o| &o.category == category && o.position.distance(target.position) <= SEMANTIC_RADIUS_M + TOL);
        if !success {
            continue;
        }
        let shortest = scene
            .floors
            .iter()
            .enumerate()
            .flat_map(|(f, fl)| fl.objects.iter().map(move |o| (f, o)))
            .filter(|(_, o)| &o.category == category)
            .filter_map(|(f, o)| scene.field_distance(field, o.position, f))
            .min_by(f64::total_cmp);
        let Some(shortest) = shortest else { continue };
        let Some(path) = memo.route(start, target.id) else { continue };
        let mut travelled = 0.0;
        let mut ok = true;
        for w in path.windows(2) {
            let (a, b) = (memo.node(w[0]).expect("live"), memo.node(w[1]).expect("live"));
            let leg = free_point(scene, a.position, a.floor)
                .zip(free_point(scene, b.position, b.floor))
                .and_then(|(pa, pb)| scene.gt_shortest_path((pa, a.floor), (pb, b.floor)).ok());
            match leg {
                Some(d) => travelled += d,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        sr += 1.0;
        let denom = travelled.max(shortest);
        spl += if denom <= 0.0 { 1.0 } else { shortest / denom };
    }
    let n = queries.len() as f64;
    ObjectNavResult { sr: sr / n, spl: spl / n }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundingQuery {
    pub room_category: String,
    pub objects: BTreeSet<String>,
    pub target: NodeRef,
}

/// One query per ground-truth node whose (room, nearby objects) description
/// is unique in the scene; ambiguous descriptions are skipped.
pub fn grounding_queries(scene: &Scene) -> Vec<GroundingQuery> {
    let mut by_signature: BTreeMap<(String, BTreeSet<String>), Vec<NodeRef>> = BTreeMap::new();
    for (f, fl) in scene.floors.iter().enumerate() {
        for (i, n) in fl.nodes.iter().enumerate() {
            let room = scene.room_at(n.position, f).unwrap_or(CORRIDOR).to_string();
            let objects = gt_objects_near(scene, n.position, f);
            by_signature
                .entry((room, objects))
                .or_default()
                .push(NodeRef { floor: f, index: i });
        }
    }
    let mut out: Vec<GroundingQuery> = by_signature
        .into_iter()
        .filter(|(_, refs)| refs.len() == 1)
        .map(|((room_category, objects), refs)| GroundingQuery {
            room_category,
            objects,
            target: refs[0],
        })
        .collect();
    out.sort_by_key(|q| q.target);
    out
}

fn jaccard<'a>(a: impl IntoIterator<Item = &'a String>, b: &BTreeSet<String>) -> f64 {
    let a: BTreeSet<&String> = a.into_iter().collect();
    let inter = a.iter().filter(|x| b.contains(**x)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Node grounding success rate: the matcher picks, among memo nodes with the
/// queried room label whose objects include the query's, the one with the
/// highest Jaccard similarity (lowest id on ties).
pub fn node_grounding_eval(memo: &SgMemo, scene: &Scene, queries: &[GroundingQuery]) -> f64 {
    if queries.is_empty() {
        return 0.0;
    }
    let mut hits = 0;
    for q in queries {
        let pick = memo
            .nodes()
            .filter(|n| n.room_label() == Some(q.room_category.as_str()) && q.objects.is_subset(&n.object_set))
            .map(|n| (jaccard(&n.object_set, &q.objects), n))
            .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.id.cmp(&a.1.id)));
        let Some((_, n)) = pick else { continue };
        let truth = scene.node(q.target);
        let near = n.floor == q.target.floor && n.position.distance(truth.position) <= SEMANTIC_RADIUS_M + TOL;
        let room_ok = scene.room_at(n.position, n.floor).is_ok_and(|r| r == q.room_category);
        if near && room_ok {
            hits += 1;
        }
    }
    hits as f64 / queries.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoomQuery {
    pub floor: usize,
    pub room: usize,
    /// Object categories of the room, with repeats.
    pub inventory: Vec<String>,
}

/// One query per ground-truth room that has at least one object.
pub fn room_queries(scene: &Scene) -> Vec<RoomQuery> {
    let mut out = Vec::new();
    for (f, fl) in scene.floors.iter().enumerate() {
        for i in 0..fl.rooms.len() {
            let mut inventory: Vec<String> = fl
                .objects
                .iter()
                .filter(|o| scene.room_index_at(o.position, f) == Some(i))
                .map(|o| o.category.clone())
                .collect();
            inventory.sort();
            if !inventory.is_empty() {
                out.push(RoomQuery { floor: f, room: i, inventory });
            }
        }
    }
    out
}

/// Memo "rooms": connected groups of visited nodes sharing a non-corridor
/// plurality label, keyed by their lowest node id.
pub fn memo_rooms(memo: &SgMemo) -> Vec<(Vec<u64>, BTreeSet<String>)> {
    let mut seen = BTreeSet::new();
    let mut groups = Vec::new();
    for n in memo.nodes() {
        let Some(label) = n.room_label() else { continue };
        if !n.is_visited() || label == CORRIDOR || seen.contains(&n.id) {
            continue;
        }
        let mut members = vec![n.id];
        let mut objects = n.object_set.clone();
        seen.insert(n.id);
        let mut stack = vec![n.id];
        while let Some(u) = stack.pop() {
            for v in memo.neighbors(u) {
                let m = memo.node(v).expect("live neighbour");
                if m.is_visited() && m.room_label() == Some(label) && seen.insert(v) {
                    members.push(v);
                    objects.extend(m.object_set.iter().cloned());
                    stack.push(v);
                }
            }
        }
        members.sort_unstable();
        groups.push((members, objects));
    }
    groups
}

/// Room identification accuracy by object-set Jaccard matching.
pub fn room_identification_eval(memo: &SgMemo, scene: &Scene, queries: &[RoomQuery]) -> f64 {
    if queries.is_empty() {
        return 0.0;
    }
    let groups = memo_rooms(memo);
    let mut hits = 0;
    for q in queries {
        let want: BTreeSet<String> = q.inventory.iter().cloned().collect();
        let pick = groups
            .iter()
            .map(|(members, objects)| (jaccard(objects, &want), members))
            .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1[0].cmp(&a.1[0])));
        let Some((_, members)) = pick else { continue };
        let inside = members.iter().all(|id| {
            let n = memo.node(*id).expect("live member");
            n.floor == q.floor && scene.room_index_at(n.position, n.floor) == Some(q.room)
        });
        if inside {
            hits += 1;
        }
    }
    hits as f64 / queries.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Downstream {
    pub room_identification: f64,
    pub node_grounding: f64,
    pub objectnav_sr: f64,
    pub objectnav_spl: f64,
}

/// All three downstream tasks with queries derived from the scene.
pub fn downstream(memo: &SgMemo, scene: &Scene, start: u64) -> Downstream {
    let categories: Vec<String> = scene
        .floors
        .iter()
        .flat_map(|f| f.objects.iter().map(|o| o.category.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let nav = objectnav_eval(memo, scene, &categories, start);
    Downstream {
        room_identification: room_identification_eval(memo, scene, &room_queries(scene)),
        node_grounding: node_grounding_eval(memo, scene, &grounding_queries(scene)),
        objectnav_sr: nav.sr,
        objectnav_spl: nav.spl,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub planner: String,
    pub cr_occ: f64,
    pub cr_topo: f64,
    pub auc_occ: f64,
    pub auc_topo: f64,
    pub path_length_m: f64,
    pub termination: TerminationReason,
    pub graph: GraphQuality,
    pub downstream: Downstream,
    pub curve_occ: CoverageCurve,
    pub curve_topo: CoverageCurve,
}

pub const METRICS_VERSION: i64 = 1;

/// Column order of [`MetricsReport::csv_row`].
pub const CSV_COLUMNS: [&str; 14] = [
    "planner",
    "cr_occ",
    "cr_topo",
    "auc_occ",
    "auc_topo",
    "path_length_m",
    "termination",
    "room_coverage",
    "room_type_acc",
    "object_recall",
    "room_identification",
    "node_grounding",
    "objectnav_sr",
    "objectnav_spl",
];

impl MetricsReport {
    pub fn numeric_columns(&self) -> [f64; 12] {
        [
            self.cr_occ,
            self.cr_topo,
            self.auc_occ,
            self.auc_topo,
            self.path_length_m,
            self.graph.room_coverage,
            self.graph.room_type_acc,
            self.graph.object_recall,
            self.downstream.room_identification,
            self.downstream.node_grounding,
            self.downstream.objectnav_sr,
            self.downstream.objectnav_spl,
        ]
    }

    pub fn csv_row(&self) -> String {
        let n = self.numeric_columns();
        let f = |v: f64| format!("{v:.6}");
        [
            self.planner.clone(),
            f(n[0]),
            f(n[1]),
            f(n[2]),
            f(n[3]),
            f(n[4]),
            self.termination.as_str().to_string(),
            f(n[5]),
            f(n[6]),
            f(n[7]),
            f(n[8]),
            f(n[9]),
            f(n[10]),
            f(n[11]),
        ]
        .join(",")
    }

    pub fn to_json(&self) -> String {
        let num = Canon::Num;
        Canon::obj([
            ("version", Canon::Int(METRICS_VERSION)),
            ("planner", Canon::str(self.planner.clone())),
            ("cr_occ", num(self.cr_occ)),
            ("cr_topo", num(self.cr_topo)),
            ("auc_occ", num(self.auc_occ)),
            ("auc_topo", num(self.auc_topo)),
            ("path_length_m", num(self.path_length_m)),
            ("termination", Canon::str(self.termination.as_str())),
            (
                "graph",
                Canon::obj([
                    ("room_coverage", num(self.graph.room_coverage)),
                    ("room_type_acc", num(self.graph.room_type_acc)),
                    ("object_recall", num(self.graph.object_recall)),
                ]),
            ),
            (
                "downstream",
                Canon::obj([
                    ("room_identification", num(self.downstream.room_identification)),
                    ("node_grounding", num(self.downstream.node_grounding)),
                    ("objectnav_sr", num(self.downstream.objectnav_sr)),
                    ("objectnav_spl", num(self.downstream.objectnav_spl)),
                ]),
            ),
        ])
        .to_json()
    }

    /// Both curves on the union of their sample distances.
    pub fn curves_csv(&self) -> String {
        let mut ds: Vec<f64> = self
            .curve_occ
            .samples
            .iter()
            .chain(&self.curve_topo.samples)
            .map(|s| s.0)
            .collect();
        ds.sort_by(f64::total_cmp);
        ds.dedup();
        let mut out = String::from("distance_m,cr_occ,cr_topo\n");
        for d in ds {
            out.push_str(&format!(
                "{d:.3},{:.6},{:.6}\n",
                self.curve_occ.at(d),
                self.curve_topo.at(d)
            ));
        }
        out
    }
}

/// Full metrics for an episode, including downstream tasks on its final memo.
pub fn evaluate(scene: &Scene, log: &EpisodeLog, occ_range_m: f64) -> MetricsReport {
    let (curve_topo, cr_topo) = coverage_topo(scene, &log.poses, &log.distances);
    let (curve_occ, cr_occ) = coverage_occ(scene, &log.poses, &log.distances, occ_range_m);
    let length = log.path_length_m();
    let memo = &log.final_memo;
    let start = memo.nodes().next().map_or(0, |n| n.id);
    MetricsReport {
        planner: log.header.planner.clone(),
        cr_occ,
        cr_topo,
        auc_occ: auc_or_instant(&curve_occ, length),
        auc_topo: auc_or_instant(&curve_topo, length),
        path_length_m: length,
        termination: log.termination,
        graph: graph_quality(memo, scene),
        downstream: downstream(memo, scene, start),
        curve_occ,
        curve_topo,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(samples: &[(f64, f64)]) -> CoverageCurve {
        CoverageCurve {
            samples: samples.to_vec(),
        }
    }

    #[test]
    fn auc_analytic_cases() {
        assert!((auc(&curve(&[(0.0, 1.0)]), 8.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((auc(&curve(&[(0.0, 0.0), (4.0, 1.0)]), 8.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((auc(&curve(&[(0.0, 0.0), (2.0, 0.5), (4.0, 1.0)]), 8.0).unwrap() - 0.625).abs() < 1e-12);
        assert_eq!(
            auc(&curve(&[(0.0, 0.25)]), 0.0),
            Err(AucError::ZeroLength { coverage: 0.25 })
        );
    }

    #[test]
    fn step_lookup_is_right_continuous() {
        let c = curve(&[(0.0, 0.0), (1.0, 0.5)]);
        assert_eq!(c.at(0.999), 0.0);
        assert_eq!(c.at(1.0), 0.5);
    }
}
