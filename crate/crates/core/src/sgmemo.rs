//! Online scene-graph memory of navigational affordances.
//!
//! Per-step detections are lifted to the floor plane, reconciled against the
//! existing graph by a match radius, pruned near the travelled trail, thinned
//! by connectivity-aware non-maximum suppression, and finally consolidated by
//! radius clustering when the agent physically reaches a node.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::Canon;
use crate::geometry::{ipm_project, segment_distance, CameraModel, Pose, Vec2};
use crate::pathing;
use crate::perception::LocalObservation;
use crate::scene::{SnaType, STAIR_COST_M};

pub const MEMO_VERSION: i64 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MemoError {
    #[error("unknown node {0}")]
    UnknownNode(u64),
    #[error("agent is {distance:.3} m from node {id}, outside the match radius")]
    NotAdjacent { id: u64, distance: f64 },
    #[error("invalid memo parameters: {0}")]
    InvalidParams(String),
    #[error("node {0} is visited or current and cannot be removed")]
    Protected(u64),
    #[error("invalid edge {0}-{1}")]
    BadEdge(u64, u64),
    #[error("malformed memo document: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoParams {
    /// Match radius for reconciling new detections with existing nodes.
    pub epsilon_m: f64,
    /// Unmatched detections closer than this to the travelled trail are dropped.
    pub trail_prune_m: f64,
    /// Radius of arrival-time clustering.
    pub cluster_radius_m: f64,
}

impl Default for MemoParams {
    fn default() -> Self {
        Self {
            epsilon_m: 1.0,
            trail_prune_m: 0.8,
            cluster_radius_m: 1.5,
        }
    }
}

impl MemoParams {
    pub fn validate(&self) -> Result<(), MemoError> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !(pos(self.epsilon_m) && pos(self.trail_prune_m) && pos(self.cluster_radius_m)) {
            return Err(MemoError::InvalidParams("all radii must be positive".into()));
        }
        if self.trail_prune_m >= self.epsilon_m + self.cluster_radius_m {
            return Err(MemoError::InvalidParams(
                "trail_prune_m must be below epsilon_m + cluster_radius_m".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeStatus {
    Unvisited,
    Visited,
}

impl NodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeStatus::Visited => "visited",
            NodeStatus::Unvisited => "unvisited",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoNode {
    pub id: u64,
    pub position: Vec2,
    pub floor: usize,
    pub sna_type: SnaType,
    pub status: NodeStatus,
    pub obs_count: u64,
    pub room_votes: BTreeMap<String, u64>,
    pub object_set: BTreeSet<String>,
    type_votes: BTreeMap<SnaType, u64>,
}

impl MemoNode {
    pub fn new(id: u64, position: Vec2, floor: usize, sna_type: SnaType, status: NodeStatus) -> Self {
        let mut type_votes = BTreeMap::new();
        if sna_type.is_known() {
            type_votes.insert(sna_type, 1);
        }
        Self {
            id,
            position,
            floor,
            sna_type,
            status,
            obs_count: 1,
            room_votes: BTreeMap::new(),
            object_set: BTreeSet::new(),
            type_votes,
        }
    }

    pub fn is_visited(&self) -> bool {
        self.status == NodeStatus::Visited
    }

    /// Plurality room vote; ties go to the lexicographically smallest label.
    pub fn room_label(&self) -> Option<&str> {
        let mut best: Option<(&str, u64)> = None;
        for (label, &n) in &self.room_votes {
            if best.is_none_or(|(_, b)| n > b) {
                best = Some((label, n));
            }
        }
        best.map(|(l, _)| l)
    }

    fn vote_type(&mut self, t: SnaType) {
        if !t.is_known() {
            return;
        }
        *self.type_votes.entry(t).or_default() += 1;
        self.sna_type = self
            .type_votes
            .iter()
            .max_by_key(|(t, n)| (**n, t.priority()))
            .map(|(t, _)| *t)
            .unwrap_or(self.sna_type);
    }
}

/// A detection lifted onto the floor plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedNode {
    pub position: Vec2,
    pub sna_type: SnaType,
}

/// Local bird's-eye graph produced from one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGraph {
    pub floor: usize,
    pub nodes: Vec<LiftedNode>,
    pub edges: Vec<(usize, usize)>,
    /// Detections whose pixel ray missed the floor.
    pub dropped: usize,
}

/// Back-projects every detection through its camera. Detections that fail to
/// hit the floor are dropped together with their incident edges.
pub fn lift_local(obs: &LocalObservation, rig: &[CameraModel], pose: &Pose) -> LocalGraph {
    let mut slot = vec![None; obs.detections.len()];
    let mut nodes = Vec::with_capacity(obs.detections.len());
    let mut dropped = 0;
    for (i, d) in obs.detections.iter().enumerate() {
        let lifted = rig
            .get(d.camera_index)
            .and_then(|cam| ipm_project(d.pixel, cam, pose).ok());
        match lifted {
            Some(p) => {
                slot[i] = Some(nodes.len());
                nodes.push(LiftedNode {
                    position: p,
                    sna_type: d.sna_type,
                });
            }
            None => dropped += 1,
        }
    }
    let edges = obs
        .local_edges
        .iter()
        .filter_map(|&(a, b)| Some(((*slot.get(a)?)?, (*slot.get(b)?)?)))
        .collect();
    LocalGraph {
        floor: pose.floor,
        nodes,
        edges,
        dropped,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgMemo {
    params: MemoParams,
    nodes: BTreeMap<u64, MemoNode>,
    adj: BTreeMap<u64, BTreeSet<u64>>,
    current: u64,
    trajectory: Vec<Pose>,
    next_id: u64,
}

impl SgMemo {
    /// Memo rooted at the start pose: a single visited node carrying the
    /// first observation's room label and objects.
    pub fn new(params: MemoParams, start: &Pose, obs: &LocalObservation) -> Result<SgMemo, MemoError> {
        params.validate()?;
        let mut root = MemoNode::new(0, start.position(), start.floor, SnaType::Normal, NodeStatus::Visited);
        root.room_votes.insert(obs.room_label.clone(), 1);
        root.object_set.extend(obs.visible_objects.iter().cloned());
        let memo = SgMemo {
            params,
            nodes: BTreeMap::from([(0, root)]),
            adj: BTreeMap::from([(0, BTreeSet::new())]),
            current: 0,
            trajectory: vec![*start],
            next_id: 1,
        };
        debug_assert_eq!(memo.validate(), Ok(()));
        Ok(memo)
    }

    /// Assembles a memo from explicit parts, checking every invariant.
    pub fn from_parts(
        params: MemoParams,
        nodes: Vec<MemoNode>,
        edges: &[(u64, u64)],
        current: u64,
    ) -> Result<SgMemo, MemoError> {
        params.validate()?;
        let mut memo = SgMemo {
            params,
            nodes: BTreeMap::new(),
            adj: BTreeMap::new(),
            current,
            trajectory: Vec::new(),
            next_id: 0,
        };
        for n in nodes {
            memo.next_id = memo.next_id.max(n.id + 1);
            memo.adj.insert(n.id, BTreeSet::new());
            if memo.nodes.insert(n.id, n).is_some() {
                return Err(MemoError::Parse("duplicate node id".into()));
            }
        }
        for &(a, b) in edges {
            memo.connect(a, b)?;
        }
        memo.validate().map_err(MemoError::Parse)?;
        Ok(memo)
    }

    pub fn params(&self) -> &MemoParams {
        &self.params
    }

    pub fn current(&self) -> u64 {
        self.current
    }

    pub fn current_node(&self) -> &MemoNode {
        &self.nodes[&self.current]
    }

    pub fn node(&self, id: u64) -> Option<&MemoNode> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &MemoNode> {
        self.nodes.values()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn neighbors(&self, id: u64) -> impl Iterator<Item = u64> + '_ {
        self.adj.get(&id).into_iter().flat_map(|s| s.iter().copied())
    }

    /// Undirected edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(u64, u64)> {
        self.adj
            .iter()
            .flat_map(|(&a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    pub fn trajectory(&self) -> &[Pose] {
        &self.trajectory
    }

    pub fn record_pose(&mut self, pose: Pose) {
        self.trajectory.push(pose);
    }

    /// Length of a memo edge; edges between floors cost a fixed stair traversal.
    pub fn edge_length(&self, a: u64, b: u64) -> f64 {
        let (na, nb) = (&self.nodes[&a], &self.nodes[&b]);
        if na.floor == nb.floor {
            na.position.distance(nb.position)
        } else {
            STAIR_COST_M
        }
    }

    /// Shortest graph distances from `from` over memo edges; unreachable nodes are absent.
    pub fn graph_distances(&self, from: u64) -> BTreeMap<u64, f64> {
        let ids: Vec<u64> = self.nodes.keys().copied().collect();
        let Ok(start) = ids.binary_search(&from) else {
            return BTreeMap::new();
        };
        let dist = pathing::dijkstra(ids.len(), start, |s, out| {
            for b in self.neighbors(ids[s]) {
                let j = ids.binary_search(&b).expect("live neighbour");
                out.push((j, self.edge_length(ids[s], b)));
            }
        });
        ids.iter()
            .zip(dist)
            .filter(|(_, d)| d.is_finite())
            .map(|(&id, d)| (id, d))
            .collect()
    }

    /// Shortest node sequence from `from` to `to` over memo edges; ties
    /// prefer lower ids.
    pub fn route(&self, from: u64, to: u64) -> Option<Vec<u64>> {
        let dist = self.graph_distances(from);
        let mut at = to;
        let mut path = vec![to];
        while at != from {
            let d = *dist.get(&at)?;
            at = self
                .neighbors(at)
                .filter(|n| !path.contains(n))
                .filter(|n| dist.get(n).is_some_and(|dn| (dn + self.edge_length(*n, at) - d).abs() <= 1e-9))
                .min_by(|a, b| dist[a].total_cmp(&dist[b]).then(a.cmp(b)))?;
            path.push(at);
        }
        path.reverse();
        Some(path)
    }

    /// Nearest node on `floor` within `radius` (inclusive); ties go to the lowest id.
    pub fn nearest(&self, p: Vec2, floor: usize, radius: f64) -> Option<u64> {
        let mut best: Option<(f64, u64)> = None;
        for n in self.nodes.values() {
            if n.floor != floor {
                continue;
            }
            let d = n.position.distance(p);
            if d <= radius && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, n.id));
            }
        }
        best.map(|(_, id)| id)
    }

    /// Distance from `p` to the travelled trail on `floor`.
    pub fn trail_distance(&self, p: Vec2, floor: usize) -> f64 {
        let mut best = f64::INFINITY;
        for (i, pose) in self.trajectory.iter().enumerate() {
            if pose.floor != floor {
                continue;
            }
            best = best.min(p.distance(pose.position()));
            if let Some(next) = self.trajectory.get(i + 1) {
                if next.floor == floor {
                    best = best.min(segment_distance(p, pose.position(), next.position()));
                }
            }
        }
        best
    }

    fn add_edge(&mut self, a: u64, b: u64) {
        if a != b {
            self.adj.entry(a).or_default().insert(b);
            self.adj.entry(b).or_default().insert(a);
        }
    }

    /// Adds an undirected edge between two live nodes.
    pub fn connect(&mut self, a: u64, b: u64) -> Result<(), MemoError> {
        if a == b || !self.nodes.contains_key(&a) || !self.nodes.contains_key(&b) {
            return Err(MemoError::BadEdge(a, b));
        }
        self.add_edge(a, b);
        Ok(())
    }

    fn insert_node(&mut self, position: Vec2, floor: usize, sna_type: SnaType) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.nodes
            .insert(id, MemoNode::new(id, position, floor, sna_type, NodeStatus::Unvisited));
        self.adj.insert(id, BTreeSet::new());
        self.add_edge(self.current, id);
        id
    }

    /// Inserts an unvisited node linked to the current node, bypassing the
    /// match and trail rules. Used for stair landings on another floor.
    pub fn insert_candidate(&mut self, position: Vec2, floor: usize, sna_type: SnaType) -> u64 {
        let id = self.insert_node(position, floor, sna_type);
        debug_assert_eq!(self.validate(), Ok(()));
        id
    }

    fn remove_node(&mut self, id: u64) {
        if let Some(ns) = self.adj.remove(&id) {
            for n in ns {
                if let Some(s) = self.adj.get_mut(&n) {
                    s.remove(&id);
                }
            }
        }
        self.nodes.remove(&id);
    }

    /// Deletes an unvisited node, e.g. a target that proved unreachable.
    pub fn remove_unvisited(&mut self, id: u64) -> Result<(), MemoError> {
        let n = self.nodes.get(&id).ok_or(MemoError::UnknownNode(id))?;
        if n.is_visited() || id == self.current {
            return Err(MemoError::Protected(id));
        }
        self.remove_node(id);
        debug_assert_eq!(self.validate(), Ok(()));
        Ok(())
    }

    /// Reconciles a lifted local graph with the memo. Returns the new
    /// candidate ids that survive suppression.
    pub fn integrate(&mut self, local: &LocalGraph, pose: &Pose) -> Vec<u64> {
        let floor = pose.floor;
        let eps = self.params.epsilon_m;
        let mut counterpart: Vec<Option<u64>> = vec![None; local.nodes.len()];
        let mut inserted = Vec::new();
        for (i, u) in local.nodes.iter().enumerate() {
            if !u.position.is_finite() {
                continue;
            }
            match self.nearest(u.position, floor, eps) {
                Some(m) if self.nodes[&m].is_visited() => {
                    self.add_edge(self.current, m);
                    counterpart[i] = Some(m);
                }
                Some(m) => {
                    let node = self.nodes.get_mut(&m).expect("live match");
                    let k = node.obs_count as f64;
                    node.position = (node.position * k + u.position) * (1.0 / (k + 1.0));
                    node.obs_count += 1;
                    node.vote_type(u.sna_type);
                    counterpart[i] = Some(m);
                }
                None => {
                    if !u.sna_type.is_known() || self.trail_distance(u.position, floor) < self.params.trail_prune_m {
                        continue;
                    }
                    let id = self.insert_node(u.position, floor, u.sna_type);
                    inserted.push(id);
                    counterpart[i] = Some(id);
                }
            }
        }
        for &(a, b) in &local.edges {
            if let (Some(Some(x)), Some(Some(y))) = (counterpart.get(a), counterpart.get(b)) {
                self.add_edge(*x, *y);
            }
        }
        let kept = self.nms(&inserted);
        debug_assert_eq!(self.validate(), Ok(()));
        kept
    }

    /// Connectivity-aware suppression: within each group of candidates joined
    /// by candidate-candidate edges, keep only the one closest to the current
    /// node (lowest id on ties); the rest are folded into it.
    pub fn nms(&mut self, candidates: &[u64]) -> Vec<u64> {
        let cand: BTreeSet<u64> = candidates
            .iter()
            .copied()
            .filter(|id| self.nodes.get(id).is_some_and(|n| !n.is_visited()))
            .collect();
        let origin = self.current_node().position;
        let mut seen = BTreeSet::new();
        let mut kept = Vec::new();
        for &c in &cand {
            if !seen.insert(c) {
                continue;
            }
            let mut group = vec![c];
            let mut queue = VecDeque::from([c]);
            while let Some(u) = queue.pop_front() {
                for v in self.neighbors(u).collect::<Vec<_>>() {
                    if cand.contains(&v) && seen.insert(v) {
                        group.push(v);
                        queue.push_back(v);
                    }
                }
            }
            let keep = *group
                .iter()
                .min_by(|a, b| {
                    let da = self.nodes[a].position.distance(origin);
                    let db = self.nodes[b].position.distance(origin);
                    da.total_cmp(&db).then(a.cmp(b))
                })
                .expect("non-empty group");
            for &g in &group {
                if g != keep {
                    self.fold_into(g, keep);
                }
            }
            kept.push(keep);
        }
        kept.sort_unstable();
        debug_assert_eq!(self.validate(), Ok(()));
        kept
    }

    /// Moves every edge of `from` onto `into` and deletes `from`.
    fn fold_into(&mut self, from: u64, into: u64) {
        let ns: Vec<u64> = self.neighbors(from).collect();
        self.remove_node(from);
        for n in ns {
            self.add_edge(into, n);
        }
    }

    /// Marks `id` visited from the pose in `obs`, records its semantics, and
    /// clusters nearby nodes into a single representative. Returns the
    /// representative, which becomes the current node.
    pub fn arrive(&mut self, id: u64, obs: &LocalObservation) -> Result<u64, MemoError> {
        let pose = obs.pose_at_capture;
        let node = self.nodes.get(&id).ok_or(MemoError::UnknownNode(id))?;
        let distance = node.position.distance(pose.position());
        if node.floor != pose.floor || distance > self.params.epsilon_m {
            return Err(MemoError::NotAdjacent {
                id,
                distance: if node.floor == pose.floor { distance } else { f64::INFINITY },
            });
        }
        let previous = self.current;
        {
            let node = self.nodes.get_mut(&id).expect("checked above");
            node.status = NodeStatus::Visited;
            *node.room_votes.entry(obs.room_label.clone()).or_default() += 1;
            node.object_set.extend(obs.visible_objects.iter().cloned());
        }
        // The agent just travelled from the previous node, so the two are
        // navigably connected.
        self.add_edge(previous, id);

        let centre = self.nodes[&id].position;
        let floor = self.nodes[&id].floor;
        let radius = self.params.cluster_radius_m;
        let members: Vec<u64> = self
            .nodes
            .values()
            .filter(|n| n.floor == floor && n.position.distance(centre) <= radius)
            .map(|n| n.id)
            .collect();
        let rep = *members
            .iter()
            .max_by_key(|m| {
                let n = &self.nodes[m];
                (n.sna_type.priority(), n.status, std::cmp::Reverse(n.id))
            })
            .expect("cluster contains the arrived node");

        let total: u64 = members.iter().map(|m| self.nodes[m].obs_count).sum();
        let mut sum = Vec2::default();
        for m in &members {
            let n = &self.nodes[m];
            sum = sum + n.position * n.obs_count as f64;
        }
        let merged_position = sum * (1.0 / total as f64);
        for &m in &members {
            if m == rep {
                continue;
            }
            let absorbed = self.nodes[&m].clone();
            self.fold_into(m, rep);
            let r = self.nodes.get_mut(&rep).expect("representative");
            for (label, n) in absorbed.room_votes {
                *r.room_votes.entry(label).or_default() += n;
            }
            r.object_set.extend(absorbed.object_set);
            r.obs_count += absorbed.obs_count;
            for (t, n) in absorbed.type_votes {
                *r.type_votes.entry(t).or_default() += n;
            }
        }
        let r = self.nodes.get_mut(&rep).expect("representative");
        r.status = NodeStatus::Visited;
        r.position = merged_position;
        self.current = rep;
        debug_assert_eq!(self.validate(), Ok(()));
        Ok(rep)
    }

    /// Checks every structural invariant, describing the first violation.
    pub fn validate(&self) -> Result<(), String> {
        self.params.validate().map_err(|e| e.to_string())?;
        if self.nodes.len() != self.adj.len() {
            return Err("adjacency and node tables disagree".into());
        }
        for (&id, n) in &self.nodes {
            if n.id != id {
                return Err(format!("node keyed {id} carries id {}", n.id));
            }
            if id >= self.next_id {
                return Err(format!("node {id} not below the id counter"));
            }
            if n.obs_count == 0 {
                return Err(format!("node {id} has zero observations"));
            }
            if !n.position.is_finite() {
                return Err(format!("node {id} has a non-finite position"));
            }
            if n.is_visited() && n.room_votes.is_empty() {
                return Err(format!("visited node {id} has no room votes"));
            }
            let ns = self.adj.get(&id).ok_or(format!("node {id} missing adjacency"))?;
            for &m in ns {
                if m == id {
                    return Err(format!("self edge on {id}"));
                }
                if !self.adj.get(&m).is_some_and(|s| s.contains(&id)) {
                    return Err(format!("edge {id}-{m} dangling or asymmetric"));
                }
            }
        }
        let cur = self
            .nodes
            .get(&self.current)
            .ok_or(format!("current node {} missing", self.current))?;
        if !cur.is_visited() {
            return Err(format!("current node {} is not visited", self.current));
        }
        let visited: BTreeSet<u64> = self.nodes.values().filter(|n| n.is_visited()).map(|n| n.id).collect();
        let mut reached = BTreeSet::from([self.current]);
        let mut queue = VecDeque::from([self.current]);
        while let Some(u) = queue.pop_front() {
            for v in self.neighbors(u) {
                if visited.contains(&v) && reached.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        if reached.len() != visited.len() {
            return Err("visited subgraph is disconnected".into());
        }
        Ok(())
    }

    /// Canonical JSON: sorted keys, nodes by id, sorted edges and objects,
    /// three-decimal positions.
    pub fn to_json(&self) -> String {
        let nodes = self
            .nodes
            .values()
            .map(|n| {
                Canon::obj([
                    ("floor", Canon::Int(n.floor as i64)),
                    ("id", Canon::Int(n.id as i64)),
                    ("objects", Canon::Arr(n.object_set.iter().map(|o| Canon::str(o.clone())).collect())),
                    ("pos", Canon::point(n.position.x, n.position.y)),
                    ("room", n.room_label().map_or(Canon::Null, Canon::str)),
                    ("status", Canon::str(n.status.as_str())),
                    ("type", Canon::str(n.sna_type.as_str())),
                ])
            })
            .collect();
        let edges = self
            .edges()
            .into_iter()
            .map(|(a, b)| Canon::Arr(vec![Canon::Int(a as i64), Canon::Int(b as i64)]))
            .collect();
        Canon::obj([
            ("current", Canon::Int(self.current as i64)),
            ("edges", Canon::Arr(edges)),
            ("nodes", Canon::Arr(nodes)),
            ("version", Canon::Int(MEMO_VERSION)),
        ])
        .to_json()
    }

    /// Reads a canonical memo document. Vote histories are not stored, so
    /// each node comes back with a single vote for its reported room.
    pub fn parse(document: &str, params: MemoParams) -> Result<SgMemo, MemoError> {
        let doc: MemoDoc = serde_json::from_str(document).map_err(|e| MemoError::Parse(e.to_string()))?;
        if doc.version.is_some_and(|v| v != MEMO_VERSION) {
            return Err(MemoError::Parse("unsupported version".into()));
        }
        let nodes = doc
            .nodes
            .into_iter()
            .map(|d| {
                let status = match d.status.as_str() {
                    "visited" => NodeStatus::Visited,
                    "unvisited" => NodeStatus::Unvisited,
                    other => return Err(MemoError::Parse(format!("bad status {other:?}"))),
                };
                let mut n = MemoNode::new(d.id, Vec2::new(d.pos[0], d.pos[1]), d.floor, d.sna_type, status);
                if let Some(room) = d.room {
                    n.room_votes.insert(room, 1);
                }
                n.object_set = d.objects.into_iter().collect();
                Ok(n)
            })
            .collect::<Result<Vec<_>, _>>()?;
        SgMemo::from_parts(params, nodes, &doc.edges, doc.current)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MemoDoc {
    current: u64,
    edges: Vec<(u64, u64)>,
    nodes: Vec<MemoNodeDoc>,
    #[serde(default)]
    version: Option<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MemoNodeDoc {
    floor: usize,
    id: u64,
    objects: Vec<String>,
    pos: [f64; 2],
    room: Option<String>,
    status: String,
    #[serde(rename = "type")]
    sna_type: SnaType,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs_at(pose: Pose, room: &str, objects: &[&str]) -> LocalObservation {
        LocalObservation {
            detections: Vec::new(),
            local_edges: Vec::new(),
            room_label: room.to_string(),
            visible_objects: objects.iter().map(|s| s.to_string()).collect(),
            pose_at_capture: pose,
        }
    }

    fn lifted(points: &[(f64, f64, SnaType)], edges: &[(usize, usize)]) -> LocalGraph {
        LocalGraph {
            floor: 0,
            nodes: points
                .iter()
                .map(|&(x, y, t)| LiftedNode {
                    position: Vec2::new(x, y),
                    sna_type: t,
                })
                .collect(),
            edges: edges.to_vec(),
            dropped: 0,
        }
    }

    fn origin_memo() -> (SgMemo, Pose) {
        let pose = Pose::new(0.0, 0.0, 0.0, 0);
        (SgMemo::new(MemoParams::default(), &pose, &obs_at(pose, "hall", &[])).unwrap(), pose)
    }

    #[test]
    fn equal_weight_merge() {
        let (mut m, pose) = origin_memo();
        let ids = m.integrate(&lifted(&[(2.0, 0.0, SnaType::Normal)], &[]), &pose);
        assert_eq!(ids.len(), 1);
        m.integrate(&lifted(&[(2.4, 0.0, SnaType::Normal)], &[]), &pose);
        let n = m.node(ids[0]).unwrap();
        assert!((n.position.x - 2.2).abs() < 1e-12 && n.position.y == 0.0);
        assert_eq!(n.obs_count, 2);
    }

    #[test]
    fn trail_and_unknown_are_pruned() {
        let (mut m, pose) = origin_memo();
        m.record_pose(Pose::new(3.0, 0.0, 0.0, 0));
        let ids = m.integrate(
            &lifted(&[(1.5, 0.3, SnaType::RoomEntry), (0.0, 3.0, SnaType::Unknown)], &[]),
            &pose,
        );
        assert!(ids.is_empty());
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn nms_keeps_closest_of_connected_candidates() {
        let (mut m, pose) = origin_memo();
        let kept = m.integrate(
            &lifted(
                &[
                    (0.0, 3.0, SnaType::Normal),
                    (0.0, -2.0, SnaType::Normal),
                    (4.0, 0.0, SnaType::Normal),
                    (-5.0, 0.0, SnaType::Normal),
                ],
                &[(0, 1), (1, 2)],
            ),
            &pose,
        );
        assert_eq!(m.len(), 3);
        let kept_pos: Vec<Vec2> = kept.iter().map(|id| m.node(*id).unwrap().position).collect();
        assert_eq!(kept_pos, vec![Vec2::new(0.0, -2.0), Vec2::new(-5.0, 0.0)]);
    }

    #[test]
    fn arrival_clusters_by_priority() {
        let (mut m, pose) = origin_memo();
        let ids = m.integrate(&lifted(&[(3.0, 0.0, SnaType::Normal), (0.0, 3.0, SnaType::Normal)], &[]), &pose);
        let entry = m.insert_candidate(Vec2::new(3.0, 1.0), 0, SnaType::RoomEntry);
        let at = Pose::new(3.0, 0.0, 0.0, 0);
        let rep = m.arrive(ids[0], &obs_at(at, "kitchen", &["sofa"])).unwrap();
        assert_eq!(rep, entry);
        let r = m.node(rep).unwrap();
        assert!(r.is_visited());
        assert_eq!(r.sna_type, SnaType::RoomEntry);
        assert!((r.position.y - 0.5).abs() < 1e-12);
        assert_eq!(m.current(), rep);
        assert!(m.node(ids[0]).is_none());
        assert_eq!(m.validate(), Ok(()));
    }

    #[test]
    fn room_plurality_and_object_union() {
        let (mut m, _) = origin_memo();
        for (room, objs) in [("kitchen", vec!["sofa"]), ("kitchen", vec!["sofa", "lamp"]), ("hallway", vec![])] {
            m.arrive(0, &obs_at(Pose::new(0.0, 0.0, 0.0, 0), room, &objs)).unwrap();
        }
        let n = m.node(0).unwrap();
        assert_eq!(n.room_label(), Some("kitchen"));
        assert_eq!(n.object_set.iter().collect::<Vec<_>>(), vec!["lamp", "sofa"]);
    }

    #[test]
    fn arrive_errors() {
        let (mut m, _) = origin_memo();
        let far = obs_at(Pose::new(5.0, 0.0, 0.0, 0), "hall", &[]);
        assert_eq!(m.arrive(9, &far), Err(MemoError::UnknownNode(9)));
        assert!(matches!(m.arrive(0, &far), Err(MemoError::NotAdjacent { .. })));
    }

    #[test]
    fn golden_single_node() {
        let (m, _) = origin_memo();
        assert_eq!(
            m.to_json(),
            r#"{"current":0,"edges":[],"nodes":[{"floor":0,"id":0,"objects":[],"pos":[0.000,0.000],"room":"hall","status":"visited","type":"normal"}],"version":1}"#
        );
    }

    #[test]
    fn invalid_params_rejected() {
        let p = MemoParams {
            trail_prune_m: 5.0,
            ..MemoParams::default()
        };
        assert!(p.validate().is_err());
    }
}
