//! Ground-truth world model.
//!
//! A [`Scene`] holds one [`FloorPlan`] per storey: an occupancy grid, room
//! polygons, the ground-truth affordance graph and object instances. Storeys
//! are joined by stair links between `Stairs` nodes.

mod generate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::Canon;
use crate::geometry::{
    contains_unchecked, on_polygon_boundary, polygon_area, GridIndex, OccupancyGrid, Vec2,
};
use crate::pathing;

pub use generate::{generate_scene, sample_start, GenParams};

/// Traversal cost charged for a stair link, in meters.
pub const STAIR_COST_M: f64 = 3.0;

/// Label returned by [`Scene::room_at`] outside every room polygon.
pub const CORRIDOR: &str = "corridor";

pub const DEFAULT_RESOLUTION: f64 = 0.1;

pub const SCENE_VERSION: i64 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("validation error at {path}: {message}")]
    Validation { path: String, message: String },
    #[error("generation error: {0}")]
    Generation(String),
    #[error("point ({x:.3}, {y:.3}) on floor {floor} is out of bounds")]
    OutOfBounds { x: f64, y: f64, floor: usize },
    #[error("no traversable route")]
    Unreachable,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> SceneError {
    SceneError::Validation {
        path: path.into(),
        message: message.into(),
    }
}

/// Semantic navigational affordance taxonomy. `Unknown` only arises from
/// perception noise and never appears in ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnaType {
    Stairs,
    RoomEntry,
    Intersection,
    Normal,
    Unknown,
}

impl SnaType {
    pub const KNOWN: [SnaType; 4] = [
        SnaType::Stairs,
        SnaType::RoomEntry,
        SnaType::Intersection,
        SnaType::Normal,
    ];

    /// Representative priority used when clustering: stairs > room entries >
    /// intersections > normal nodes.
    pub fn priority(self) -> i32 {
        match self {
            SnaType::Stairs => 3,
            SnaType::RoomEntry => 2,
            SnaType::Intersection => 1,
            SnaType::Normal => 0,
            SnaType::Unknown => -1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SnaType::Stairs => "stairs",
            SnaType::RoomEntry => "room_entry",
            SnaType::Intersection => "intersection",
            SnaType::Normal => "normal",
            SnaType::Unknown => "unknown",
        }
    }

    pub fn is_known(self) -> bool {
        self != SnaType::Unknown
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Room {
    pub polygon: Vec<Vec2>,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GtSnaNode {
    pub id: String,
    pub position: Vec2,
    pub floor: usize,
    pub sna_type: SnaType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub category: String,
    pub position: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloorPlan {
    pub grid: OccupancyGrid,
    pub rooms: Vec<Room>,
    pub nodes: Vec<GtSnaNode>,
    /// Undirected edges as indices into `nodes`, stored with `a < b`.
    pub edges: Vec<(usize, usize)>,
    pub objects: Vec<SceneObject>,
}

/// Location of a ground-truth node: storey and index within that storey.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef {
    pub floor: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub resolution: f64,
    pub floors: Vec<FloorPlan>,
    pub stair_links: Vec<(NodeRef, NodeRef)>,
    index: BTreeMap<String, NodeRef>,
}

/// A grid route through the scene, possibly crossing storeys.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub cells: Vec<(usize, GridIndex)>,
    pub length_m: f64,
}

/// Shortest distances from one source to every cell of every storey.
#[derive(Debug, Clone)]
pub struct DistanceField {
    offsets: Vec<usize>,
    dist: Vec<f64>,
}

impl DistanceField {
    pub fn at_cell(&self, floor: usize, flat: usize) -> f64 {
        self.dist[self.offsets[floor] + flat]
    }
}

// ---------------------------------------------------------------------------
// file schema

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    #[serde(default)]
    version: Option<i64>,
    resolution: f64,
    floors: Vec<FloorDoc>,
    stair_links: Vec<(String, String)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FloorDoc {
    grid: Vec<String>,
    rooms: Vec<RoomDoc>,
    nodes: Vec<NodeDoc>,
    edges: Vec<(String, String)>,
    objects: Vec<ObjectDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoomDoc {
    polygon: Vec<[f64; 2]>,
    category: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    pos: [f64; 2],
    #[serde(rename = "type")]
    sna_type: SnaType,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    category: String,
    pos: [f64; 2],
}

/// Parses and fully validates a scene document.
pub fn load_scene(document: &str) -> Result<Scene, SceneError> {
    let doc: SceneDoc =
        serde_json::from_str(document).map_err(|e| SceneError::Schema(e.to_string()))?;
    if let Some(v) = doc.version {
        if v != SCENE_VERSION {
            return Err(invalid("version", format!("unsupported version {v}")));
        }
    }
    if !(doc.resolution.is_finite() && doc.resolution > 0.0) {
        return Err(invalid("resolution", "must be a positive number"));
    }
    if doc.floors.is_empty() {
        return Err(invalid("floors", "at least one floor is required"));
    }
    let mut floors = Vec::with_capacity(doc.floors.len());
    for (f, fd) in doc.floors.into_iter().enumerate() {
        floors.push(floor_from_doc(f, fd, doc.resolution)?);
    }
    let mut index = BTreeMap::new();
    for (f, floor) in floors.iter().enumerate() {
        for (i, n) in floor.nodes.iter().enumerate() {
            if index.insert(n.id.clone(), NodeRef { floor: f, index: i }).is_some() {
                return Err(invalid(
                    format!("floors[{f}].nodes[{i}].id"),
                    format!("duplicate node id {:?}", n.id),
                ));
            }
        }
    }
    let mut stair_links = Vec::with_capacity(doc.stair_links.len());
    for (k, (a, b)) in doc.stair_links.iter().enumerate() {
        let path = format!("stair_links[{k}]");
        let ra = *index
            .get(a)
            .ok_or_else(|| invalid(&path, format!("unknown node {a:?}")))?;
        let rb = *index
            .get(b)
            .ok_or_else(|| invalid(&path, format!("unknown node {b:?}")))?;
        stair_links.push((ra, rb));
    }
    let scene = Scene {
        resolution: doc.resolution,
        floors,
        stair_links,
        index,
    };
    scene.validate()?;
    Ok(scene)
}

fn floor_from_doc(f: usize, fd: FloorDoc, resolution: f64) -> Result<FloorPlan, SceneError> {
    let height = fd.grid.len();
    if height == 0 {
        return Err(invalid(format!("floors[{f}].grid"), "grid is empty"));
    }
    let width = fd.grid[0].chars().count();
    if width == 0 {
        return Err(invalid(format!("floors[{f}].grid[0]"), "grid row is empty"));
    }
    let mut occupied = Vec::with_capacity(width * height);
    for (r, row) in fd.grid.iter().enumerate() {
        if row.chars().count() != width {
            return Err(invalid(
                format!("floors[{f}].grid[{r}]"),
                format!("expected {width} cells"),
            ));
        }
        for (c, ch) in row.chars().enumerate() {
            match ch {
                '.' => occupied.push(false),
                '#' => occupied.push(true),
                other => {
                    return Err(invalid(
                        format!("floors[{f}].grid[{r}][{c}]"),
                        format!("unexpected cell character {other:?}"),
                    ))
                }
            }
        }
    }
    let grid = OccupancyGrid::from_cells(width, height, resolution, occupied);
    let rooms = fd
        .rooms
        .into_iter()
        .map(|r| Room {
            polygon: r.polygon.iter().map(|p| Vec2::new(p[0], p[1])).collect(),
            category: r.category,
        })
        .collect();
    let nodes: Vec<GtSnaNode> = fd
        .nodes
        .into_iter()
        .map(|n| GtSnaNode {
            id: n.id,
            position: Vec2::new(n.pos[0], n.pos[1]),
            floor: f,
            sna_type: n.sna_type,
        })
        .collect();
    let local: BTreeMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    let mut edges = Vec::with_capacity(fd.edges.len());
    for (k, (a, b)) in fd.edges.iter().enumerate() {
        let path = format!("floors[{f}].edges[{k}]");
        let ia = *local
            .get(a.as_str())
            .ok_or_else(|| invalid(&path, format!("node {a:?} is not on this floor")))?;
        let ib = *local
            .get(b.as_str())
            .ok_or_else(|| invalid(&path, format!("node {b:?} is not on this floor")))?;
        if ia == ib {
            return Err(invalid(&path, "self edge"));
        }
        edges.push((ia.min(ib), ia.max(ib)));
    }
    let objects = fd
        .objects
        .into_iter()
        .map(|o| SceneObject {
            category: o.category,
            position: Vec2::new(o.pos[0], o.pos[1]),
        })
        .collect();
    Ok(FloorPlan {
        grid,
        rooms,
        nodes,
        edges,
        objects,
    })
}

impl Scene {
    /// Builds a scene from parts and validates it.
    pub fn new(
        resolution: f64,
        floors: Vec<FloorPlan>,
        stair_links: Vec<(NodeRef, NodeRef)>,
    ) -> Result<Scene, SceneError> {
        let mut index = BTreeMap::new();
        for (f, floor) in floors.iter().enumerate() {
            for (i, n) in floor.nodes.iter().enumerate() {
                if index.insert(n.id.clone(), NodeRef { floor: f, index: i }).is_some() {
                    return Err(invalid(
                        format!("floors[{f}].nodes[{i}].id"),
                        format!("duplicate node id {:?}", n.id),
                    ));
                }
            }
        }
        let scene = Scene {
            resolution,
            floors,
            stair_links,
            index,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Checks every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.floors.is_empty() {
            return Err(invalid("floors", "at least one floor is required"));
        }
        for (f, floor) in self.floors.iter().enumerate() {
            if floor.grid.is_empty() {
                return Err(invalid(format!("floors[{f}].grid"), "grid is empty"));
            }
            for (i, room) in floor.rooms.iter().enumerate() {
                if room.polygon.len() < 3 || polygon_area(&room.polygon).abs() < 1e-12 {
                    return Err(invalid(
                        format!("floors[{f}].rooms[{i}].polygon"),
                        "degenerate polygon",
                    ));
                }
                if room.polygon.iter().any(|p| !p.is_finite()) {
                    return Err(invalid(
                        format!("floors[{f}].rooms[{i}].polygon"),
                        "non-finite vertex",
                    ));
                }
            }
            self.check_room_overlap(f)?;
            for (i, n) in floor.nodes.iter().enumerate() {
                let path = format!("floors[{f}].nodes[{i}]");
                if n.floor != f {
                    return Err(invalid(&path, "floor index mismatch"));
                }
                if !n.sna_type.is_known() {
                    return Err(invalid(&path, "ground-truth node type cannot be unknown"));
                }
                if !floor.grid.is_free_point(n.position) {
                    return Err(invalid(&path, "node is not on a free cell"));
                }
                if self.index.get(&n.id) != Some(&NodeRef { floor: f, index: i }) {
                    return Err(invalid(&path, "node index is stale or id duplicated"));
                }
            }
            for (k, &(a, b)) in floor.edges.iter().enumerate() {
                if a >= floor.nodes.len() || b >= floor.nodes.len() || a == b {
                    return Err(invalid(format!("floors[{f}].edges[{k}]"), "bad endpoint"));
                }
            }
            for (i, o) in floor.objects.iter().enumerate() {
                if !floor.grid.is_free_point(o.position) {
                    return Err(invalid(
                        format!("floors[{f}].objects[{i}]"),
                        "object is not on a free cell",
                    ));
                }
            }
        }
        for (k, &(a, b)) in self.stair_links.iter().enumerate() {
            let path = format!("stair_links[{k}]");
            for r in [a, b] {
                let node = self
                    .floors
                    .get(r.floor)
                    .and_then(|fl| fl.nodes.get(r.index))
                    .ok_or_else(|| invalid(&path, "dangling endpoint"))?;
                if node.sna_type != SnaType::Stairs {
                    return Err(invalid(
                        &path,
                        format!("endpoint {:?} is {}, expected stairs", node.id, node.sna_type.as_str()),
                    ));
                }
            }
            if a.floor.abs_diff(b.floor) != 1 {
                return Err(invalid(&path, "stair links must join adjacent floors"));
            }
        }
        Ok(())
    }

    /// Rooms must have pairwise-disjoint interiors; checked on cell centres.
    fn check_room_overlap(&self, f: usize) -> Result<(), SceneError> {
        let floor = &self.floors[f];
        if floor.rooms.len() < 2 {
            return Ok(());
        }
        let boxes: Vec<(Vec2, Vec2)> = floor
            .rooms
            .iter()
            .map(|r| {
                r.polygon.iter().fold(
                    (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
                    |(lo, hi), p| (Vec2::new(lo.x.min(p.x), lo.y.min(p.y)), Vec2::new(hi.x.max(p.x), hi.y.max(p.y))),
                )
            })
            .collect();
        for idx in (0..floor.grid.len()).map(|i| floor.grid.unflat(i)) {
            let c = floor.grid.center(idx);
            let mut owner = None;
            for (i, room) in floor.rooms.iter().enumerate() {
                let (lo, hi) = boxes[i];
                if c.x < lo.x || c.y < lo.y || c.x > hi.x || c.y > hi.y {
                    continue;
                }
                if contains_unchecked(c, &room.polygon) && !on_polygon_boundary(c, &room.polygon) {
                    if let Some(j) = owner {
                        return Err(invalid(
                            format!("floors[{f}].rooms[{i}]"),
                            format!("overlaps rooms[{j}]"),
                        ));
                    }
                    owner = Some(i);
                }
            }
        }
        Ok(())
    }

    pub fn floor(&self, f: usize) -> &FloorPlan {
        &self.floors[f]
    }

    pub fn node(&self, r: NodeRef) -> &GtSnaNode {
        &self.floors[r.floor].nodes[r.index]
    }

    pub fn node_by_id(&self, id: &str) -> Option<&GtSnaNode> {
        self.index.get(id).map(|r| self.node(*r))
    }

    pub fn node_ref(&self, id: &str) -> Option<NodeRef> {
        self.index.get(id).copied()
    }

    pub fn all_nodes(&self) -> impl Iterator<Item = &GtSnaNode> {
        self.floors.iter().flat_map(|f| f.nodes.iter())
    }

    pub fn node_count(&self) -> usize {
        self.floors.iter().map(|f| f.nodes.len()).sum()
    }

    pub fn room_count(&self) -> usize {
        self.floors.iter().map(|f| f.rooms.len()).sum()
    }

    pub fn object_count(&self) -> usize {
        self.floors.iter().map(|f| f.objects.len()).sum()
    }

    pub fn free_cell_count(&self) -> usize {
        self.floors.iter().map(|f| f.grid.free_count()).sum()
    }

    pub fn is_free(&self, point: Vec2, floor: usize) -> bool {
        self.floors
            .get(floor)
            .is_some_and(|f| f.grid.is_free_point(point))
    }

    /// Index of the first room polygon containing `point` (boundary-inclusive).
    pub fn room_index_at(&self, point: Vec2, floor: usize) -> Option<usize> {
        self.floors.get(floor)?.rooms.iter().position(|r| contains_unchecked(point, &r.polygon))
    }

    /// Room category at a point, or [`CORRIDOR`] outside every room.
    pub fn room_at(&self, point: Vec2, floor: usize) -> Result<&str, SceneError> {
        let fl = self.floors.get(floor).ok_or(SceneError::OutOfBounds {
            x: point.x,
            y: point.y,
            floor,
        })?;
        if fl.grid.cell_of(point).is_none() {
            return Err(SceneError::OutOfBounds {
                x: point.x,
                y: point.y,
                floor,
            });
        }
        Ok(match self.room_index_at(point, floor) {
            Some(i) => fl.rooms[i].category.as_str(),
            None => CORRIDOR,
        })
    }

    fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.floors.len() + 1);
        let mut acc = 0;
        for f in &self.floors {
            offsets.push(acc);
            acc += f.grid.len();
        }
        offsets.push(acc);
        offsets
    }

    fn portals(&self, offsets: &[usize]) -> BTreeMap<usize, Vec<usize>> {
        let mut portals: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(a, b) in &self.stair_links {
            let sa = self.state_of(offsets, self.node(a).position, a.floor);
            let sb = self.state_of(offsets, self.node(b).position, b.floor);
            if let (Some(sa), Some(sb)) = (sa, sb) {
                portals.entry(sa).or_default().push(sb);
                portals.entry(sb).or_default().push(sa);
            }
        }
        portals
    }

    fn state_of(&self, offsets: &[usize], p: Vec2, floor: usize) -> Option<usize> {
        let grid = &self.floors.get(floor)?.grid;
        let c = grid.cell_of(p)?;
        Some(offsets[floor] + grid.flat(c))
    }

    fn floor_of_state(offsets: &[usize], s: usize) -> usize {
        offsets.partition_point(|&o| o <= s) - 1
    }

    fn successors(&self, offsets: &[usize], portals: &BTreeMap<usize, Vec<usize>>, s: usize, out: &mut Vec<(usize, f64)>) {
        let f = Self::floor_of_state(offsets, s);
        let grid = &self.floors[f].grid;
        let base = offsets[f];
        let pass = |i: usize| grid.is_free_flat(i);
        let start = out.len();
        pathing::grid8_successors(grid.width(), grid.height(), grid.resolution(), &pass, s - base, out);
        for e in &mut out[start..] {
            e.0 += base;
        }
        if let Some(targets) = portals.get(&s) {
            out.extend(targets.iter().map(|&t| (t, STAIR_COST_M)));
        }
    }

    fn endpoint_state(&self, offsets: &[usize], p: Vec2, floor: usize) -> Result<usize, SceneError> {
        let s = self
            .state_of(offsets, p, floor)
            .ok_or(SceneError::OutOfBounds { x: p.x, y: p.y, floor })?;
        let f = &self.floors[floor].grid;
        if !f.is_free_flat(s - offsets[floor]) {
            return Err(SceneError::Unreachable);
        }
        Ok(s)
    }

    /// Optimal 8-connected grid route between two free points; stair links
    /// cost [`STAIR_COST_M`].
    pub fn route(&self, from: (Vec2, usize), to: (Vec2, usize)) -> Result<Route, SceneError> {
        let offsets = self.offsets();
        let portals = self.portals(&offsets);
        let s = self.endpoint_state(&offsets, from.0, from.1)?;
        let g = self.endpoint_state(&offsets, to.0, to.1)?;
        let goal_floor = to.1;
        let goal_grid = &self.floors[goal_floor].grid;
        let goal_local = g - offsets[goal_floor];
        let (states, length_m) = pathing::astar(
            *offsets.last().unwrap(),
            s,
            g,
            |st, out| self.successors(&offsets, &portals, st, out),
            |st| {
                let f = Self::floor_of_state(&offsets, st);
                if f == goal_floor {
                    pathing::octile(goal_grid.width(), goal_grid.resolution(), st - offsets[f], goal_local)
                } else {
                    0.0
                }
            },
        )
        .ok_or(SceneError::Unreachable)?;
        let cells = states
            .into_iter()
            .map(|st| {
                let f = Self::floor_of_state(&offsets, st);
                (f, self.floors[f].grid.unflat(st - offsets[f]))
            })
            .collect();
        Ok(Route { cells, length_m })
    }

    /// Ground-truth shortest path length between two free points.
    pub fn gt_shortest_path(&self, from: (Vec2, usize), to: (Vec2, usize)) -> Result<f64, SceneError> {
        self.route(from, to).map(|r| r.length_m)
    }

    /// Shortest distances from `from` to every cell of every floor.
    pub fn distance_field(&self, from: (Vec2, usize)) -> Result<DistanceField, SceneError> {
        let offsets = self.offsets();
        let portals = self.portals(&offsets);
        let s = self.endpoint_state(&offsets, from.0, from.1)?;
        let dist = pathing::dijkstra(*offsets.last().unwrap(), s, |st, out| {
            self.successors(&offsets, &portals, st, out)
        });
        Ok(DistanceField { offsets, dist })
    }

    /// Distance read from a field at a point; `None` when out of bounds or unreachable.
    pub fn field_distance(&self, field: &DistanceField, p: Vec2, floor: usize) -> Option<f64> {
        let grid = &self.floors.get(floor)?.grid;
        let c = grid.cell_of(p)?;
        let d = field.at_cell(floor, grid.flat(c));
        d.is_finite().then_some(d)
    }

    /// Canonical scene document: sorted keys, three-decimal coordinates.
    pub fn to_json(&self) -> String {
        let floors = self
            .floors
            .iter()
            .map(|fl| {
                let w = fl.grid.width();
                let grid = (0..fl.grid.height())
                    .map(|r| {
                        let row: String = (0..w)
                            .map(|c| {
                                if fl.grid.is_occupied(GridIndex::new(c as i64, r as i64)) {
                                    '#'
                                } else {
                                    '.'
                                }
                            })
                            .collect();
                        Canon::Str(row)
                    })
                    .collect();
                let rooms = fl
                    .rooms
                    .iter()
                    .map(|room| {
                        Canon::obj([
                            ("category", Canon::str(room.category.clone())),
                            (
                                "polygon",
                                Canon::Arr(room.polygon.iter().map(|p| Canon::point(p.x, p.y)).collect()),
                            ),
                        ])
                    })
                    .collect();
                let nodes = fl
                    .nodes
                    .iter()
                    .map(|n| {
                        Canon::obj([
                            ("id", Canon::str(n.id.clone())),
                            ("pos", Canon::point(n.position.x, n.position.y)),
                            ("type", Canon::str(n.sna_type.as_str())),
                        ])
                    })
                    .collect();
                let edges = fl
                    .edges
                    .iter()
                    .map(|&(a, b)| {
                        Canon::Arr(vec![
                            Canon::str(fl.nodes[a].id.clone()),
                            Canon::str(fl.nodes[b].id.clone()),
                        ])
                    })
                    .collect();
                let objects = fl
                    .objects
                    .iter()
                    .map(|o| {
                        Canon::obj([
                            ("category", Canon::str(o.category.clone())),
                            ("pos", Canon::point(o.position.x, o.position.y)),
                        ])
                    })
                    .collect();
                Canon::obj([
                    ("edges", Canon::Arr(edges)),
                    ("grid", Canon::Arr(grid)),
                    ("nodes", Canon::Arr(nodes)),
                    ("objects", Canon::Arr(objects)),
                    ("rooms", Canon::Arr(rooms)),
                ])
            })
            .collect();
        let links = self
            .stair_links
            .iter()
            .map(|&(a, b)| {
                Canon::Arr(vec![
                    Canon::str(self.node(a).id.clone()),
                    Canon::str(self.node(b).id.clone()),
                ])
            })
            .collect();
        Canon::obj([
            ("floors", Canon::Arr(floors)),
            ("resolution", Canon::Num(self.resolution)),
            ("stair_links", Canon::Arr(links)),
            ("version", Canon::Int(SCENE_VERSION)),
        ])
        .to_json()
    }

    /// Undirected ground-truth adjacency including stair links, keyed by node ref.
    pub fn gt_adjacency(&self) -> BTreeMap<NodeRef, Vec<NodeRef>> {
        let mut adj: BTreeMap<NodeRef, Vec<NodeRef>> = BTreeMap::new();
        for (f, fl) in self.floors.iter().enumerate() {
            for i in 0..fl.nodes.len() {
                adj.entry(NodeRef { floor: f, index: i }).or_default();
            }
            for &(a, b) in &fl.edges {
                let (ra, rb) = (NodeRef { floor: f, index: a }, NodeRef { floor: f, index: b });
                adj.entry(ra).or_default().push(rb);
                adj.entry(rb).or_default().push(ra);
            }
        }
        for &(a, b) in &self.stair_links {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        adj
    }

    /// Stair-link partners of any stairs node on `floor` within `radius` of `p`.
    pub fn stair_partners_near(&self, p: Vec2, floor: usize, radius: f64) -> Vec<(NodeRef, NodeRef)> {
        let mut out = Vec::new();
        for &(a, b) in &self.stair_links {
            for (here, there) in [(a, b), (b, a)] {
                if here.floor == floor && self.node(here).position.distance(p) <= radius {
                    out.push((here, there));
                }
            }
        }
        out
    }
}
