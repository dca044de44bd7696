//! Procedural rectangular-partition floor plans.
//!
//! Each storey is a horizontal corridor spine with a row of rooms above and a
//! row below. With four or more rooms a cross corridor splits both rows and
//! meets the spine at a junction. Every room has one door onto the spine.
//!
//! Ground-truth affordances are annotated from the layout: a room entry at
//! each doorway midpoint, a normal node at each room centroid and at every
//! corridor dead-end, an intersection at the junction, and stairs replacing
//! the spine dead-ends that carry a stair link.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FloorPlan, GtSnaNode, NodeRef, Room, Scene, SceneError, SceneObject, SnaType, DEFAULT_RESOLUTION};
use crate::canon::round3;
use crate::geometry::{GridIndex, OccupancyGrid, Vec2};

/// Wall thickness in cells.
const WALL: i64 = 2;
/// Minimum clearance between a door jamb and the room corner, cells.
const DOOR_MARGIN: i64 = 2;
/// Objects are scattered within this radius of the room centroid.
const OBJECT_RADIUS_M: f64 = 1.8;
/// Longest corridor stretch without an intermediate normal node.
const MAX_CORRIDOR_GAP_M: f64 = 4.0;
/// Clearance between objects and walls.
const OBJECT_WALL_MARGIN_M: f64 = 0.3;

const ROOM_CATEGORIES: [&str; 16] = [
    "bedroom",
    "kitchen",
    "bathroom",
    "living_room",
    "office",
    "dining_room",
    "storage",
    "laundry",
    "study",
    "nursery",
    "gym",
    "library",
    "playroom",
    "closet",
    "garage",
    "workshop",
];

fn object_vocabulary(category: &str) -> &'static [&'static str] {
    match category {
        "bedroom" => &["bed", "wardrobe", "nightstand", "lamp", "dresser", "mirror"],
        "kitchen" => &["fridge", "oven", "sink", "microwave", "kitchen_island", "dishwasher"],
        "bathroom" => &["toilet", "bathtub", "shower", "washbasin", "towel_rack", "mirror"],
        "living_room" => &["sofa", "tv", "coffee_table", "armchair", "bookshelf", "rug"],
        "office" => &["desk", "office_chair", "monitor", "printer", "filing_cabinet", "whiteboard"],
        "dining_room" => &["dining_table", "chair", "sideboard", "chandelier", "vase", "cabinet"],
        "storage" => &["shelf", "box", "cabinet", "ladder", "vacuum", "bin"],
        "laundry" => &["washing_machine", "dryer", "ironing_board", "basket", "sink", "shelf"],
        "study" => &["desk", "bookshelf", "lamp", "armchair", "globe", "chair"],
        "nursery" => &["crib", "changing_table", "toy_box", "rocking_chair", "lamp", "rug"],
        "gym" => &["treadmill", "bench", "dumbbell_rack", "exercise_bike", "mirror", "mat"],
        "library" => &["bookshelf", "reading_chair", "lamp", "table", "globe", "ladder"],
        "playroom" => &["toy_box", "play_table", "bean_bag", "easel", "rug", "shelf"],
        "closet" => &["wardrobe", "shoe_rack", "mirror", "hanger_rail", "box", "shelf"],
        "garage" => &["car", "tool_bench", "bicycle", "shelf", "bin", "ladder"],
        _ => &["workbench", "tool_cabinet", "drill_press", "shelf", "stool", "lamp"],
    }
}

/// Generator parameters. Lengths are in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub floors: usize,
    pub rooms_per_floor: usize,
    pub corridor_width_m: f64,
    pub door_width_m: f64,
    pub objects_per_room: usize,
    /// Inclusive range for room interior side lengths.
    pub room_size_m: (f64, f64),
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            floors: 1,
            rooms_per_floor: 6,
            corridor_width_m: 1.6,
            door_width_m: 0.9,
            objects_per_room: 3,
            room_size_m: (3.0, 5.0),
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: String| Err(SceneError::Generation(m));
        if !(1..=4).contains(&self.floors) {
            return bad(format!("floors must be in 1..=4, got {}", self.floors));
        }
        if !(2..=12).contains(&self.rooms_per_floor) {
            return bad(format!("rooms_per_floor must be in 2..=12, got {}", self.rooms_per_floor));
        }
        if !(self.corridor_width_m >= 0.8 && self.corridor_width_m <= 4.0) {
            return bad(format!("corridor_width_m must be in [0.8, 4.0], got {}", self.corridor_width_m));
        }
        if !(self.door_width_m >= 0.6 && self.door_width_m <= 3.0) {
            return bad(format!("door_width_m must be in [0.6, 3.0], got {}", self.door_width_m));
        }
        if self.objects_per_room > 8 {
            return bad(format!("objects_per_room must be at most 8, got {}", self.objects_per_room));
        }
        let (lo, hi) = self.room_size_m;
        if !(lo >= 2.0 && hi <= 8.0 && lo <= hi) {
            return bad(format!("room_size_m must satisfy 2 <= min <= max <= 8, got ({lo}, {hi})"));
        }
        let door = cells(self.door_width_m);
        if door + 2 * DOOR_MARGIN > cells(lo) {
            return bad(format!(
                "door width {} m does not fit rooms as narrow as {} m",
                self.door_width_m, lo
            ));
        }
        Ok(())
    }
}

fn cells(m: f64) -> i64 {
    (m / DEFAULT_RESOLUTION).round() as i64
}

fn meters(c: f64) -> f64 {
    round3(c * DEFAULT_RESOLUTION)
}

/// Axis-aligned cell rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: i64,
    y0: i64,
    x1: i64,
    y1: i64,
}

impl Rect {
    fn center(&self) -> Vec2 {
        Vec2::new(
            meters((self.x0 + self.x1) as f64 / 2.0),
            meters((self.y0 + self.y1) as f64 / 2.0),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Bottom,
    Top,
}

struct RoomPlan {
    interior: Rect,
    side: Side,
    door_x0: i64,
}

struct FloorLayout {
    width: i64,
    height: i64,
    spine: Rect,
    cross: Option<Rect>,
    rooms: Vec<RoomPlan>,
}

fn random_widths(rng: &mut ChaCha8Rng, k: usize, lo: i64, hi: i64) -> Vec<i64> {
    (0..k).map(|_| rng.gen_range(lo..=hi)).collect()
}

fn row_length(widths: &[i64]) -> i64 {
    widths.iter().sum::<i64>() + WALL * (widths.len() as i64 - 1).max(0)
}

/// Stretches the last room of the shorter row so both rows span `len`.
fn pad_to(widths: &mut [i64], len: i64) {
    let short = len - row_length(widths);
    if let Some(last) = widths.last_mut() {
        *last += short;
    }
}

fn layout_floor(rng: &mut ChaCha8Rng, p: &GenParams) -> FloorLayout {
    let n = p.rooms_per_floor;
    let (lo, hi) = (cells(p.room_size_m.0), cells(p.room_size_m.1));
    let corridor = cells(p.corridor_width_m);
    let door = cells(p.door_width_m);
    let k_top = n.div_ceil(2);
    let k_bot = n / 2;
    let depth_bot = rng.gen_range(lo..=hi);
    let depth_top = rng.gen_range(lo..=hi);

    let mut top = random_widths(rng, k_top, lo, hi);
    let mut bot = random_widths(rng, k_bot, lo, hi);

    // Rooms per half when a cross corridor splits the rows.
    let split = (n >= 4).then(|| (k_top.div_ceil(2), k_bot.div_ceil(2)));
    let halves: Vec<(std::ops::Range<usize>, std::ops::Range<usize>)> = match split {
        Some((st, sb)) => vec![(0..st, 0..sb), (st..k_top, sb..k_bot)],
        None => vec![(0..k_top, 0..k_bot)],
    };
    let mut half_lengths = Vec::new();
    for (rt, rb) in &halves {
        let len = row_length(&top[rt.clone()]).max(row_length(&bot[rb.clone()]));
        pad_to(&mut top[rt.clone()], len);
        pad_to(&mut bot[rb.clone()], len);
        half_lengths.push(len);
    }

    let y_bot = WALL;
    let y_spine = y_bot + depth_bot + WALL;
    let y_top = y_spine + corridor + WALL;
    let height = y_top + depth_top + WALL;

    let mut x = WALL;
    let mut rooms = Vec::new();
    let mut cross = None;
    for (h, (rt, rb)) in halves.iter().enumerate() {
        if h == 1 {
            // cross corridor sits between walls of the two halves
            x += WALL;
            cross = Some(Rect {
                x0: x,
                y0: WALL,
                x1: x + corridor,
                y1: height - WALL,
            });
            x += corridor + WALL;
        }
        for (side, widths, range) in [(Side::Top, &top, rt), (Side::Bottom, &bot, rb)] {
            let mut rx = x;
            for &w in &widths[range.clone()] {
                let (y0, y1) = match side {
                    Side::Top => (y_top, y_top + depth_top),
                    Side::Bottom => (y_bot, y_bot + depth_bot),
                };
                let door_x0 = rng.gen_range(rx + DOOR_MARGIN..=rx + w - door - DOOR_MARGIN);
                rooms.push(RoomPlan {
                    interior: Rect { x0: rx, y0, x1: rx + w, y1 },
                    side,
                    door_x0,
                });
                rx += w + WALL;
            }
        }
        x += half_lengths[h];
    }
    let width = x + WALL;
    FloorLayout {
        width,
        height,
        spine: Rect {
            x0: WALL,
            y0: y_spine,
            x1: width - WALL,
            y1: y_spine + corridor,
        },
        cross,
        rooms,
    }
}

struct FloorBuild {
    plan: FloorPlan,
    /// Node indices of the left and right spine dead-ends.
    spine_ends: (usize, usize),
}

fn build_floor(
    rng: &mut ChaCha8Rng,
    p: &GenParams,
    floor: usize,
    stairs_left: bool,
    stairs_right: bool,
    used_inventories: &mut BTreeSet<Vec<String>>,
) -> Result<FloorBuild, SceneError> {
    let lay = layout_floor(rng, p);
    let corridor = cells(p.corridor_width_m);
    let door = cells(p.door_width_m);
    let (w, h) = (lay.width as usize, lay.height as usize);
    let mut grid = OccupancyGrid::from_cells(w, h, DEFAULT_RESOLUTION, vec![true; w * h]);
    let mut carve = |r: Rect| {
        for y in r.y0..r.y1 {
            for x in r.x0..r.x1 {
                grid.set_occupied(GridIndex::new(x, y), false);
            }
        }
    };
    carve(lay.spine);
    if let Some(c) = lay.cross {
        carve(c);
    }
    for room in &lay.rooms {
        carve(room.interior);
        let (y0, y1) = match room.side {
            Side::Top => (room.interior.y0 - WALL, room.interior.y0),
            Side::Bottom => (room.interior.y1, room.interior.y1 + WALL),
        };
        carve(Rect {
            x0: room.door_x0,
            y0,
            x1: room.door_x0 + door,
            y1,
        });
    }

    let mut categories: Vec<&str> = ROOM_CATEGORIES.to_vec();
    categories.shuffle(rng);

    let mut nodes: Vec<GtSnaNode> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut rooms = Vec::new();
    let mut objects = Vec::new();
    let push = |nodes: &mut Vec<GtSnaNode>, pos: Vec2, t: SnaType| {
        let id = format!("f{floor}_{:02}", nodes.len());
        nodes.push(GtSnaNode {
            id,
            position: pos,
            floor,
            sna_type: t,
        });
        nodes.len() - 1
    };

    // (node index, x in cells, lane) for spine ordering; lane 0 bottom, 1 centre, 2 top
    let mut spine_nodes: Vec<(usize, f64, u8)> = Vec::new();
    let half_wall = WALL as f64 / 2.0;
    for (k, room) in lay.rooms.iter().enumerate() {
        let category = categories[k % categories.len()].to_string();
        let r = room.interior;
        // Polygon extends half a wall thickness beyond the interior so the
        // doorway midpoint lies exactly on its boundary.
        let poly = [
            (r.x0 as f64 - half_wall, r.y0 as f64 - half_wall),
            (r.x1 as f64 + half_wall, r.y0 as f64 - half_wall),
            (r.x1 as f64 + half_wall, r.y1 as f64 + half_wall),
            (r.x0 as f64 - half_wall, r.y1 as f64 + half_wall),
        ]
        .iter()
        .map(|&(x, y)| Vec2::new(meters(x), meters(y)))
        .collect();
        let door_mid_x = room.door_x0 as f64 + door as f64 / 2.0;
        let (door_mid_y, lane) = match room.side {
            Side::Top => (r.y0 as f64 - half_wall, 2),
            Side::Bottom => (r.y1 as f64 + half_wall, 0),
        };
        let entry = push(&mut nodes, Vec2::new(meters(door_mid_x), meters(door_mid_y)), SnaType::RoomEntry);
        let centroid = r.center();
        let centre = push(&mut nodes, centroid, SnaType::Normal);
        edges.push((entry, centre));
        spine_nodes.push((entry, door_mid_x, lane));

        let inventory = place_objects(rng, p, &category, r, centroid, used_inventories);
        objects.extend(inventory);
        rooms.push(Room { polygon: poly, category });
    }

    let spine_y = (lay.spine.y0 + lay.spine.y1) as f64 / 2.0;
    let half_c = corridor as f64 / 2.0;
    let left_x = lay.spine.x0 as f64 + half_c;
    let right_x = lay.spine.x1 as f64 - half_c;
    let left_t = if stairs_left { SnaType::Stairs } else { SnaType::Normal };
    let right_t = if stairs_right { SnaType::Stairs } else { SnaType::Normal };
    let left = push(&mut nodes, Vec2::new(meters(left_x), meters(spine_y)), left_t);
    let right = push(&mut nodes, Vec2::new(meters(right_x), meters(spine_y)), right_t);
    spine_nodes.push((left, left_x, 1));
    spine_nodes.push((right, right_x, 1));

    if let Some(c) = lay.cross {
        let cx = (c.x0 + c.x1) as f64 / 2.0;
        let junction = push(&mut nodes, Vec2::new(meters(cx), meters(spine_y)), SnaType::Intersection);
        for end_y in [c.y0 as f64 + half_c, c.y1 as f64 - half_c] {
            let mut prev = junction;
            for y in waypoints(spine_y, end_y) {
                let w = push(&mut nodes, Vec2::new(meters(cx), meters(y)), SnaType::Normal);
                edges.push((prev, w));
                prev = w;
            }
            let end = push(&mut nodes, Vec2::new(meters(cx), meters(end_y)), SnaType::Normal);
            edges.push((prev, end));
        }
        spine_nodes.push((junction, cx, 1));
    }

    spine_nodes.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    // Doorway nodes sit on the walls and are hard to see down a corridor, so
    // spacing is measured along the centre line only.
    let stops: Vec<f64> = spine_nodes.iter().filter(|s| s.2 == 1).map(|s| s.1).collect();
    for pair in stops.windows(2) {
        for x in waypoints(pair[0], pair[1]) {
            let w = push(&mut nodes, Vec2::new(meters(x), meters(spine_y)), SnaType::Normal);
            spine_nodes.push((w, x, 1));
        }
    }
    spine_nodes.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    for pair in spine_nodes.windows(2) {
        edges.push((pair[0].0, pair[1].0));
    }
    // Same-side shortcuts along each wall of the spine.
    for lane in [0u8, 2u8] {
        let side: Vec<usize> = spine_nodes.iter().filter(|s| s.2 == lane).map(|s| s.0).collect();
        for pair in side.windows(2) {
            edges.push((pair[0], pair[1]));
        }
    }
    let mut edges: Vec<(usize, usize)> = edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
    edges.sort_unstable();
    edges.dedup();

    Ok(FloorBuild {
        plan: FloorPlan {
            grid,
            rooms,
            nodes,
            edges,
            objects,
        },
        spine_ends: (left, right),
    })
}

/// Interior stops (cell units) splitting `a..b` into equal pieces no longer
/// than [`MAX_CORRIDOR_GAP_M`], so corridor nodes stay within sensing range of
/// each other.
fn waypoints(a: f64, b: f64) -> Vec<f64> {
    let gap = (b - a).abs() * DEFAULT_RESOLUTION;
    let pieces = (gap / MAX_CORRIDOR_GAP_M).ceil().max(1.0) as usize;
    (1..pieces)
        .map(|k| a + (b - a) * k as f64 / pieces as f64)
        .collect()
}

fn place_objects(
    rng: &mut ChaCha8Rng,
    p: &GenParams,
    category: &str,
    interior: Rect,
    centroid: Vec2,
    used: &mut BTreeSet<Vec<String>>,
) -> Vec<SceneObject> {
    if p.objects_per_room == 0 {
        return Vec::new();
    }
    let vocab = object_vocabulary(category);
    let lo = Vec2::new(meters(interior.x0 as f64) + OBJECT_WALL_MARGIN_M, meters(interior.y0 as f64) + OBJECT_WALL_MARGIN_M);
    let hi = Vec2::new(meters(interior.x1 as f64) - OBJECT_WALL_MARGIN_M, meters(interior.y1 as f64) - OBJECT_WALL_MARGIN_M);
    let mut chosen: Vec<String> = Vec::new();
    // Inventories are kept distinct across the scene so every room can be
    // told apart by its contents.
    for _ in 0..64 {
        let mut pick: Vec<&str> = vocab.to_vec();
        pick.shuffle(rng);
        chosen = (0..p.objects_per_room)
            .map(|i| pick[i % pick.len()].to_string())
            .collect();
        let mut key = chosen.clone();
        key.sort();
        key.dedup();
        if used.insert(key) {
            break;
        }
    }
    chosen
        .into_iter()
        .map(|cat| {
            let pos = loop {
                let r = OBJECT_RADIUS_M * rng.gen::<f64>().sqrt();
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                let q = Vec2::new(centroid.x + r * a.cos(), centroid.y + r * a.sin());
                if q.x >= lo.x && q.x <= hi.x && q.y >= lo.y && q.y <= hi.y {
                    break Vec2::new(round3(q.x), round3(q.y));
                }
            };
            SceneObject { category: cat, position: pos }
        })
        .collect()
}

/// Start pose for `seed`: a free ground-floor cell at least `wall_clearance_m`
/// from any wall and farther than `node_clearance_m` from every ground-truth
/// node, with a random heading.
pub fn sample_start(
    scene: &Scene,
    seed: u64,
    wall_clearance_m: f64,
    node_clearance_m: f64,
) -> Option<crate::geometry::Pose> {
    let floor = scene.floors.first()?;
    let grid = &floor.grid;
    let reach = (wall_clearance_m / grid.resolution()).ceil() as i64;
    let clear: Vec<GridIndex> = grid
        .free_cells()
        .filter(|c| {
            let p = grid.center(*c);
            floor.nodes.iter().all(|n| n.position.distance(p) > node_clearance_m)
        })
        .filter(|c| {
            (-reach..=reach).all(|dr| {
                (-reach..=reach).all(|dc| {
                    let n = GridIndex::new(c.col + dc, c.row + dr);
                    grid.contains(n) && grid.is_free(n)
                })
            })
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cell = *clear.choose(&mut rng)?;
    let p = grid.center(cell);
    let heading = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    Some(crate::geometry::Pose::new(p.x, p.y, heading, 0))
}

/// Deterministic scene for `(seed, params)`.
pub fn generate_scene(seed: u64, params: &GenParams) -> Result<Scene, SceneError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = BTreeSet::new();
    let mut floors = Vec::with_capacity(params.floors);
    let mut ends = Vec::with_capacity(params.floors);
    for f in 0..params.floors {
        let build = build_floor(&mut rng, params, f, f > 0, f + 1 < params.floors, &mut used)?;
        ends.push(build.spine_ends);
        floors.push(build.plan);
    }
    let stair_links = (1..params.floors)
        .map(|f| {
            (
                NodeRef { floor: f - 1, index: ends[f - 1].1 },
                NodeRef { floor: f, index: ends[f].0 },
            )
        })
        .collect();
    Scene::new(DEFAULT_RESOLUTION, floors, stair_links)
}
