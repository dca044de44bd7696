//! Planar geometry kernel: poses, pinhole cameras, ground-plane back-projection,
//! grid line-of-sight and polygon containment.
//!
//! World frame is right-handed with `z` up. The ground plane is `z = 0`.
//! Grid cell `(col, row)` covers `[col * res, (col + 1) * res) x [row * res, (row + 1) * res)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used by the boundary-inclusive polygon test, in meters.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

/// Minimum downward component for a ray to be considered ground-intersecting.
const HORIZON_EPS: f64 = 1e-9;

/// Slack applied when snapping segment extents to grid lines, in cell units.
const GRID_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("pixel ray does not intersect the ground plane")]
    Horizon,
    #[error("pixel ({u:.2}, {v:.2}) outside a {width}x{height} image")]
    PixelOutOfImage {
        u: f64,
        v: f64,
        width: u32,
        height: u32,
    },
    #[error("point ({x:.3}, {y:.3}) outside grid bounds")]
    OutOfBounds { x: f64, y: f64 },
    #[error("polygon is degenerate (fewer than 3 vertices or zero area)")]
    DegeneratePolygon,
}

/// A 2D point or vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotates by 90 degrees counter-clockwise about the origin.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r >= PI {
        r -= 2.0 * PI;
    }
    if r < -PI {
        r = -PI;
    }
    r
}

/// Planar agent pose on a given storey.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians in `[-pi, pi)`, counter-clockwise from +x.
    pub heading: f64,
    pub floor: usize,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64, floor: usize) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
            floor,
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn rotated(&self, delta: f64) -> Pose {
        Pose::new(self.x, self.y, self.heading + delta, self.floor)
    }
}

/// A pinhole camera rigidly mounted on the agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Yaw relative to the agent heading, radians.
    pub yaw_offset: f64,
    pub hfov: f64,
    pub vfov: f64,
    pub image_width: u32,
    pub image_height: u32,
    /// Optical center height above the floor, meters.
    pub mount_height: f64,
    /// Downward tilt of the optical axis, radians.
    pub pitch: f64,
}

/// Result of projecting a world point into a camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    InFrame { u: f64, v: f64 },
    OutOfFrame,
}

impl Projection {
    pub fn pixel(self) -> Option<(f64, f64)> {
        match self {
            Projection::InFrame { u, v } => Some((u, v)),
            Projection::OutOfFrame => None,
        }
    }
}

/// World-frame camera axes: `right`, image-`down`, optical `forward`.
struct CameraFrame {
    origin: [f64; 3],
    right: [f64; 3],
    down: [f64; 3],
    forward: [f64; 3],
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl CameraModel {
    pub fn focal_x(&self) -> f64 {
        (self.image_width as f64 / 2.0) / (self.hfov / 2.0).tan()
    }

    pub fn focal_y(&self) -> f64 {
        (self.image_height as f64 / 2.0) / (self.vfov / 2.0).tan()
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (
            self.image_width as f64 / 2.0,
            self.image_height as f64 / 2.0,
        )
    }

    pub fn is_valid(&self) -> bool {
        self.hfov > 0.0
            && self.hfov < PI
            && self.vfov > 0.0
            && self.vfov < PI
            && self.image_width > 0
            && self.image_height > 0
            && self.mount_height > 0.0
    }

    pub fn contains_pixel(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.image_width as f64 && v < self.image_height as f64
    }

    fn frame(&self, pose: &Pose) -> CameraFrame {
        let yaw = pose.heading + self.yaw_offset;
        let (sy, cy) = yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        CameraFrame {
            origin: [pose.x, pose.y, self.mount_height],
            right: [sy, -cy, 0.0],
            down: [-sp * cy, -sp * sy, -cp],
            forward: [cp * cy, cp * sy, -sp],
        }
    }
}

/// Back-projects a pixel onto the ground plane in the world frame.
pub fn ipm_project(
    pixel: (f64, f64),
    camera: &CameraModel,
    agent_pose: &Pose,
) -> Result<Vec2, GeometryError> {
    let (u, v) = pixel;
    if !camera.contains_pixel(u, v) {
        return Err(GeometryError::PixelOutOfImage {
            u,
            v,
            width: camera.image_width,
            height: camera.image_height,
        });
    }
    let (cx, cy) = camera.principal_point();
    let xn = (u - cx) / camera.focal_x();
    let yn = (v - cy) / camera.focal_y();
    let f = camera.frame(agent_pose);
    let ray = [
        xn * f.right[0] + yn * f.down[0] + f.forward[0],
        xn * f.right[1] + yn * f.down[1] + f.forward[1],
        xn * f.right[2] + yn * f.down[2] + f.forward[2],
    ];
    let descent = -ray[2];
    if descent <= HORIZON_EPS {
        return Err(GeometryError::Horizon);
    }
    let t = f.origin[2] / descent;
    Ok(Vec2::new(f.origin[0] + t * ray[0], f.origin[1] + t * ray[1]))
}

/// Forward pinhole projection of a world point, using the same intrinsics as
/// [`ipm_project`].
pub fn project_to_pixel(world: [f64; 3], camera: &CameraModel, agent_pose: &Pose) -> Projection {
    let f = camera.frame(agent_pose);
    let d = [
        world[0] - f.origin[0],
        world[1] - f.origin[1],
        world[2] - f.origin[2],
    ];
    let zc = dot3(d, f.forward);
    if zc <= HORIZON_EPS {
        return Projection::OutOfFrame;
    }
    let (cx, cy) = camera.principal_point();
    let u = cx + camera.focal_x() * dot3(d, f.right) / zc;
    let v = cy + camera.focal_y() * dot3(d, f.down) / zc;
    if camera.contains_pixel(u, v) {
        Projection::InFrame { u, v }
    } else {
        Projection::OutOfFrame
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridIndex {
    pub col: i64,
    pub row: i64,
}

impl GridIndex {
    pub const fn new(col: i64, row: i64) -> Self {
        Self { col, row }
    }
}

/// Binary occupancy grid anchored at the world origin.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64) -> Self {
        Self {
            width,
            height,
            resolution,
            occupied: vec![false; width * height],
        }
    }

    pub fn from_cells(width: usize, height: usize, resolution: f64, occupied: Vec<bool>) -> Self {
        assert_eq!(occupied.len(), width * height, "cell count mismatch");
        Self {
            width,
            height,
            resolution,
            occupied,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn contains(&self, idx: GridIndex) -> bool {
        idx.col >= 0 && idx.row >= 0 && (idx.col as usize) < self.width && (idx.row as usize) < self.height
    }

    /// Flat index of an in-bounds cell.
    pub fn flat(&self, idx: GridIndex) -> usize {
        idx.row as usize * self.width + idx.col as usize
    }

    pub fn unflat(&self, i: usize) -> GridIndex {
        GridIndex::new((i % self.width) as i64, (i / self.width) as i64)
    }

    pub fn is_occupied(&self, idx: GridIndex) -> bool {
        !self.contains(idx) || self.occupied[self.flat(idx)]
    }

    pub fn is_free(&self, idx: GridIndex) -> bool {
        !self.is_occupied(idx)
    }

    pub fn is_free_flat(&self, i: usize) -> bool {
        !self.occupied[i]
    }

    pub fn set_occupied(&mut self, idx: GridIndex, value: bool) {
        if self.contains(idx) {
            let i = self.flat(idx);
            self.occupied[i] = value;
        }
    }

    pub fn cell_of(&self, p: Vec2) -> Option<GridIndex> {
        let idx = GridIndex::new(
            (p.x / self.resolution).floor() as i64,
            (p.y / self.resolution).floor() as i64,
        );
        (p.is_finite() && self.contains(idx)).then_some(idx)
    }

    pub fn center(&self, idx: GridIndex) -> Vec2 {
        Vec2::new(
            (idx.col as f64 + 0.5) * self.resolution,
            (idx.row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn is_free_point(&self, p: Vec2) -> bool {
        self.cell_of(p).is_some_and(|c| self.is_free(c))
    }

    pub fn free_count(&self) -> usize {
        self.occupied.iter().filter(|o| !**o).count()
    }

    pub fn free_cells(&self) -> impl Iterator<Item = GridIndex> + '_ {
        (0..self.occupied.len())
            .filter(|&i| !self.occupied[i])
            .map(|i| self.unflat(i))
    }
}

/// Cells whose closed square intersects the closed segment `a..b`, visited
/// column by column from `a` towards `b`. Coordinates are in cell units.
/// The callback returns `false` to stop early.
fn supercover(a: Vec2, b: Vec2, mut visit: impl FnMut(GridIndex) -> bool) {
    let (xmin, xmax) = (a.x.min(b.x), a.x.max(b.x));
    let c_lo = (xmin - GRID_EPS).ceil() as i64 - 1;
    let c_hi = (xmax + GRID_EPS).floor() as i64;
    let rightward = b.x >= a.x;
    let dx = b.x - a.x;
    let y_at = |x: f64| {
        if dx.abs() < f64::EPSILON {
            a.y
        } else {
            a.y + (x - a.x) * (b.y - a.y) / dx
        }
    };
    for k in 0..=(c_hi - c_lo) {
        let col = if rightward { c_lo + k } else { c_hi - k };
        // Portion of the segment inside the closed column strip [col, col + 1].
        let x0 = xmin.max(col as f64);
        let x1 = xmax.min(col as f64 + 1.0);
        if x0 > x1 + GRID_EPS {
            continue;
        }
        let (ya, yb) = if dx.abs() < f64::EPSILON {
            (a.y.min(b.y), a.y.max(b.y))
        } else {
            let (p, q) = (y_at(x0), y_at(x1));
            (p.min(q), p.max(q))
        };
        let r_lo = (ya - GRID_EPS).ceil() as i64 - 1;
        let r_hi = (yb + GRID_EPS).floor() as i64;
        let upward = b.y >= a.y;
        let mut r = if upward { r_lo } else { r_hi };
        loop {
            if !visit(GridIndex::new(col, r)) {
                return;
            }
            if upward {
                if r == r_hi {
                    break;
                }
                r += 1;
            } else {
                if r == r_lo {
                    break;
                }
                r -= 1;
            }
        }
    }
}

/// Line of sight between two world points on a grid.
///
/// Blocked iff an occupied cell other than the two endpoint cells touches the
/// segment (conservative supercover, so diagonal corner gaps never leak).
pub fn raycast_los(grid: &OccupancyGrid, from: Vec2, to: Vec2) -> Result<bool, GeometryError> {
    let ca = grid
        .cell_of(from)
        .ok_or(GeometryError::OutOfBounds { x: from.x, y: from.y })?;
    let cb = grid
        .cell_of(to)
        .ok_or(GeometryError::OutOfBounds { x: to.x, y: to.y })?;
    let res = grid.resolution();
    let a = Vec2::new(from.x / res, from.y / res);
    let b = Vec2::new(to.x / res, to.y / res);
    let mut clear = true;
    supercover(a, b, |c| {
        if c == ca || c == cb || !grid.contains(c) {
            return true;
        }
        if grid.is_occupied(c) {
            clear = false;
            return false;
        }
        true
    });
    Ok(clear)
}

/// Signed shoelace area.
pub fn polygon_area(polygon: &[Vec2]) -> f64 {
    let n = polygon.len();
    (0..n)
        .map(|i| polygon[i].cross(polygon[(i + 1) % n]))
        .sum::<f64>()
        / 2.0
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

pub fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    point_segment_distance(p, a, b)
}

/// Even-odd containment; points within [`BOUNDARY_TOLERANCE`] of an edge count as inside.
pub fn point_in_polygon(point: Vec2, polygon: &[Vec2]) -> Result<bool, GeometryError> {
    if polygon.len() < 3 || polygon_area(polygon).abs() < 1e-12 {
        return Err(GeometryError::DegeneratePolygon);
    }
    Ok(contains_unchecked(point, polygon))
}

/// [`point_in_polygon`] without the degeneracy check, for pre-validated polygons.
pub fn contains_unchecked(point: Vec2, polygon: &[Vec2]) -> bool {
    let n = polygon.len();
    let mut inside = false;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if point_segment_distance(point, a, b) <= BOUNDARY_TOLERANCE {
            return true;
        }
        if (a.y > point.y) != (b.y > point.y) {
            let x_cross = a.x + (point.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if point.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// True when `point` lies on the polygon boundary (within tolerance).
pub fn on_polygon_boundary(point: Vec2, polygon: &[Vec2]) -> bool {
    let n = polygon.len();
    (0..n).any(|i| point_segment_distance(point, polygon[i], polygon[(i + 1) % n]) <= BOUNDARY_TOLERANCE)
}
