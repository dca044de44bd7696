//! Shortest-path search over 8-connected occupancy grids.
//!
//! Diagonal moves cost `sqrt(2)` cells and are only allowed when both
//! orthogonally adjacent cells are passable, so paths never squeeze through
//! a diagonal gap between two blocked cells.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Copy, Debug)]
struct Entry {
    f: f64,
    g: f64,
    state: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Min-heap on f, then deeper g first, then lowest state id.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.state.cmp(&self.state))
    }
}

/// Pushes the 8-connected passable neighbours of `cell` with costs in meters.
pub fn grid8_successors(
    width: usize,
    height: usize,
    resolution: f64,
    passable: &dyn Fn(usize) -> bool,
    cell: usize,
    out: &mut Vec<(usize, f64)>,
) {
    let col = (cell % width) as i64;
    let row = (cell / width) as i64;
    let at = |c: i64, r: i64| -> Option<usize> {
        if c < 0 || r < 0 || c as usize >= width || r as usize >= height {
            return None;
        }
        let i = r as usize * width + c as usize;
        passable(i).then_some(i)
    };
    for (dc, dr) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
        if let Some(n) = at(col + dc, row + dr) {
            out.push((n, resolution));
        }
    }
    for (dc, dr) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
        if at(col + dc, row).is_some() && at(col, row + dr).is_some() {
            if let Some(n) = at(col + dc, row + dr) {
                out.push((n, resolution * SQRT2));
            }
        }
    }
}

/// Octile distance between two cells of a `width`-wide grid, in meters.
pub fn octile(width: usize, resolution: f64, a: usize, b: usize) -> f64 {
    let dc = ((a % width) as f64 - (b % width) as f64).abs();
    let dr = ((a / width) as f64 - (b / width) as f64).abs();
    let (lo, hi) = if dc < dr { (dc, dr) } else { (dr, dc) };
    resolution * (hi - lo + SQRT2 * lo)
}

/// A* over an abstract state space.
///
/// `heuristic` must be admissible; re-expansion on improved cost keeps the
/// search optimal even when it is not consistent.
pub fn astar(
    n_states: usize,
    start: usize,
    goal: usize,
    mut successors: impl FnMut(usize, &mut Vec<(usize, f64)>),
    heuristic: impl Fn(usize) -> f64,
) -> Option<(Vec<usize>, f64)> {
    let mut g = vec![f64::INFINITY; n_states];
    let mut parent = vec![usize::MAX; n_states];
    let mut heap = BinaryHeap::new();
    let mut buf = Vec::with_capacity(16);
    g[start] = 0.0;
    heap.push(Entry {
        f: heuristic(start),
        g: 0.0,
        state: start,
    });
    while let Some(Entry { g: gs, state, .. }) = heap.pop() {
        if gs > g[state] {
            continue;
        }
        if state == goal {
            let mut path = vec![goal];
            let mut s = goal;
            while s != start {
                s = parent[s];
                path.push(s);
            }
            path.reverse();
            return Some((path, gs));
        }
        buf.clear();
        successors(state, &mut buf);
        for &(next, cost) in &buf {
            let ng = gs + cost;
            if ng < g[next] {
                g[next] = ng;
                parent[next] = state;
                heap.push(Entry {
                    f: ng + heuristic(next),
                    g: ng,
                    state: next,
                });
            }
        }
    }
    None
}

/// Single-source shortest distances (meters); unreachable states are infinite.
pub fn dijkstra(
    n_states: usize,
    start: usize,
    mut successors: impl FnMut(usize, &mut Vec<(usize, f64)>),
) -> Vec<f64> {
    let mut g = vec![f64::INFINITY; n_states];
    let mut heap = BinaryHeap::new();
    let mut buf = Vec::with_capacity(16);
    g[start] = 0.0;
    heap.push(Entry {
        f: 0.0,
        g: 0.0,
        state: start,
    });
    while let Some(Entry { g: gs, state, .. }) = heap.pop() {
        if gs > g[state] {
            continue;
        }
        buf.clear();
        successors(state, &mut buf);
        for &(next, cost) in &buf {
            let ng = gs + cost;
            if ng < g[next] {
                g[next] = ng;
                heap.push(Entry {
                    f: ng,
                    g: ng,
                    state: next,
                });
            }
        }
    }
    g
}

/// Labels 8-connected components of passable cells (same diagonal rule as the
/// search). Impassable cells get `usize::MAX`.
pub fn components(width: usize, height: usize, passable: &dyn Fn(usize) -> bool) -> Vec<usize> {
    let n = width * height;
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    let mut buf = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX || !passable(s) {
            continue;
        }
        label[s] = next;
        stack.push(s);
        while let Some(c) = stack.pop() {
            buf.clear();
            grid8_successors(width, height, 1.0, passable, c, &mut buf);
            for &(m, _) in &buf {
                if label[m] == usize::MAX {
                    label[m] = next;
                    stack.push(m);
                }
            }
        }
        next += 1;
    }
    label
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_grid_octile_matches_astar() {
        let (w, h) = (12, 9);
        let pass = |_: usize| true;
        for &(a, b) in &[(0usize, 107usize), (5, 5), (13, 90)] {
            let (path, len) = astar(
                w * h,
                a,
                b,
                |s, out| grid8_successors(w, h, 0.5, &pass, s, out),
                |s| octile(w, 0.5, s, b),
            )
            .unwrap();
            assert!((len - octile(w, 0.5, a, b)).abs() < 1e-9);
            assert_eq!(*path.first().unwrap(), a);
            assert_eq!(*path.last().unwrap(), b);
        }
    }

    #[test]
    fn diagonal_gap_is_not_passable() {
        // . #
        // # .
        let (w, h) = (2, 2);
        let blocked = [false, true, true, false];
        let pass = |i: usize| !blocked[i];
        let r = astar(
            4,
            0,
            3,
            |s, out| grid8_successors(w, h, 1.0, &pass, s, out),
            |_| 0.0,
        );
        assert!(r.is_none());
        let lab = components(w, h, &pass);
        assert_ne!(lab[0], lab[3]);
    }
}
