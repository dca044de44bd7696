//! Deterministic indoor exploration simulator built around an online
//! scene-graph memory of navigational affordances.
//!
//! The crate is organised bottom-up: [`geometry`] and [`pathing`] are pure
//! kernels, [`scene`] is the ground-truth world, [`perception`] produces
//! per-step observations, [`sgmemo`] accumulates them into a graph memory,
//! [`planner`] and [`baselines`] drive episodes, and [`evalkit`] scores them.

pub mod canon;
pub mod geometry;
pub mod pathing;
pub mod scene;
pub mod perception;
pub mod sgmemo;
pub mod episode;
pub mod planner;
pub mod baselines;
pub mod evalkit;
