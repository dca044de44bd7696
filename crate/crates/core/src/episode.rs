//! Episode records shared by every planner, their line-delimited JSON form,
//! and memo replay.
//!
//! A log file starts with one `header` line, followed by `pose` and event
//! lines in the order they happened. Every memo mutation made during an
//! episode corresponds to exactly one event, so replaying the events through
//! a fresh memo reproduces the final memo.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CameraModel, Pose, Vec2};
use crate::perception::{LocalObservation, NoiseModel};
use crate::sgmemo::{lift_local, MemoError, MemoParams, SgMemo};
use crate::scene::SnaType;

pub const LOG_VERSION: i64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    /// No reachable unexplored target remains.
    Explored,
    /// Cumulative path length reached the budget.
    Budget,
    /// A target could not be reached, or the episode stopped making progress.
    Stuck,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::Explored => "explored",
            TerminationReason::Budget => "budget",
            TerminationReason::Stuck => "stuck",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    Observed {
        obs: LocalObservation,
    },
    Integrated {
        candidates: Vec<u64>,
    },
    SubgoalSelected {
        node: u64,
        tier: u8,
    },
    Arrived {
        node: u64,
        representative: u64,
    },
    StairTransition {
        from_floor: usize,
        to_floor: usize,
    },
    /// A stair landing on another floor was added to, or linked into, the memo.
    StairsLinked {
        landing: u64,
        floor: usize,
        position: Vec2,
        inserted: bool,
    },
    /// A baseline recorded a trajectory waypoint as a memo node.
    WaypointAdded {
        node: u64,
        position: Vec2,
        floor: usize,
    },
    SubgoalDropped {
        node: u64,
        reason: String,
    },
    /// Geometric target chosen by a baseline planner.
    TargetSelected {
        position: Vec2,
        floor: usize,
    },
    Terminated {
        reason: TerminationReason,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Index of the most recent pose when the event happened.
    pub pose_index: usize,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Everything needed to interpret or replay a log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub version: i64,
    pub planner: String,
    pub start: Pose,
    pub memo_params: MemoParams,
    pub rig: Vec<CameraModel>,
    pub range_m: f64,
    pub noise: Option<NoiseModel>,
    pub budget_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub header: EpisodeHeader,
    pub poses: Vec<Pose>,
    /// Cumulative travelled distance at each pose, stair traversals included.
    pub distances: Vec<f64>,
    pub events: Vec<Event>,
    pub final_memo: SgMemo,
    pub termination: TerminationReason,
}

impl EpisodeLog {
    pub fn path_length_m(&self) -> f64 {
        self.distances.last().copied().unwrap_or(0.0)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = serde_json::json!({"type": "header", "header": self.header});
        out.push_str(&header.to_string());
        out.push('\n');
        let mut next_pose = 0;
        let mut push_poses = |upto: usize, out: &mut String| {
            while next_pose <= upto && next_pose < self.poses.len() {
                let rec = PoseRecord {
                    index: next_pose,
                    pose: self.poses[next_pose],
                    distance: self.distances[next_pose],
                };
                out.push_str(&serde_json::to_string(&Line::Pose(rec)).expect("pose record"));
                out.push('\n');
                next_pose += 1;
            }
        };
        for e in &self.events {
            push_poses(e.pose_index, &mut out);
            out.push_str(&serde_json::to_string(e).expect("event record"));
            out.push('\n');
        }
        push_poses(usize::MAX, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub index: usize,
    pub pose: Pose,
    pub distance: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header { header: EpisodeHeader },
    Pose(PoseRecord),
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("replay diverged at event {index}: {message}")]
    Diverged { index: usize, message: String },
    #[error(transparent)]
    Memo(#[from] MemoError),
}

/// A log read back from its line-delimited form.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLog {
    pub header: EpisodeHeader,
    pub poses: Vec<Pose>,
    pub distances: Vec<f64>,
    pub events: Vec<Event>,
}

impl ParsedLog {
    pub fn termination(&self) -> Option<TerminationReason> {
        self.events.iter().rev().find_map(|e| match e.kind {
            EventKind::Terminated { reason } => Some(reason),
            _ => None,
        })
    }
}

pub fn parse_jsonl(text: &str) -> Result<ParsedLog, LogError> {
    let mut header = None;
    let mut poses = Vec::new();
    let mut distances = Vec::new();
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let err = |m: String| LogError::Parse { line, message: m };
        let value: serde_json::Value = serde_json::from_str(raw).map_err(|e| err(e.to_string()))?;
        match value.get("type").and_then(|t| t.as_str()) {
            Some("header") | Some("pose") => match serde_json::from_value::<Line>(value).map_err(|e| err(e.to_string()))? {
                Line::Header { header: h } => {
                    if h.version != LOG_VERSION {
                        return Err(err(format!("unsupported log version {}", h.version)));
                    }
                    header = Some(h)
                }
                Line::Pose(p) => {
                    if p.index != poses.len() {
                        return Err(err(format!("pose index {} out of sequence", p.index)));
                    }
                    poses.push(p.pose);
                    distances.push(p.distance);
                }
            },
            Some(_) => events.push(serde_json::from_value::<Event>(value).map_err(|e| err(e.to_string()))?),
            None => return Err(err("record without a type".into())),
        }
    }
    let header = header.ok_or(LogError::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    Ok(ParsedLog {
        header,
        poses,
        distances,
        events,
    })
}

/// Rebuilds the memo of a scene-graph episode from its poses and events.
pub fn replay(header: &EpisodeHeader, poses: &[Pose], events: &[Event]) -> Result<SgMemo, LogError> {
    let mut memo: Option<SgMemo> = None;
    let mut last_obs: Option<LocalObservation> = None;
    let mut recorded = 1;
    let diverged = |index: usize, message: String| LogError::Diverged { index, message };
    for (k, e) in events.iter().enumerate() {
        if let Some(m) = memo.as_mut() {
            while recorded <= e.pose_index && recorded < poses.len() {
                m.record_pose(poses[recorded]);
                recorded += 1;
            }
        }
        match &e.kind {
            EventKind::Observed { obs } => {
                if memo.is_none() {
                    memo = Some(SgMemo::new(header.memo_params, &obs.pose_at_capture, obs)?);
                    recorded = 1;
                }
                last_obs = Some(obs.clone());
            }
            EventKind::Integrated { candidates } => {
                let (m, obs) = memo.as_mut().zip(last_obs.as_ref()).ok_or_else(|| diverged(k, "integrate before observe".into()))?;
                let pose = obs.pose_at_capture;
                let got = m.integrate(&lift_local(obs, &header.rig, &pose), &pose);
                if &got != candidates {
                    return Err(diverged(k, format!("candidates {got:?} != {candidates:?}")));
                }
            }
            EventKind::Arrived { node, representative } => {
                let (m, obs) = memo.as_mut().zip(last_obs.as_ref()).ok_or_else(|| diverged(k, "arrive before observe".into()))?;
                let rep = m.arrive(*node, obs)?;
                if rep != *representative {
                    return Err(diverged(k, format!("representative {rep} != {representative}")));
                }
            }
            EventKind::StairsLinked {
                landing,
                floor,
                position,
                inserted,
            } => {
                let m = memo.as_mut().ok_or_else(|| diverged(k, "no memo".into()))?;
                if *inserted {
                    let id = m.insert_candidate(*position, *floor, SnaType::Stairs);
                    if id != *landing {
                        return Err(diverged(k, format!("landing id {id} != {landing}")));
                    }
                } else {
                    let cur = m.current();
                    m.connect(cur, *landing)?;
                }
            }
            EventKind::WaypointAdded { node, position, floor } => {
                let m = memo.as_mut().ok_or_else(|| diverged(k, "no memo".into()))?;
                let id = m.insert_candidate(*position, *floor, SnaType::Normal);
                if id != *node {
                    return Err(diverged(k, format!("waypoint id {id} != {node}")));
                }
            }
            EventKind::SubgoalDropped { node, .. } => {
                let m = memo.as_mut().ok_or_else(|| diverged(k, "no memo".into()))?;
                m.remove_unvisited(*node)?;
            }
            EventKind::SubgoalSelected { .. }
            | EventKind::StairTransition { .. }
            | EventKind::TargetSelected { .. }
            | EventKind::Terminated { .. } => {}
        }
    }
    let mut m = memo.ok_or_else(|| diverged(0, "log has no observation".into()))?;
    while recorded < poses.len() {
        m.record_pose(poses[recorded]);
        recorded += 1;
    }
    Ok(m)
}
