//! Shared run configuration: scene source, planner choice and all tunables,
//! plus the single-episode driver used by `run` and `batch`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use explorer_core::baselines::{frontier_explore, random_tree_explore};
use explorer_core::episode::EpisodeLog;
use explorer_core::evalkit::{evaluate, MetricsReport};
use explorer_core::perception::{default_rig, NoiseModel};
use explorer_core::planner::{run_episode, PlannerParams};
use explorer_core::scene::{generate_scene, load_scene, sample_start, GenParams, Scene};
use explorer_core::sgmemo::MemoParams;
use serde::Serialize;

use crate::Failure;

/// Start poses keep this far from walls.
pub const START_WALL_CLEARANCE_M: f64 = 0.3;
/// ... and farther than this from every ground-truth node.
pub const START_NODE_CLEARANCE_M: f64 = 1.0;
pub const CONFIG_VERSION: i64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Planner {
    Sna,
    Frontier,
    #[value(name = "random_tree", alias = "rrt")]
    RandomTree,
}

impl Planner {
    pub fn name(self) -> &'static str {
        match self {
            Planner::Sna => "sna",
            Planner::Frontier => "frontier",
            Planner::RandomTree => "random_tree",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Rooms per floor for generated scenes.
    #[arg(long, default_value_t = 6)]
    pub rooms: usize,
    #[arg(long, default_value_t = 1)]
    pub floors: usize,
    #[arg(long, default_value_t = 1.6)]
    pub corridor_width_m: f64,
    #[arg(long, default_value_t = 0.9)]
    pub door_width_m: f64,
    #[arg(long, default_value_t = 3)]
    pub objects_per_room: usize,
    #[arg(long, default_value_t = 3.0)]
    pub room_min_m: f64,
    #[arg(long, default_value_t = 5.0)]
    pub room_max_m: f64,
}

impl GenArgs {
    pub fn params(&self) -> GenParams {
        GenParams {
            floors: self.floors,
            rooms_per_floor: self.rooms,
            corridor_width_m: self.corridor_width_m,
            door_width_m: self.door_width_m,
            objects_per_room: self.objects_per_room,
            room_size_m: (self.room_min_m, self.room_max_m),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TuningArgs {
    #[arg(long, default_value_t = 300.0)]
    pub budget_m: f64,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon_m: f64,
    #[arg(long, default_value_t = 0.8)]
    pub trail_prune_m: f64,
    #[arg(long, default_value_t = 1.5)]
    pub cluster_radius_m: f64,
    #[arg(long, default_value_t = 60.0)]
    pub heading_cone_deg: f64,
    /// Perception and range-sensor radius; also the occupancy coverage radius.
    #[arg(long, default_value_t = 5.0)]
    pub range_m: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_dropout: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma_px: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_confusion: f64,
    /// Keep the scene-graph planner on its start floor.
    #[arg(long)]
    pub single_floor: bool,
}

/// Everything that determines one episode.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub version: i64,
    pub scene: SceneSource,
    pub planner: Planner,
    pub seed: u64,
    pub memo: MemoParams,
    pub planner_params: PlannerParams,
    pub noise: Option<NoiseModel>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneSource {
    File { path: PathBuf },
    Generated { seed: u64, params: GenSummary },
}

#[derive(Debug, Clone, Serialize)]
pub struct GenSummary {
    pub floors: usize,
    pub rooms_per_floor: usize,
    pub corridor_width_m: f64,
    pub door_width_m: f64,
    pub objects_per_room: usize,
    pub room_size_m: (f64, f64),
}

impl From<&GenParams> for GenSummary {
    fn from(p: &GenParams) -> Self {
        Self {
            floors: p.floors,
            rooms_per_floor: p.rooms_per_floor,
            corridor_width_m: p.corridor_width_m,
            door_width_m: p.door_width_m,
            objects_per_room: p.objects_per_room,
            room_size_m: p.room_size_m,
        }
    }
}

impl TuningArgs {
    pub fn memo_params(&self) -> Result<MemoParams, Failure> {
        let p = MemoParams {
            epsilon_m: self.epsilon_m,
            trail_prune_m: self.trail_prune_m,
            cluster_radius_m: self.cluster_radius_m,
        };
        p.validate().map_err(Failure::usage)?;
        Ok(p)
    }

    pub fn planner_params(&self) -> Result<PlannerParams, Failure> {
        let p = PlannerParams {
            heading_cone_deg: self.heading_cone_deg,
            budget_m: self.budget_m,
            range_m: self.range_m,
            allow_stairs: !self.single_floor,
            ..PlannerParams::default()
        };
        p.validate().map_err(Failure::usage)?;
        Ok(p)
    }

    pub fn noise(&self, seed: u64) -> Result<Option<NoiseModel>, Failure> {
        if self.noise_dropout == 0.0 && self.noise_sigma_px == 0.0 && self.noise_confusion == 0.0 {
            return Ok(None);
        }
        let n = NoiseModel {
            pixel_sigma: self.noise_sigma_px,
            dropout_prob: self.noise_dropout,
            type_confusion_prob: self.noise_confusion,
            rng_seed: seed,
        };
        if !n.is_valid() {
            return Err(Failure::usage(anyhow::anyhow!(
                "noise probabilities must lie in [0, 1] and the pixel sigma must be non-negative"
            )));
        }
        Ok(Some(n))
    }
}

pub fn load_scene_file(path: &Path) -> Result<Scene, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading scene {}", path.display()))
        .map_err(Failure::input)?;
    load_scene(&text)
        .with_context(|| format!("loading scene {}", path.display()))
        .map_err(Failure::input)
}

pub fn generate(seed: u64, params: &GenParams) -> Result<Scene, Failure> {
    params.validate().map_err(Failure::usage)?;
    generate_scene(seed, params)
        .with_context(|| format!("generating scene {seed}"))
        .map_err(Failure::input)
}

/// A finished episode and its metrics.
pub struct Outcome {
    pub log: EpisodeLog,
    pub metrics: MetricsReport,
}

pub fn run_one(scene: &Scene, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let Some(start) = sample_start(scene, cfg.seed, START_WALL_CLEARANCE_M, START_NODE_CLEARANCE_M) else {
        bail!("no admissible start pose in the scene");
    };
    log::debug!(
        "seed {}: start ({:.2}, {:.2}) on floor {}",
        cfg.seed,
        start.x,
        start.y,
        start.floor
    );
    let range = cfg.planner_params.range_m;
    let budget = cfg.planner_params.budget_m;
    let log = match cfg.planner {
        Planner::Sna => run_episode(scene, start, cfg.memo, cfg.planner_params, &default_rig(), cfg.noise)?,
        Planner::Frontier => frontier_explore(scene, start, range, budget).context("start pose not on free space")?,
        Planner::RandomTree => {
            random_tree_explore(scene, start, range, budget, cfg.seed).context("start pose not on free space")?
        }
    };
    let metrics = evaluate(scene, &log, range);
    log::info!(
        "{} seed {}: {} after {:.1} m, cr_topo {:.3}, cr_occ {:.3}",
        cfg.planner.name(),
        cfg.seed,
        log.termination.as_str(),
        log.path_length_m(),
        metrics.cr_topo,
        metrics.cr_occ
    );
    Ok(Outcome { log, metrics })
}

/// Writes the per-episode artifact set into `dir`.
pub fn write_artifacts(dir: &Path, out: &Outcome, with_events: bool) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write = |name: &str, body: String| {
        let p = dir.join(name);
        fs::write(&p, body).with_context(|| format!("writing {}", p.display()))
    };
    if with_events {
        write("events.jsonl", out.log.to_jsonl())?;
    }
    write("memo.json", out.log.final_memo.to_json() + "\n")?;
    write("metrics.json", out.metrics.to_json() + "\n")?;
    write("curves.csv", out.metrics.curves_csv())?;
    Ok(())
}
