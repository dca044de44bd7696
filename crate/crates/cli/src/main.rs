mod batch;
mod experiment;
mod render;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use explorer_core::episode::{parse_jsonl, replay, EpisodeLog};
use explorer_core::evalkit::evaluate;
use explorer_core::sgmemo::{MemoParams, SgMemo};

use experiment::{GenArgs, Planner, RunConfig, SceneSource, TuningArgs};

const LOG_ENV: &str = "ABOT_EXPLORER_LOG_LEVEL";

/// An error plus the exit code it maps to: 2 for usage, 3 for unreadable input.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(e: impl Into<anyhow::Error>) -> Self {
        Self { code: 2, error: e.into() }
    }

    pub fn input(e: impl Into<anyhow::Error>) -> Self {
        Self { code: 3, error: e.into() }
    }
}

#[derive(Parser)]
#[command(name = "explorer", version, about = "Scene-graph exploration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a procedural scene file.
    GenScene {
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        gen: GenArgs,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Run one episode and write its log, memo, metrics and curves.
    Run {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, value_enum, default_value_t = Planner::Sna)]
        planner: Planner,
        #[command(flatten)]
        tuning: TuningArgs,
        /// Master seed: start pose, perception noise and random-tree sampling.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Accepted for symmetry with `batch`; a single episode is sequential.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Run many seeds for one or more planners and aggregate the metrics.
    Batch {
        /// Scene file or generator seed shared by all episodes; without either,
        /// each episode generates its own scene from its seed.
        #[command(flatten)]
        source: OptionalSourceArgs,
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "sna")]
        planner: Vec<Planner>,
        #[command(flatten)]
        tuning: TuningArgs,
        /// First episode seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of episodes per planner.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also write memo.json/metrics.json/curves.csv for every episode.
        #[arg(long)]
        save_episodes: bool,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Recompute metrics from a scene and an event log.
    Evaluate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = explorer_core::evalkit::OCC_RANGE_M)]
        range_m: f64,
        /// Output directory for metrics.json and curves.csv.
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Draw a scene, trajectory and memo as SVG.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        memo: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        floor: usize,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long)]
    gen_seed: Option<u64>,
}

#[derive(Args)]
#[group(required = false, multiple = false)]
struct OptionalSourceArgs {
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long)]
    gen_seed: Option<u64>,
}

fn init_logging() -> Result<(), Failure> {
    let level = std::env::var(LOG_ENV).unwrap_or_else(|_| "error".to_string());
    if !matches!(level.as_str(), "error" | "info" | "debug") {
        return Err(Failure::usage(anyhow::anyhow!(
            "{LOG_ENV} must be one of error, info, debug (got {level:?})"
        )));
    }
    env_logger::Builder::new()
        .parse_filters(&level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_logging().and_then(|()| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::GenScene { seed, gen, output } => {
            let scene = experiment::generate(seed, &gen.params())?;
            fs::write(&output, scene.to_json())
                .with_context(|| format!("writing {}", output.display()))
                .map_err(Failure::input)?;
            println!(
                "nodes={} rooms={} objects={}",
                scene.node_count(),
                scene.room_count(),
                scene.object_count()
            );
            Ok(())
        }
        Command::Run {
            source,
            gen,
            planner,
            tuning,
            seed,
            jobs: _,
            output,
        } => {
            let (scene, src) = match (source.scene, source.gen_seed) {
                (Some(path), _) => (experiment::load_scene_file(&path)?, SceneSource::File { path }),
                (None, Some(s)) => {
                    let params = gen.params();
                    let scene = experiment::generate(s, &params)?;
                    (
                        scene,
                        SceneSource::Generated {
                            seed: s,
                            params: (&params).into(),
                        },
                    )
                }
                (None, None) => unreachable!("clap enforces a scene source"),
            };
            let cfg = RunConfig {
                version: experiment::CONFIG_VERSION,
                scene: src,
                planner,
                seed,
                memo: tuning.memo_params()?,
                planner_params: tuning.planner_params()?,
                noise: tuning.noise(seed)?,
            };
            if cfg.noise.is_some() && planner != Planner::Sna {
                log::warn!("perception noise only affects the sna planner");
            }
            let out = experiment::run_one(&scene, &cfg).map_err(Failure::input)?;
            experiment::write_artifacts(&output, &out, true).map_err(Failure::input)?;
            let config = serde_json::to_string_pretty(&cfg).expect("config serializes");
            fs::write(output.join("config.json"), config + "\n")
                .context("writing config.json")
                .map_err(Failure::input)?;
            println!(
                "{} termination={} path_length_m={:.3} cr_topo={:.4} cr_occ={:.4}",
                planner.name(),
                out.log.termination.as_str(),
                out.log.path_length_m(),
                out.metrics.cr_topo,
                out.metrics.cr_occ
            );
            Ok(())
        }
        Command::Batch {
            source,
            gen,
            planner,
            tuning,
            seed,
            seeds,
            jobs,
            save_episodes,
            output,
        } => {
            if seeds == 0 {
                return Err(Failure::usage(anyhow::anyhow!("--seeds must be at least 1")));
            }
            if jobs == 0 {
                return Err(Failure::usage(anyhow::anyhow!("--jobs must be at least 1")));
            }
            let shared = match (source.scene, source.gen_seed) {
                (Some(path), _) => Some((experiment::load_scene_file(&path)?, SceneSource::File { path })),
                (None, Some(s)) => {
                    let params = gen.params();
                    Some((
                        experiment::generate(s, &params)?,
                        SceneSource::Generated {
                            seed: s,
                            params: (&params).into(),
                        },
                    ))
                }
                (None, None) => None,
            };
            let plan = batch::BatchPlan {
                shared,
                gen: gen.params(),
                planners: planner,
                tuning,
                seeds: (seed..seed + seeds).collect(),
                jobs,
                save_episodes,
            };
            batch::run(&plan, &output)
        }
        Command::Evaluate {
            scene,
            log,
            range_m,
            output,
        } => {
            let scene = experiment::load_scene_file(&scene)?;
            let text = fs::read_to_string(&log)
                .with_context(|| format!("reading {}", log.display()))
                .map_err(Failure::input)?;
            let episode = log_from_text(&text).map_err(Failure::input)?;
            let metrics = evaluate(&scene, &episode, range_m);
            fs::create_dir_all(&output)
                .and_then(|()| fs::write(output.join("metrics.json"), metrics.to_json() + "\n"))
                .and_then(|()| fs::write(output.join("curves.csv"), metrics.curves_csv()))
                .with_context(|| format!("writing into {}", output.display()))
                .map_err(Failure::input)?;
            println!("{}", explorer_core::evalkit::CSV_COLUMNS.join(","));
            println!("{}", metrics.csv_row());
            Ok(())
        }
        Command::Render {
            scene,
            log,
            memo,
            floor,
            output,
        } => {
            let scene = experiment::load_scene_file(&scene)?;
            if floor >= scene.floors.len() {
                return Err(Failure::usage(anyhow::anyhow!(
                    "floor {floor} does not exist (scene has {})",
                    scene.floors.len()
                )));
            }
            let poses = match &log {
                Some(p) => {
                    let text = fs::read_to_string(p)
                        .with_context(|| format!("reading {}", p.display()))
                        .map_err(Failure::input)?;
                    parse_jsonl(&text)
                        .with_context(|| format!("parsing {}", p.display()))
                        .map_err(Failure::input)?
                        .poses
                }
                None => Vec::new(),
            };
            let memo = match &memo {
                Some(p) => {
                    let text = fs::read_to_string(p)
                        .with_context(|| format!("reading {}", p.display()))
                        .map_err(Failure::input)?;
                    Some(
                        SgMemo::parse(&text, MemoParams::default())
                            .with_context(|| format!("parsing {}", p.display()))
                            .map_err(Failure::input)?,
                    )
                }
                None => None,
            };
            let svg = render::svg(&scene, floor, &poses, memo.as_ref());
            fs::write(&output, svg)
                .with_context(|| format!("writing {}", output.display()))
                .map_err(Failure::input)?;
            Ok(())
        }
    }
}

/// Rebuilds a full episode from its line-delimited log by replaying it.
fn log_from_text(text: &str) -> anyhow::Result<EpisodeLog> {
    let parsed = parse_jsonl(text)?;
    let termination = parsed.termination().context("log has no terminated event")?;
    let final_memo = replay(&parsed.header, &parsed.poses, &parsed.events)?;
    Ok(EpisodeLog {
        header: parsed.header,
        poses: parsed.poses,
        distances: parsed.distances,
        events: parsed.events,
        final_memo,
        termination,
    })
}
