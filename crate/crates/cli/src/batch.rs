use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use explorer_core::evalkit::{MetricsReport, CSV_COLUMNS};
use explorer_core::scene::{GenParams, Scene};
use rayon::prelude::*;

use crate::experiment::{self, Planner, RunConfig, SceneSource, TuningArgs};
use crate::Failure;

pub struct BatchPlan {
    /// Scene used by every episode; `None` generates one per seed.
    pub shared: Option<(Scene, SceneSource)>,
    pub gen: GenParams,
    pub planners: Vec<Planner>,
    pub tuning: TuningArgs,
    pub seeds: Vec<u64>,
    pub jobs: usize,
    pub save_episodes: bool,
}

struct Row {
    planner: Planner,
    seed: u64,
    result: Result<MetricsReport, String>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn numeric_names() -> Vec<&'static str> {
    CSV_COLUMNS
        .iter()
        .copied()
        .filter(|c| *c != "planner" && *c != "termination")
        .collect()
}

pub fn header() -> String {
    let mut cols = vec!["row".to_string(), "seed".to_string()];
    cols.extend(CSV_COLUMNS.iter().map(|c| c.to_string()));
    cols.extend(numeric_names().iter().map(|c| format!("{c}_std")));
    cols.push("error".to_string());
    cols.join(",")
}

/// Columns in [`CSV_COLUMNS`] order, with the termination cell supplied.
fn metric_cells(planner: &str, values: &[f64; 12], termination: &str) -> Vec<String> {
    let f = |v: f64| format!("{v:.6}");
    let mut cells = vec![planner.to_string()];
    cells.extend(values[..5].iter().map(|v| f(*v)));
    cells.push(termination.to_string());
    cells.extend(values[5..].iter().map(|v| f(*v)));
    cells
}

fn episode_line(row: &Row) -> String {
    let mut cells = vec!["episode".to_string(), row.seed.to_string()];
    match &row.result {
        Ok(m) => {
            cells.extend(metric_cells(&m.planner, &m.numeric_columns(), m.termination.as_str()));
            cells.extend(std::iter::repeat_n(String::new(), 12));
            cells.push(String::new());
        }
        Err(e) => {
            cells.push(row.planner.name().to_string());
            cells.extend(std::iter::repeat_n(String::new(), 13 + 12));
            cells.push(csv_field(e));
        }
    }
    cells.join(",")
}

fn summary_line(planner: Planner, rows: &[&MetricsReport]) -> String {
    let n = rows.len() as f64;
    let mut mean = [0.0; 12];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r.numeric_columns()) {
            *m += v / n;
        }
    }
    let mut std = [0.0; 12];
    if rows.len() > 1 {
        for r in rows {
            for ((s, v), m) in std.iter_mut().zip(r.numeric_columns()).zip(mean) {
                *s += (v - m) * (v - m) / (n - 1.0);
            }
        }
    }
    let mut cells = vec!["summary".to_string(), String::new()];
    cells.extend(metric_cells(planner.name(), &mean, &format!("n={}", rows.len())));
    cells.extend(std.iter().map(|v| format!("{:.6}", v.sqrt())));
    cells.push(String::new());
    cells.join(",")
}

pub fn run(plan: &BatchPlan, output: &Path) -> Result<(), Failure> {
    let memo = plan.tuning.memo_params()?;
    let planner_params = plan.tuning.planner_params()?;
    plan.tuning.noise(0)?;
    let mut planners: Vec<Planner> = Vec::new();
    for p in &plan.planners {
        if !planners.contains(p) {
            planners.push(*p);
        }
    }
    let work: Vec<(Planner, u64)> = planners
        .iter()
        .flat_map(|&p| plan.seeds.iter().map(move |&s| (p, s)))
        .collect();
    fs::create_dir_all(output)
        .with_context(|| format!("creating {}", output.display()))
        .map_err(Failure::input)?;

    let episode = |&(planner, seed): &(Planner, u64)| -> Row {
        let result = (|| -> anyhow::Result<MetricsReport> {
            let generated;
            let (scene, source) = match &plan.shared {
                Some((s, src)) => (s, src.clone()),
                None => {
                    generated = experiment::generate(seed, &plan.gen).map_err(|f| f.error)?;
                    let src = SceneSource::Generated {
                        seed,
                        params: (&plan.gen).into(),
                    };
                    (&generated, src)
                }
            };
            let cfg = RunConfig {
                version: experiment::CONFIG_VERSION,
                scene: source,
                planner,
                seed,
                memo,
                planner_params,
                noise: plan.tuning.noise(seed).map_err(|f| f.error)?,
            };
            let out = experiment::run_one(scene, &cfg)?;
            if plan.save_episodes {
                let dir = output.join("episodes").join(format!("{}_{seed}", planner.name()));
                experiment::write_artifacts(&dir, &out, false)?;
            }
            Ok(out.metrics)
        })();
        if let Err(e) = &result {
            log::error!("{} seed {seed}: {e:#}", planner.name());
        }
        Row {
            planner,
            seed,
            result: result.map_err(|e| format!("{e:#}")),
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| Failure::input(anyhow!(e)))?;
    // collect() keeps input order, so rows are independent of scheduling
    let rows: Vec<Row> = pool.install(|| work.par_iter().map(episode).collect());

    let mut out = header();
    out.push('\n');
    for r in &rows {
        out.push_str(&episode_line(r));
        out.push('\n');
    }
    for &p in &planners {
        let ok: Vec<&MetricsReport> = rows
            .iter()
            .filter(|r| r.planner == p)
            .filter_map(|r| r.result.as_ref().ok())
            .collect();
        if !ok.is_empty() {
            out.push_str(&summary_line(p, &ok));
            out.push('\n');
        }
        println!(
            "{}: {}/{} episodes succeeded",
            p.name(),
            ok.len(),
            plan.seeds.len()
        );
    }
    let path = output.join("batch.csv");
    fs::write(&path, out)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::input)?;
    if rows.iter().all(|r| r.result.is_err()) {
        return Err(Failure::input(anyhow!("no episode succeeded")));
    }
    Ok(())
}
