use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{CorruptionSpec, ScenarioConfig};
use super::run::{run_slam, RunResult};
use super::scenario::{generate_scenario, Scenario};
use crate::error::{FilterError, Result};
use crate::filter::FilterMode;

/// The corruption axis a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Swap,
    InitNoise,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Swap => "swap",
            Experiment::InitNoise => "init_noise",
        }
    }

    pub fn corruption(self, level: f64) -> CorruptionSpec {
        match self {
            Experiment::Swap => CorruptionSpec::Swap { rho: level },
            Experiment::InitNoise => CorruptionSpec::InitNoise { variance: level },
        }
    }

    /// Swap rates 0 %, 1 %, ..., 15 %.
    pub fn default_levels(self) -> Vec<f64> {
        match self {
            Experiment::Swap => (0..=15).map(|i| i as f64 / 100.0).collect(),
            Experiment::InitNoise => vec![0.0, 0.25, 1.0, 4.0, 9.0, 16.0],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub experiment: Experiment,
    pub base: ScenarioConfig,
    pub levels: Vec<f64>,
    pub seeds: Vec<u64>,
    pub modes: Vec<FilterMode>,
    /// Worker threads; 0 means one per available core.
    pub parallelism: usize,
    /// Fill `wall_ms` with measured run time. Off by default because timings
    /// make the results file non-reproducible.
    pub record_timing: bool,
}

/// One row of the results file.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub experiment: &'static str,
    pub mode: FilterMode,
    pub level: f64,
    pub seed: u64,
    pub path_rmse: f64,
    pub map_rmse: f64,
    pub diverged: bool,
    pub n_steps: usize,
    pub n_landmarks: usize,
    pub wall_ms: u64,
}

/// Statistics of the non-diverged runs at one `(level, mode)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub experiment: &'static str,
    pub mode: FilterMode,
    pub level: f64,
    pub runs: usize,
    pub failures: usize,
    pub path_rmse_mean: f64,
    pub path_rmse_std: f64,
    pub map_rmse_mean: f64,
    pub map_rmse_std: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<Aggregate>,
    /// Full run results in row order, when requested.
    pub runs: Vec<Option<RunResult>>,
}

struct Job {
    level: f64,
    seed: u64,
    mode: FilterMode,
}

fn run_job(spec: &SweepSpec, job: &Job, keep_run: bool) -> (SweepRow, Option<RunResult>) {
    let started = Instant::now();
    let config = ScenarioConfig {
        seed: job.seed,
        ..spec.base.clone()
    };
    let corruption = spec.experiment.corruption(job.level);
    let outcome = generate_scenario(&config)
        .and_then(|scenario| run_slam(&config, &scenario, &corruption, job.mode));
    let wall_ms = if spec.record_timing {
        started.elapsed().as_millis() as u64
    } else {
        0
    };
    let (path_rmse, map_rmse, diverged, run) = match outcome {
        Ok(r) => (r.path_rmse, r.map_rmse, r.diverged, Some(r)),
        Err(e) => {
            log::warn!(
                "{} level={} seed={} mode={}: {e}",
                spec.experiment.name(),
                job.level,
                job.seed,
                job.mode
            );
            (f64::NAN, f64::NAN, true, None)
        }
    };
    let row = SweepRow {
        experiment: spec.experiment.name(),
        mode: job.mode,
        level: job.level,
        seed: job.seed,
        path_rmse,
        map_rmse,
        diverged,
        n_steps: config.n_steps,
        n_landmarks: config.n_landmarks,
        wall_ms,
    };
    (row, if keep_run { run } else { None })
}

/// Runs every `(level, seed, mode)` combination; output order is fixed by the
/// grid, not by the schedule.
pub fn sweep(spec: &SweepSpec, keep_runs: bool) -> Result<SweepOutput> {
    if spec.levels.is_empty() || spec.seeds.is_empty() || spec.modes.is_empty() {
        return Err(FilterError::InvalidConfig(
            "sweep needs at least one level, seed and mode".into(),
        ));
    }
    spec.base.validate()?;
    for &level in &spec.levels {
        spec.experiment.corruption(level).validate()?;
    }
    let jobs: Vec<Job> = spec
        .levels
        .iter()
        .flat_map(|&level| {
            spec.seeds.iter().flat_map(move |&seed| {
                spec.modes
                    .iter()
                    .map(move |&mode| Job { level, seed, mode })
            })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism)
        .build()
        .map_err(|e| FilterError::InvalidConfig(format!("thread pool: {e}")))?;
    let results: Vec<(SweepRow, Option<RunResult>)> = pool.install(|| {
        jobs.par_iter()
            .map(|job| run_job(spec, job, keep_runs))
            .collect()
    });
    let (rows, runs): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let aggregates = aggregate(&rows);
    Ok(SweepOutput {
        rows,
        aggregates,
        runs,
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per `(level, mode)` mean and sample standard deviation over the
/// non-diverged rows, in first-appearance order.
pub fn aggregate(rows: &[SweepRow]) -> Vec<Aggregate> {
    let mut keys: Vec<(&'static str, u64, FilterMode)> = Vec::new();
    for r in rows {
        let key = (r.experiment, r.level.to_bits(), r.mode);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(experiment, level_bits, mode)| {
            let group: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| {
                    r.experiment == experiment && r.level.to_bits() == level_bits && r.mode == mode
                })
                .collect();
            let ok: Vec<&&SweepRow> = group.iter().filter(|r| !r.diverged).collect();
            let path: Vec<f64> = ok.iter().map(|r| r.path_rmse).collect();
            let map: Vec<f64> = ok.iter().map(|r| r.map_rmse).collect();
            let (path_rmse_mean, path_rmse_std) = mean_std(&path);
            let (map_rmse_mean, map_rmse_std) = mean_std(&map);
            Aggregate {
                experiment,
                mode,
                level: f64::from_bits(level_bits),
                runs: group.len(),
                failures: group.len() - ok.len(),
                path_rmse_mean,
                path_rmse_std,
                map_rmse_mean,
                map_rmse_std,
            }
        })
        .collect()
}

pub const RESULTS_HEADER: &str =
    "experiment,mode,level,seed,path_rmse,map_rmse,diverged,n_steps,n_landmarks,wall_ms";
pub const AGGREGATE_HEADER: &str =
    "experiment,mode,level,runs,failures,path_rmse_mean,path_rmse_std,map_rmse_mean,map_rmse_std";
pub const TRAJECTORY_HEADER: &str = "step,gt_x,gt_y,gt_theta,est_x,est_y,est_theta,cov_trace";

#[derive(Serialize)]
struct ResultRecord<'a> {
    experiment: &'a str,
    mode: &'a str,
    level: f64,
    seed: u64,
    path_rmse: f64,
    map_rmse: f64,
    diverged: bool,
    n_steps: usize,
    n_landmarks: usize,
    wall_ms: u64,
}

#[derive(Serialize)]
struct AggregateRecord<'a> {
    experiment: &'a str,
    mode: &'a str,
    level: f64,
    runs: usize,
    failures: usize,
    path_rmse_mean: f64,
    path_rmse_std: f64,
    map_rmse_mean: f64,
    map_rmse_std: f64,
}

#[derive(Serialize)]
struct TrajectoryRecord {
    step: usize,
    gt_x: f64,
    gt_y: f64,
    gt_theta: f64,
    est_x: f64,
    est_y: f64,
    est_theta: f64,
    cov_trace: f64,
}

fn write_records<W: Write, T: Serialize>(
    out: W,
    records: impl IntoIterator<Item = T>,
) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_results_csv<W: Write>(out: W, rows: &[SweepRow]) -> csv::Result<()> {
    write_records(
        out,
        rows.iter().map(|r| ResultRecord {
            experiment: r.experiment,
            mode: r.mode.as_str(),
            level: r.level,
            seed: r.seed,
            path_rmse: r.path_rmse,
            map_rmse: r.map_rmse,
            diverged: r.diverged,
            n_steps: r.n_steps,
            n_landmarks: r.n_landmarks,
            wall_ms: r.wall_ms,
        }),
    )
}

pub fn write_aggregates_csv<W: Write>(out: W, aggs: &[Aggregate]) -> csv::Result<()> {
    write_records(
        out,
        aggs.iter().map(|a| AggregateRecord {
            experiment: a.experiment,
            mode: a.mode.as_str(),
            level: a.level,
            runs: a.runs,
            failures: a.failures,
            path_rmse_mean: a.path_rmse_mean,
            path_rmse_std: a.path_rmse_std,
            map_rmse_mean: a.map_rmse_mean,
            map_rmse_std: a.map_rmse_std,
        }),
    )
}

/// Per-step ground truth next to the filtered pose (not aligned).
pub fn write_trajectory_csv<W: Write>(
    out: W,
    scenario: &Scenario,
    run: &RunResult,
) -> csv::Result<()> {
    write_records(
        out,
        scenario
            .gt_poses
            .iter()
            .zip(&run.poses)
            .enumerate()
            .map(|(step, (gt, est))| TrajectoryRecord {
                step,
                gt_x: gt.position.x,
                gt_y: gt.position.y,
                gt_theta: gt.theta,
                est_x: est.pose.position.x,
                est_y: est.pose.position.y,
                est_theta: est.pose.theta,
                cov_trace: est.cov_trace,
            }),
    )
}
