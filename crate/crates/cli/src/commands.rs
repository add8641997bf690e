use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use adf_slam::benchmark::{
    generate_scenario, run_slam, sweep, write_aggregates_csv, write_results_csv,
    write_trajectory_csv, Aggregate, Experiment, RunResult, ScenarioConfig, SweepRow, SweepSpec,
};
use adf_slam::imu::{
    propagate_sequence, read_imu_file, vio_initial_state, ImuCsvError, ImuRow, PropagationReport,
    VioValues,
};
use adf_slam::selftest::run_selftest;
use adf_slam::FilterMode;
use nalgebra::{DMatrix, DVector, Quaternion, Vector3};
use serde::Serialize;

use crate::config::AppConfig;
use crate::error::CliError;

const MODES: [FilterMode; 2] = [FilterMode::Ekf, FilterMode::Ukf];

/// Run options that come from flags rather than the config file.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seeds: Option<Vec<u64>>,
    pub parallelism: Option<usize>,
    pub dump_trajectories: bool,
    pub record_timing: bool,
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path.display(), e))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::io(path.display(), e)
}

fn write_trajectory(
    dir: &Path,
    name: &str,
    config: &ScenarioConfig,
    run: &RunResult,
) -> Result<(), CliError> {
    let scenario = generate_scenario(config).map_err(|e| CliError::Config(e.to_string()))?;
    let path = dir.join(name);
    write_trajectory_csv(create(&path)?, &scenario, run).map_err(csv_err(&path))
}

fn print_rows(rows: &[SweepRow]) {
    println!(
        "{:<10} {:<4} {:>8} {:>6} {:>10} {:>10} {:>8}",
        "experiment", "mode", "level", "seed", "path_rmse", "map_rmse", "diverged"
    );
    for r in rows {
        println!(
            "{:<10} {:<4} {:>8} {:>6} {:>10.5} {:>10.5} {:>8}",
            r.experiment, r.mode, r.level, r.seed, r.path_rmse, r.map_rmse, r.diverged
        );
    }
}

fn print_aggregates(aggs: &[Aggregate]) {
    println!(
        "{:<4} {:>8} {:>5} {:>5} {:>14} {:>14}",
        "mode", "level", "runs", "fail", "path mean", "path std"
    );
    for a in aggs {
        println!(
            "{:<4} {:>8} {:>5} {:>5} {:>14.5} {:>14.5}",
            a.mode, a.level, a.runs, a.failures, a.path_rmse_mean, a.path_rmse_std
        );
    }
}

/// Both filter modes on one scenario per seed with the configured corruption.
pub fn cmd_run_slam(cfg: &AppConfig, opts: &RunOptions) -> Result<(), CliError> {
    ensure_dir(&opts.out_dir)?;
    let seeds = opts
        .seeds
        .clone()
        .unwrap_or_else(|| vec![cfg.scenario.seed]);
    let corruption = cfg.corruption.spec();
    let experiment = cfg.corruption.experiment_name();
    let mut rows = Vec::new();
    for seed in seeds {
        let config = ScenarioConfig {
            seed,
            ..cfg.scenario.clone()
        };
        let scenario = generate_scenario(&config).map_err(|e| CliError::Config(e.to_string()))?;
        for mode in MODES {
            let started = std::time::Instant::now();
            let run = run_slam(&config, &scenario, &corruption, mode)
                .map_err(|e| CliError::Config(e.to_string()))?;
            if let Some(reason) = &run.divergence {
                log::warn!("seed {seed} {mode} diverged: {reason}");
            }
            if run.swap_log.opportunities > 0 {
                log::info!(
                    "seed {seed} {mode}: {} swaps over {} opportunities ({:.3})",
                    run.swap_log.swaps.len(),
                    run.swap_log.opportunities,
                    run.swap_log.swap_fraction()
                );
            }
            if opts.dump_trajectories {
                let name = format!("trajectory_{}_seed{seed}.csv", mode.as_str().to_lowercase());
                write_trajectory(&opts.out_dir, &name, &config, &run)?;
            }
            rows.push(SweepRow {
                experiment,
                mode,
                level: corruption.level(),
                seed,
                path_rmse: run.path_rmse,
                map_rmse: run.map_rmse,
                diverged: run.diverged,
                n_steps: config.n_steps,
                n_landmarks: config.n_landmarks,
                wall_ms: if opts.record_timing {
                    started.elapsed().as_millis() as u64
                } else {
                    0
                },
            });
        }
    }
    let path = opts.out_dir.join("run_slam_results.csv");
    write_results_csv(create(&path)?, &rows).map_err(csv_err(&path))?;
    print_rows(&rows);
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Level × seed × mode sweep for one corruption axis.
pub fn cmd_sweep(
    experiment: Experiment,
    cfg: &AppConfig,
    opts: &RunOptions,
) -> Result<(), CliError> {
    ensure_dir(&opts.out_dir)?;
    let levels = match experiment {
        Experiment::Swap => cfg.sweep.swap_levels.clone(),
        Experiment::InitNoise => cfg.sweep.init_noise_levels.clone(),
    };
    let spec = SweepSpec {
        experiment,
        base: cfg.scenario.clone(),
        levels,
        seeds: opts
            .seeds
            .clone()
            .unwrap_or_else(|| cfg.sweep.seeds.clone()),
        modes: MODES.to_vec(),
        parallelism: opts.parallelism.unwrap_or(cfg.sweep.parallelism),
        record_timing: opts.record_timing || cfg.sweep.record_timing,
    };
    log::info!(
        "{} sweep: {} levels x {} seeds x {} modes on {} threads",
        experiment.name(),
        spec.levels.len(),
        spec.seeds.len(),
        spec.modes.len(),
        if spec.parallelism == 0 {
            "all".to_string()
        } else {
            spec.parallelism.to_string()
        }
    );
    let out = sweep(&spec, opts.dump_trajectories).map_err(|e| CliError::Config(e.to_string()))?;

    // all files are written after the parallel phase
    let results = opts
        .out_dir
        .join(format!("{}_results.csv", experiment.name()));
    write_results_csv(create(&results)?, &out.rows).map_err(csv_err(&results))?;
    let aggregate = opts
        .out_dir
        .join(format!("{}_aggregate.csv", experiment.name()));
    write_aggregates_csv(create(&aggregate)?, &out.aggregates).map_err(csv_err(&aggregate))?;
    if opts.dump_trajectories {
        let dir = opts.out_dir.join("trajectories");
        ensure_dir(&dir)?;
        for (row, run) in out.rows.iter().zip(&out.runs) {
            let Some(run) = run else { continue };
            let config = ScenarioConfig {
                seed: row.seed,
                ..spec.base.clone()
            };
            let name = format!(
                "{}_level{}_seed{}_{}.csv",
                experiment.name(),
                row.level,
                row.seed,
                row.mode.as_str().to_lowercase()
            );
            write_trajectory(&dir, &name, &config, run)?;
        }
    }
    let failures: usize = out.aggregates.iter().map(|a| a.failures).sum();
    if failures > 0 {
        log::warn!("{failures} runs diverged");
    }
    print_aggregates(&out.aggregates);
    log::info!("wrote {} and {}", results.display(), aggregate.display());
    Ok(())
}

#[derive(Serialize)]
struct FinalState {
    position: [f64; 3],
    velocity: [f64; 3],
    orientation_wxyz: [f64; 4],
    yaw_deg: f64,
    accel_scale: [f64; 3],
    accel_bias: [f64; 3],
    gyro_bias: [f64; 3],
    cov_trace: f64,
}

#[derive(Serialize)]
struct ModeReport {
    mode: &'static str,
    diverged: bool,
    steps_completed: usize,
    max_norm_drift: f64,
    psd_violations: usize,
    cov_trace_first: Option<f64>,
    cov_trace_last: Option<f64>,
    final_state: Option<FinalState>,
}

#[derive(Serialize)]
struct ImuReport {
    input: String,
    samples: usize,
    gravity: [f64; 3],
    modes: Vec<ModeReport>,
}

fn yaw_deg(q: &Quaternion<f64>) -> f64 {
    let n = q.norm_squared();
    (2.0 * (q.w * q.k + q.i * q.j))
        .atan2(n - 2.0 * (q.j * q.j + q.k * q.k))
        .to_degrees()
}

fn arr3(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn mode_report(report: &PropagationReport) -> ModeReport {
    let final_state = report.final_state.as_ref().map(|s| {
        let v = VioValues::from_vector(&s.mean);
        let q = v.orientation;
        FinalState {
            position: arr3(&v.position),
            velocity: arr3(&v.velocity),
            orientation_wxyz: [q.w, q.i, q.j, q.k],
            yaw_deg: yaw_deg(&q),
            accel_scale: arr3(&v.accel_scale),
            accel_bias: arr3(&v.accel_bias),
            gyro_bias: arr3(&v.gyro_bias),
            cov_trace: s.cov.trace(),
        }
    });
    ModeReport {
        mode: report.mode.as_str(),
        diverged: report.diverged,
        steps_completed: report.records.len(),
        max_norm_drift: report.max_norm_drift,
        psd_violations: report.psd_violations,
        cov_trace_first: report.records.first().map(|r| r.cov_trace),
        cov_trace_last: report.records.last().map(|r| r.cov_trace),
        final_state,
    }
}

#[derive(Serialize)]
struct SampleRecord {
    index: usize,
    t_ns: i64,
    px: f64,
    py: f64,
    pz: f64,
    vx: f64,
    vy: f64,
    vz: f64,
    qw: f64,
    qx: f64,
    qy: f64,
    qz: f64,
    yaw_deg: f64,
    cov_trace: f64,
    norm_drift: f64,
    psd_ok: bool,
}

fn write_samples(path: &Path, rows: &[ImuRow], report: &PropagationReport) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in &report.records {
        let v = &r.values;
        let q = v.orientation;
        w.serialize(SampleRecord {
            index: r.index,
            t_ns: rows[r.index].t_ns,
            px: v.position.x,
            py: v.position.y,
            pz: v.position.z,
            vx: v.velocity.x,
            vy: v.velocity.y,
            vz: v.velocity.z,
            qw: q.w,
            qx: q.i,
            qy: q.j,
            qz: q.k,
            yaw_deg: yaw_deg(&q),
            cov_trace: r.cov_trace,
            norm_drift: r.norm_drift,
            psd_ok: r.psd_ok,
        })
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path.display(), e))
}

/// Propagates the VIO state through an IMU file under both filter modes.
pub fn cmd_imu_check(cfg: &AppConfig, opts: &RunOptions, csv_path: &Path) -> Result<(), CliError> {
    let (rows, samples) = read_imu_file(csv_path).map_err(|e| match e {
        ImuCsvError::Io(err) => CliError::io(csv_path.display(), err),
        other => CliError::Config(format!("{}: {other}", csv_path.display())),
    })?;
    ensure_dir(&opts.out_dir)?;
    let imu = &cfg.imu;
    let mut noise = DVector::zeros(6);
    noise.rows_mut(0, 3).fill(imu.accel_noise_density.powi(2));
    noise.rows_mut(3, 3).fill(imu.gyro_noise_density.powi(2));
    let noise = DMatrix::from_diagonal(&noise);
    let gravity = Vector3::from(imu.gravity);
    let initial = vio_initial_state(&VioValues::default(), &imu.initial_variances)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let mut modes = Vec::new();
    for mode in MODES {
        let report = propagate_sequence(mode, &initial, &samples, &noise, gravity);
        let path = opts
            .out_dir
            .join(format!("imu_check_{}.csv", mode.as_str().to_lowercase()));
        write_samples(&path, &rows, &report)?;
        let summary = mode_report(&report);
        match &summary.final_state {
            Some(f) => println!(
                "{mode}: {} steps, yaw {:.6} deg, max |q| drift {:.2e}, PSD violations {}, trace(P) {:.3e}",
                summary.steps_completed, f.yaw_deg, summary.max_norm_drift, summary.psd_violations, f.cov_trace
            ),
            None => println!(
                "{mode}: diverged after {} of {} steps",
                summary.steps_completed,
                samples.len()
            ),
        }
        if report.diverged {
            log::warn!("{mode} propagation diverged");
        }
        modes.push(summary);
    }
    let report = ImuReport {
        input: csv_path.display().to_string(),
        samples: samples.len(),
        gravity: imu.gravity,
        modes,
    };
    let path = opts.out_dir.join("imu_check_report.json");
    serde_json::to_writer_pretty(create(&path)?, &report)
        .map_err(|e| CliError::io(path.display(), e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_selftest() -> Result<(), CliError> {
    let results = run_selftest();
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!(
        "{} of {} properties passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        Err(CliError::Selftest(failed))
    } else {
        Ok(())
    }
}
