mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use adf_slam::benchmark::Experiment;
use clap::{Args, Parser, Subcommand};

use commands::RunOptions;
use config::{load_config, parse_seeds};
use error::CliError;

/// EKF vs cubature-UKF SLAM benchmarks and IMU propagation checks.
#[derive(Debug, Parser)]
#[command(name = "adf-slam", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// JSON configuration file; omitted fields keep their defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// `N` for seeds 1..=N, or a comma-separated list.
    #[arg(long, value_name = "N|LIST")]
    seeds: Option<String>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, value_name = "N")]
    parallelism: Option<usize>,
    /// Override a config value, e.g. `--set n_steps=50` or `--set scenario.camera.focal=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Write per-run trajectory CSVs.
    #[arg(long)]
    dump_trajectories: bool,
    /// Fill `wall_ms` with measured run times (makes outputs non-reproducible).
    #[arg(long)]
    record_timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run EKF and UKF SLAM on one scenario per seed.
    RunSlam(CommonArgs),
    /// Sweep the feature-swap rate.
    SweepSwap(CommonArgs),
    /// Sweep the landmark initialization noise variance.
    SweepInitNoise(CommonArgs),
    /// Propagate a VIO state through an IMU CSV file under both filters.
    ImuCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// IMU file with columns t_ns,wx,wy,wz,ax,ay,az.
        csv: PathBuf,
    },
    /// Run the embedded property checks.
    Selftest,
}

fn prepare(common: &CommonArgs) -> Result<(config::AppConfig, RunOptions), CliError> {
    let loaded = load_config(common.config.as_deref(), &common.overrides)?;
    let seeds = common.seeds.as_deref().map(parse_seeds).transpose()?;
    for (path, value, source) in &loaded.parameters {
        log::info!("{path} = {value} ({})", source.label());
    }
    if let Some(seeds) = &seeds {
        log::info!("seeds = {seeds:?} (flag)");
    }
    if let Some(p) = common.parallelism {
        log::info!("parallelism = {p} (flag)");
    }
    Ok((
        loaded.config,
        RunOptions {
            out_dir: common.out.clone(),
            seeds,
            parallelism: common.parallelism,
            dump_trajectories: common.dump_trajectories,
            record_timing: common.record_timing,
        },
    ))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::RunSlam(common) => {
            let (cfg, opts) = prepare(&common)?;
            commands::cmd_run_slam(&cfg, &opts)
        }
        Command::SweepSwap(common) => {
            let (cfg, opts) = prepare(&common)?;
            commands::cmd_sweep(Experiment::Swap, &cfg, &opts)
        }
        Command::SweepInitNoise(common) => {
            let (cfg, opts) = prepare(&common)?;
            commands::cmd_sweep(Experiment::InitNoise, &cfg, &opts)
        }
        Command::ImuCheck { common, csv } => {
            let (cfg, opts) = prepare(&common)?;
            commands::cmd_imu_check(&cfg, &opts, &csv)
        }
        Command::Selftest => commands::cmd_selftest(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ADF_SLAM_LOG", "info"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
