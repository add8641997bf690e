//! Scenario generation, corruption protocols, alignment metrics and sweeps
//! comparing EKF and UKF updates in the planar SLAM simulator.

mod align;
mod config;
mod corrupt;
mod run;
mod scenario;
mod sweep;

pub use align::{procrustes_align, rmse_normalized, scene_diameter, Similarity2};
pub use config::{stream_rng, streams, CorruptionSpec, ScenarioConfig};
pub use corrupt::{corrupt_init, corrupt_swaps, SwapLog};
pub use run::{evaluate_run, run_slam, PoseEstimate, RunResult};
pub use scenario::{
    generate_landmarks, generate_scenario, ground_truth_pose, FrameMeasurements, Scenario,
};
pub use sweep::{
    aggregate, sweep, write_aggregates_csv, write_results_csv, write_trajectory_csv, Aggregate,
    Experiment, SweepOutput, SweepRow, SweepSpec, AGGREGATE_HEADER, RESULTS_HEADER,
    TRAJECTORY_HEADER,
};
