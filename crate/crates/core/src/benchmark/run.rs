use nalgebra::{DMatrix, DVector, Vector2};

use super::align::{procrustes_align, rmse_normalized, scene_diameter};
use super::config::{stream_rng, streams, CorruptionSpec, ScenarioConfig};
use super::corrupt::{corrupt_init, corrupt_swaps, SwapLog};
use super::scenario::{FrameMeasurements, Scenario};
use crate::error::{FilterError, Result};
use crate::filter::{ekf_predict, update, FilterMode, GaussianState};
use crate::slam2d::{
    initial_state, slam_dynamics_model, stacked_measurement_model, Pose2, Slam2dLayout,
};

/// Filtered pose after step `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseEstimate {
    pub pose: Pose2,
    pub cov_trace: f64,
}

/// Outcome of one SLAM run. RMSEs are NaN when the run diverged.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub mode: FilterMode,
    pub path_rmse: f64,
    pub map_rmse: f64,
    pub diverged: bool,
    pub divergence: Option<String>,
    /// `n_steps + 1` entries when the run completed, the prior pose first.
    pub poses: Vec<PoseEstimate>,
    pub final_landmarks: Vec<Vector2<f64>>,
    pub initial_guesses: Vec<Vector2<f64>>,
    pub swap_log: SwapLog,
}

/// Path and map errors after aligning the estimated map to ground truth and
/// carrying the same similarity over to the path. Normalized by the
/// ground-truth scene diameter.
pub fn evaluate_run(
    scenario: &Scenario,
    poses: &[PoseEstimate],
    landmarks: &[Vector2<f64>],
) -> Result<(f64, f64)> {
    let transform = procrustes_align(landmarks, &scenario.gt_landmarks)?;
    let normalizer = scene_diameter(&scenario.gt_landmarks);
    let map = transform.apply_all(landmarks);
    let map_rmse = rmse_normalized(&map, &scenario.gt_landmarks, normalizer)?;
    let path: Vec<_> = poses
        .iter()
        .map(|p| transform.apply(&p.pose.position))
        .collect();
    let gt_path: Vec<_> = scenario.gt_poses[..poses.len()]
        .iter()
        .map(|p| p.position)
        .collect();
    let path_rmse = rmse_normalized(&path, &gt_path, normalizer)?;
    Ok((path_rmse, map_rmse))
}

fn filter_update(
    mode: FilterMode,
    state: &GaussianState,
    layout: Slam2dLayout,
    frame: &FrameMeasurements,
    config: &ScenarioConfig,
    k: usize,
) -> Result<GaussianState> {
    if frame.visible.is_empty() {
        return Ok(state.clone());
    }
    if config.sequential_updates {
        let mut cur = state.clone();
        for (&i, &y) in frame.visible.iter().zip(&frame.observed) {
            let model = stacked_measurement_model(layout, &[i], config.camera, config.meas_std)?;
            cur = update(mode, &cur, &model, &DVector::from_element(1, y), k)?.0;
        }
        Ok(cur)
    } else {
        let model =
            stacked_measurement_model(layout, &frame.visible, config.camera, config.meas_std)?;
        let y = DVector::from_column_slice(&frame.observed);
        Ok(update(mode, state, &model, &y, k)?.0)
    }
}

/// Runs the SLAM filter over a scenario.
///
/// Prediction is the exact linear Kalman step in both modes; only the
/// measurement update differs. Numerical failures end the run and are
/// recorded as divergence.
pub fn run_slam(
    config: &ScenarioConfig,
    scenario: &Scenario,
    corruption: &CorruptionSpec,
    mode: FilterMode,
) -> Result<RunResult> {
    config.validate()?;
    corruption.validate()?;
    let layout = Slam2dLayout::new(scenario.gt_landmarks.len());

    let initial_guesses = match *corruption {
        CorruptionSpec::InitNoise { variance } => corrupt_init(
            &scenario.gt_landmarks,
            variance,
            &mut stream_rng(config.seed, streams::INIT_NOISE),
        ),
        _ => scenario.gt_landmarks.clone(),
    };
    let (frames, swap_log) = match *corruption {
        CorruptionSpec::Swap { rho } => corrupt_swaps(
            &scenario.frames,
            &scenario.gt_landmarks,
            rho,
            &mut stream_rng(config.seed, streams::SWAP),
        ),
        _ => (scenario.frames.clone(), SwapLog::default()),
    };

    let q_pose = DMatrix::from_diagonal(&DVector::from_vec(vec![
        config.odometry_pos_std.powi(2),
        config.odometry_pos_std.powi(2),
        config.odometry_theta_std.powi(2),
    ]));

    let mut state = initial_state(
        &scenario.gt_poses[0],
        config.pose_prior_var,
        &initial_guesses,
        config.landmark_prior_std,
    )?;
    let mut poses = vec![PoseEstimate {
        pose: layout.pose(&state.mean),
        cov_trace: state.cov.trace(),
    }];
    let mut divergence = None;

    for (k, (control, frame)) in scenario.controls.iter().zip(&frames).enumerate() {
        let step = (|| -> Result<GaussianState> {
            let dynamics = slam_dynamics_model(layout, *control, q_pose.clone())?;
            let predicted = ekf_predict(&state, &dynamics, k + 1)?;
            let posterior = filter_update(mode, &predicted, layout, frame, config, k + 1)?;
            if !posterior.is_finite() {
                return Err(FilterError::Numeric("non-finite posterior".into()));
            }
            Ok(posterior)
        })();
        match step {
            Ok(next) => state = next,
            Err(e) => {
                divergence = Some(format!("step {}: {e}", k + 1));
                break;
            }
        }
        poses.push(PoseEstimate {
            pose: layout.pose(&state.mean),
            cov_trace: state.cov.trace(),
        });
    }

    let final_landmarks = layout.landmarks(&state.mean);
    let (path_rmse, map_rmse) = if divergence.is_none() {
        match evaluate_run(scenario, &poses, &final_landmarks) {
            Ok(v) => v,
            Err(e) => {
                divergence = Some(format!("evaluation: {e}"));
                (f64::NAN, f64::NAN)
            }
        }
    } else {
        (f64::NAN, f64::NAN)
    };

    Ok(RunResult {
        mode,
        path_rmse,
        map_rmse,
        diverged: divergence.is_some(),
        divergence,
        poses,
        final_landmarks,
        initial_guesses,
        swap_log,
    })
}
