use std::f64::consts::TAU;

use nalgebra::Vector2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::{stream_rng, streams, ScenarioConfig};
use crate::error::{FilterError, Result};
use crate::slam2d::{project_landmark, visible_landmarks, OdometryControl, Pose2};

/// Observations of one frame, aligned with `visible`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMeasurements {
    pub visible: Vec<usize>,
    pub noiseless: Vec<f64>,
    pub observed: Vec<f64>,
}

/// Ground truth plus the simulated sensor streams.
///
/// `gt_poses` has `n_steps + 1` entries (the start pose first); controls and
/// frames have `n_steps` entries, frame `k - 1` observed at pose `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub gt_poses: Vec<Pose2>,
    pub gt_landmarks: Vec<Vector2<f64>>,
    pub controls: Vec<OdometryControl>,
    pub frames: Vec<FrameMeasurements>,
}

impl Scenario {
    pub fn n_steps(&self) -> usize {
        self.controls.len()
    }
}

fn normal(std: f64) -> Normal<f64> {
    Normal::new(0.0, std).expect("std validated non-negative")
}

/// Ground-truth pose `k` on the circle; the optical axis is tangent to the
/// path (counter-clockwise travel).
pub fn ground_truth_pose(config: &ScenarioConfig, k: usize) -> Pose2 {
    let phi = TAU * (config.n_loops * k) as f64 / config.n_steps as f64;
    Pose2::new(
        config.path_radius * phi.cos(),
        config.path_radius * phi.sin(),
        phi,
    )
}

pub fn generate_landmarks(config: &ScenarioConfig) -> Vec<Vector2<f64>> {
    let mut rng = stream_rng(config.seed, streams::LANDMARKS);
    let spacing = TAU / config.n_landmarks as f64;
    (0..config.n_landmarks)
        .map(|i| {
            let angle = spacing * i as f64 + rng.random_range(-0.25..=0.25) * spacing;
            let radius =
                config.landmark_ring_radius + config.landmark_jitter * rng.random_range(-1.0..=1.0);
            Vector2::new(radius * angle.cos(), radius * angle.sin())
        })
        .collect()
}

pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let gt_poses: Vec<Pose2> = (0..=config.n_steps)
        .map(|k| ground_truth_pose(config, k))
        .collect();
    let gt_landmarks = generate_landmarks(config);

    let mut odo_rng = stream_rng(config.seed, streams::ODOMETRY);
    let pos_noise = normal(config.odometry_pos_std);
    let theta_noise = normal(config.odometry_theta_std);
    let controls = gt_poses
        .windows(2)
        .map(|w| {
            let dp = w[1].position - w[0].position;
            OdometryControl::new(
                dp.x + pos_noise.sample(&mut odo_rng),
                dp.y + pos_noise.sample(&mut odo_rng),
                w[1].theta - w[0].theta + theta_noise.sample(&mut odo_rng),
            )
        })
        .collect();

    let mut meas_rng = stream_rng(config.seed, streams::MEASUREMENT);
    let meas_noise = normal(config.meas_std);
    let mut frames = Vec::with_capacity(config.n_steps);
    for pose in &gt_poses[1..] {
        let visible = visible_landmarks(pose, &gt_landmarks, &config.camera);
        let noiseless = visible
            .iter()
            .map(|&i| project_landmark(pose, &gt_landmarks[i], &config.camera))
            .collect::<Result<Vec<_>>>()?;
        let observed = noiseless
            .iter()
            .map(|y| y + meas_noise.sample(&mut meas_rng))
            .collect();
        frames.push(FrameMeasurements {
            visible,
            noiseless,
            observed,
        });
    }
    if frames.iter().all(|f| f.visible.is_empty()) {
        return Err(FilterError::DegenerateScenario(
            "no landmark is ever visible".into(),
        ));
    }
    Ok(Scenario {
        gt_poses,
        gt_landmarks,
        controls,
        frames,
    })
}
