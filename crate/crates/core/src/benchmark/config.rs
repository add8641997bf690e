use serde::{Deserialize, Serialize};

use crate::error::{FilterError, Result};
use crate::slam2d::{CameraIntrinsics2d, DEFAULT_LANDMARK_PRIOR_STD, DEFAULT_POSE_PRIOR_VAR};

/// Simulation definition for one SLAM run (seed included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_steps: usize,
    pub n_landmarks: usize,
    pub n_loops: usize,
    /// Radius of the circular camera path (m).
    pub path_radius: f64,
    /// Radius of the landmark ring (m).
    pub landmark_ring_radius: f64,
    /// Half-width of the uniform radial jitter of landmark placement (m).
    pub landmark_jitter: f64,
    /// Per-step odometry position noise std (m).
    pub odometry_pos_std: f64,
    /// Per-step odometry heading noise std (rad).
    pub odometry_theta_std: f64,
    /// Measurement noise std (normalized image units).
    pub meas_std: f64,
    /// Landmark prior std (m); the prior covariance ignores the corruption level.
    pub landmark_prior_std: f64,
    pub pose_prior_var: [f64; 3],
    pub camera: CameraIntrinsics2d,
    /// Update landmark by landmark instead of one stacked update per frame.
    pub sequential_updates: bool,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_steps: 197,
            n_landmarks: 20,
            n_loops: 2,
            path_radius: 12.0,
            landmark_ring_radius: 20.0,
            landmark_jitter: 0.5,
            odometry_pos_std: 0.02,
            odometry_theta_std: 0.01,
            meas_std: 0.05,
            landmark_prior_std: DEFAULT_LANDMARK_PRIOR_STD,
            pose_prior_var: DEFAULT_POSE_PRIOR_VAR,
            camera: CameraIntrinsics2d::default(),
            sequential_updates: false,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(FilterError::InvalidConfig(m));
        if self.n_steps == 0 {
            return fail("n_steps must be positive".into());
        }
        if self.n_landmarks == 0 {
            return fail("n_landmarks must be positive".into());
        }
        if self.n_loops == 0 {
            return fail("n_loops must be positive".into());
        }
        for (name, v) in [
            ("path_radius", self.path_radius),
            ("landmark_ring_radius", self.landmark_ring_radius),
            ("landmark_prior_std", self.landmark_prior_std),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("landmark_jitter", self.landmark_jitter),
            ("odometry_pos_std", self.odometry_pos_std),
            ("odometry_theta_std", self.odometry_theta_std),
            ("meas_std", self.meas_std),
            ("pose_prior_var[0]", self.pose_prior_var[0]),
            ("pose_prior_var[1]", self.pose_prior_var[1]),
            ("pose_prior_var[2]", self.pose_prior_var[2]),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be >= 0, got {v}"));
            }
        }
        if self.meas_std == 0.0 {
            return fail("meas_std must be positive (R must be positive definite)".into());
        }
        self.camera.validate()
    }
}

/// Corruption applied on top of a clean scenario.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorruptionSpec {
    #[default]
    None,
    /// Each visible observation is swapped with its nearest visible
    /// neighbour's with probability `rho`.
    Swap { rho: f64 },
    /// Initial landmark guesses are ground truth plus `N(0, variance I)`.
    InitNoise { variance: f64 },
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CorruptionSpec::None => Ok(()),
            CorruptionSpec::Swap { rho } if (0.0..=1.0).contains(&rho) => Ok(()),
            CorruptionSpec::Swap { rho } => Err(FilterError::InvalidConfig(format!(
                "rho must lie in [0, 1], got {rho}"
            ))),
            CorruptionSpec::InitNoise { variance } if variance >= 0.0 && variance.is_finite() => {
                Ok(())
            }
            CorruptionSpec::InitNoise { variance } => Err(FilterError::InvalidConfig(format!(
                "init-noise variance must be >= 0, got {variance}"
            ))),
        }
    }

    pub fn level(&self) -> f64 {
        match *self {
            CorruptionSpec::None => 0.0,
            CorruptionSpec::Swap { rho } => rho,
            CorruptionSpec::InitNoise { variance } => variance,
        }
    }
}

/// RNG stream ids. Each noise source owns one stream of the run seed so that
/// changing one corruption level never shifts another source's draws.
pub mod streams {
    pub const LANDMARKS: u64 = 1;
    pub const ODOMETRY: u64 = 2;
    pub const MEASUREMENT: u64 = 3;
    pub const SWAP: u64 = 4;
    pub const INIT_NOISE: u64 = 5;
}

pub fn stream_rng(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
