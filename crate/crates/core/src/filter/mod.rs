//! Gaussian assumed-density filtering.
//!
//! Every filter step maps a [`GaussianState`] to a new one. The UKF path
//! approximates the Gaussian integrals with the third-degree cubature rule;
//! the EKF path linearizes at the mean. Both share [`kalman_update_core`].

mod cubature;
mod ekf;
mod jacobian;
pub mod linalg;
mod model;
mod ukf;
mod update;

pub use cubature::{generate_cubature_points, sigma_points, CubaturePointSet};
pub use ekf::{ekf_predict, ekf_update};
pub use jacobian::{
    default_fd_steps, finite_difference_jacobian, finite_difference_jacobian_steps,
};
pub use linalg::{cholesky_sqrt, symmetrize, CholeskyFactor};
pub use model::{DynamicsModel, MeasurementModel};
pub use ukf::{transform_moments, ukf_predict, ukf_update, MomentTransform};
pub use update::{kalman_update_core, InnovationStats};

use nalgebra::{DMatrix, DVector};

use crate::error::{FilterError, Result};

/// Which Gaussian approximation drives a filter step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterMode {
    Ekf,
    Ukf,
}

impl FilterMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterMode::Ekf => "EKF",
            FilterMode::Ukf => "UKF",
        }
    }
}

impl std::fmt::Display for FilterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The assumed density `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state, checking dimensions and symmetrizing the covariance.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(FilterError::InvalidDimension("empty state".into()));
        }
        if cov.nrows() != d || cov.ncols() != d {
            return Err(FilterError::Shape {
                expected: d,
                got: cov.nrows().max(cov.ncols()),
                context: "covariance dimension",
            });
        }
        Ok(Self {
            mean,
            cov: linalg::symmetrized(cov),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn is_finite(&self) -> bool {
        self.mean
            .iter()
            .chain(self.cov.iter())
            .all(|v| v.is_finite())
    }
}

/// Predict step for either mode.
pub fn predict<D: DynamicsModel + ?Sized>(
    mode: FilterMode,
    state: &GaussianState,
    dynamics: &D,
    k: usize,
) -> Result<GaussianState> {
    match mode {
        FilterMode::Ekf => ekf_predict(state, dynamics, k),
        FilterMode::Ukf => ukf_predict(state, dynamics, k),
    }
}

/// Update step for either mode.
pub fn update<M: MeasurementModel + ?Sized>(
    mode: FilterMode,
    state: &GaussianState,
    meas: &M,
    y: &DVector<f64>,
    k: usize,
) -> Result<(GaussianState, InnovationStats)> {
    match mode {
        FilterMode::Ekf => ekf_update(state, meas, y, k),
        FilterMode::Ukf => ukf_update(state, meas, y, k),
    }
}
