use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use super::mechanize::{layout, mechanize_unnormalized, ImuSample, VioValues};
use crate::error::{FilterError, Result};
use crate::filter::linalg::cholesky_sqrt;
use crate::filter::{predict, DynamicsModel, FilterMode, GaussianState};

/// Mechanization as a filter transition with noise `(ε^a, ε^ω) ~ N(0, Q Δt)`.
#[derive(Debug, Clone)]
pub struct VioDynamics {
    sample: ImuSample,
    noise: DMatrix<f64>,
    gravity: Vector3<f64>,
}

pub fn vio_dynamics_model(
    sample: ImuSample,
    noise: &DMatrix<f64>,
    gravity: Vector3<f64>,
) -> Result<VioDynamics> {
    if noise.nrows() != layout::NOISE_DIM || noise.ncols() != layout::NOISE_DIM {
        return Err(FilterError::Shape {
            expected: layout::NOISE_DIM,
            got: noise.nrows(),
            context: "IMU process noise",
        });
    }
    Ok(VioDynamics {
        sample,
        noise: noise.clone(),
        gravity,
    })
}

impl DynamicsModel for VioDynamics {
    fn state_dim(&self) -> usize {
        layout::DIM
    }

    fn noise_dim(&self) -> usize {
        layout::NOISE_DIM
    }

    fn transition(&self, x: &DVector<f64>, noise: &DVector<f64>, _k: usize) -> DVector<f64> {
        let values = VioValues::from_vector(x);
        let accel_noise = Vector3::new(noise[0], noise[1], noise[2]);
        let gyro_noise = Vector3::new(noise[3], noise[4], noise[5]);
        mechanize_unnormalized(
            &values,
            &self.sample,
            &accel_noise,
            &gyro_noise,
            &self.gravity,
        )
        .to_vector()
    }

    fn noise_cov(&self, _k: usize) -> DMatrix<f64> {
        &self.noise * self.sample.dt
    }
}

/// Initial variances per block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VioInitialVariances {
    pub position: f64,
    pub velocity: f64,
    pub orientation: f64,
    pub accel_scale: f64,
    pub accel_bias: f64,
    pub gyro_bias: f64,
}

impl Default for VioInitialVariances {
    fn default() -> Self {
        Self {
            position: 1e-4,
            velocity: 1e-6,
            orientation: 1e-3,
            accel_scale: 1e-4,
            accel_bias: 1e-4,
            gyro_bias: 1e-4,
        }
    }
}

pub fn vio_initial_state(values: &VioValues, var: &VioInitialVariances) -> Result<GaussianState> {
    let mut diag = DVector::zeros(layout::DIM);
    let per_block = [
        var.position,
        var.velocity,
        var.orientation,
        var.accel_scale,
        var.accel_bias,
        var.gyro_bias,
    ];
    for ((_, range), v) in layout::BLOCKS.iter().zip(per_block) {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(FilterError::InvalidConfig(format!("initial variance {v}")));
        }
        for i in range.clone() {
            diag[i] = v;
        }
    }
    GaussianState::new(values.to_vector(), DMatrix::from_diagonal(&diag))
}

/// Rescales the quaternion block of the mean to unit length.
pub fn renormalize_orientation(state: &mut GaussianState) {
    let mut q = state.mean.rows_mut(layout::ORIENTATION.start, 4);
    let n = q.norm();
    if n > 0.0 && n.is_finite() {
        q /= n;
    }
}

/// Predict through one IMU sample and renormalize the quaternion mean.
pub fn propagate(
    mode: FilterMode,
    state: &GaussianState,
    sample: ImuSample,
    noise: &DMatrix<f64>,
    gravity: Vector3<f64>,
    k: usize,
) -> Result<GaussianState> {
    let model = vio_dynamics_model(sample, noise, gravity)?;
    let mut next = predict(mode, state, &model, k)?;
    renormalize_orientation(&mut next);
    Ok(next)
}

/// Per-sample record of a propagation run.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationRecord {
    pub index: usize,
    pub values: VioValues,
    pub cov_trace: f64,
    /// `| |q| - 1 |` of the mean after renormalization.
    pub norm_drift: f64,
    pub psd_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationReport {
    pub mode: FilterMode,
    pub records: Vec<PropagationRecord>,
    pub max_norm_drift: f64,
    pub psd_violations: usize,
    pub diverged: bool,
    pub final_state: Option<GaussianState>,
}

/// Runs the filter prediction over a sample sequence, stopping at the first
/// numerical failure.
pub fn propagate_sequence(
    mode: FilterMode,
    initial: &GaussianState,
    samples: &[ImuSample],
    noise: &DMatrix<f64>,
    gravity: Vector3<f64>,
) -> PropagationReport {
    let mut state = initial.clone();
    let mut records = Vec::with_capacity(samples.len());
    let mut max_norm_drift = 0.0_f64;
    let mut psd_violations = 0;
    let mut diverged = false;
    for (k, sample) in samples.iter().enumerate() {
        match propagate(mode, &state, *sample, noise, gravity, k) {
            Ok(next) if next.is_finite() => state = next,
            Ok(_) | Err(_) => {
                diverged = true;
                break;
            }
        }
        let psd_ok = cholesky_sqrt(&state.cov).is_ok();
        if !psd_ok {
            psd_violations += 1;
        }
        let norm_drift = (state.mean.rows(layout::ORIENTATION.start, 4).norm() - 1.0).abs();
        max_norm_drift = max_norm_drift.max(norm_drift);
        records.push(PropagationRecord {
            index: k,
            values: VioValues::from_vector(&state.mean),
            cov_trace: state.cov.trace(),
            norm_drift,
            psd_ok,
        });
    }
    PropagationReport {
        mode,
        records,
        max_norm_drift,
        psd_violations,
        diverged,
        final_state: if diverged { None } else { Some(state) },
    }
}
