//! First-order linearization (the "EKF" path).

use nalgebra::{DMatrix, DVector};

use super::jacobian::{default_fd_steps, finite_difference_jacobian_steps};
use super::linalg::symmetrize;
use super::model::{DynamicsModel, MeasurementModel};
use super::update::{kalman_update_core, InnovationStats};
use super::GaussianState;
use crate::error::{FilterError, Result};

fn dynamics_jacobians<D: DynamicsModel + ?Sized>(
    dynamics: &D,
    mean: &DVector<f64>,
    k: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if let Some(j) = dynamics.jacobians(mean, k) {
        return Ok(j);
    }
    let d = mean.len();
    let s = dynamics.noise_dim();
    let zero_noise = DVector::zeros(s);
    let fx = finite_difference_jacobian_steps(
        |x| dynamics.transition(x, &zero_noise, k),
        mean,
        &default_fd_steps(mean),
    )?;
    let fe = if s == 0 {
        DMatrix::zeros(d, 0)
    } else {
        finite_difference_jacobian_steps(
            |e| dynamics.transition(mean, e, k),
            &zero_noise,
            &default_fd_steps(&zero_noise),
        )?
    };
    Ok((fx, fe))
}

/// `m⁻ = f(m, 0)`, `P⁻ = F_x P F_xᵀ + F_ε Q F_εᵀ`.
pub fn ekf_predict<D: DynamicsModel + ?Sized>(
    state: &GaussianState,
    dynamics: &D,
    k: usize,
) -> Result<GaussianState> {
    let d = state.dim();
    let s = dynamics.noise_dim();
    if dynamics.state_dim() != d {
        return Err(FilterError::Shape {
            expected: dynamics.state_dim(),
            got: d,
            context: "dynamics state dimension",
        });
    }
    let mean = dynamics.transition(&state.mean, &DVector::zeros(s), k);
    if mean.len() != d {
        return Err(FilterError::Shape {
            expected: d,
            got: mean.len(),
            context: "dynamics output",
        });
    }
    let (fx, fe) = dynamics_jacobians(dynamics, &state.mean, k)?;
    let q = dynamics.noise_cov(k);
    let mut cov = &fx * &state.cov * fx.transpose();
    if s > 0 {
        cov += &fe * q * fe.transpose();
    }
    symmetrize(&mut cov);
    let out = GaussianState { mean, cov };
    if !out.is_finite() {
        return Err(FilterError::Numeric("non-finite EKF prediction".into()));
    }
    Ok(out)
}

/// Linearized innovation statistics with `μ = h(m⁻)`, then the Kalman update.
pub fn ekf_update<M: MeasurementModel + ?Sized>(
    state: &GaussianState,
    meas: &M,
    y: &DVector<f64>,
    k: usize,
) -> Result<(GaussianState, InnovationStats)> {
    let m = meas.meas_dim();
    if y.len() != m {
        return Err(FilterError::Shape {
            expected: m,
            got: y.len(),
            context: "measurement vector",
        });
    }
    let innovation_mean = meas.measure(&state.mean, k);
    if innovation_mean.len() != m {
        return Err(FilterError::Shape {
            expected: m,
            got: innovation_mean.len(),
            context: "measurement function output",
        });
    }
    if innovation_mean.iter().any(|v| !v.is_finite()) {
        return Err(FilterError::Numeric(
            "non-finite predicted measurement".into(),
        ));
    }
    let h = match meas.jacobian(&state.mean, k) {
        Some(h) => h,
        None => finite_difference_jacobian_steps(
            |x| meas.measure(x, k),
            &state.mean,
            &default_fd_steps(&state.mean),
        )?,
    };
    let cross_cov = &state.cov * h.transpose();
    let mut innovation_cov = &h * &cross_cov + meas.noise_cov(k);
    symmetrize(&mut innovation_cov);
    let stats = InnovationStats {
        innovation_mean,
        innovation_cov,
        cross_cov,
    };
    let post = kalman_update_core(state, &stats, y)?;
    Ok((post, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct SineDynamics;

    impl DynamicsModel for SineDynamics {
        fn state_dim(&self) -> usize {
            1
        }
        fn noise_dim(&self) -> usize {
            1
        }
        fn transition(&self, x: &DVector<f64>, e: &DVector<f64>, _k: usize) -> DVector<f64> {
            DVector::from_element(1, x[0].sin() + e[0])
        }
        fn noise_cov(&self, _k: usize) -> DMatrix<f64> {
            DMatrix::zeros(1, 1)
        }
    }

    struct Cubic;

    impl MeasurementModel for Cubic {
        fn meas_dim(&self) -> usize {
            1
        }
        fn measure(&self, x: &DVector<f64>, _k: usize) -> DVector<f64> {
            x.map(|v| v * v * v)
        }
        fn noise_cov(&self, _k: usize) -> DMatrix<f64> {
            DMatrix::from_element(1, 1, 0.01)
        }
    }

    fn scalar(m: f64, p: f64) -> GaussianState {
        GaussianState::new(DVector::from_element(1, m), DMatrix::from_element(1, 1, p)).unwrap()
    }

    #[test]
    fn sine_prediction_uses_cosine_slope() {
        let p = ekf_predict(&scalar(0.0, 0.01), &SineDynamics, 0).unwrap();
        assert!(p.mean[0].abs() < 1e-15);
        assert!((p.cov[(0, 0)] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn cubic_measurement_hand_values() {
        // H = 3, S = 9 · 0.01 + 0.01 = 0.1, K = 0.03 / 0.1 = 0.3, m = 1 + 0.3 · 0.1
        let (post, stats) = ekf_update(
            &scalar(1.0, 0.01),
            &Cubic,
            &DVector::from_element(1, 1.1),
            0,
        )
        .unwrap();
        assert!((stats.innovation_cov[(0, 0)] - 0.1).abs() < 1e-9);
        assert!((stats.cross_cov[(0, 0)] - 0.03).abs() < 1e-9);
        assert!((post.mean[0] - 1.03).abs() < 1e-9);
        assert!((post.cov[(0, 0)] - (0.01 - 0.3 * 0.1 * 0.3)).abs() < 1e-9);
    }

    #[test]
    fn zero_innovation_keeps_mean_and_contracts() {
        let (post, _) = ekf_update(
            &scalar(1.0, 0.01),
            &Cubic,
            &DVector::from_element(1, 1.0),
            0,
        )
        .unwrap();
        assert!((post.mean[0] - 1.0).abs() < 1e-15);
        assert!(post.cov[(0, 0)] < 0.01);
    }
}
