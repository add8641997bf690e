use nalgebra::{DMatrix, DVector};

use super::linalg::symmetrize;
use super::GaussianState;
use crate::error::{FilterError, Result};

/// Innovation mean `μ`, innovation covariance `S` (including `R`) and the
/// state-measurement cross-covariance `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationStats {
    pub innovation_mean: DVector<f64>,
    pub innovation_cov: DMatrix<f64>,
    pub cross_cov: DMatrix<f64>,
}

/// `K = C S⁻¹`, `m = m⁻ + K (y - μ)`, `P = P⁻ - K S Kᵀ`.
pub fn kalman_update_core(
    pred: &GaussianState,
    stats: &InnovationStats,
    y: &DVector<f64>,
) -> Result<GaussianState> {
    let d = pred.dim();
    let m = y.len();
    let s = &stats.innovation_cov;
    let c = &stats.cross_cov;
    if stats.innovation_mean.len() != m {
        return Err(FilterError::Shape {
            expected: m,
            got: stats.innovation_mean.len(),
            context: "innovation mean",
        });
    }
    if s.nrows() != m || s.ncols() != m {
        return Err(FilterError::Shape {
            expected: m,
            got: s.nrows(),
            context: "innovation covariance",
        });
    }
    if c.nrows() != d || c.ncols() != m {
        return Err(FilterError::Shape {
            expected: d,
            got: c.nrows(),
            context: "cross covariance",
        });
    }
    if s.iter().chain(c.iter()).any(|v| !v.is_finite()) {
        return Err(FilterError::Numeric(
            "non-finite innovation statistics".into(),
        ));
    }

    // Kᵀ = S⁻¹ Cᵀ (S is symmetric).
    let gain_t = match s.clone().cholesky() {
        Some(chol) => chol.solve(&c.transpose()),
        None => s
            .clone()
            .lu()
            .solve(&c.transpose())
            .ok_or(FilterError::SingularInnovation)?,
    };
    let gain = gain_t.transpose();
    if gain.iter().any(|v| !v.is_finite()) {
        return Err(FilterError::SingularInnovation);
    }

    let residual = y - &stats.innovation_mean;
    let mean = &pred.mean + &gain * residual;
    let mut cov = &pred.cov - &gain * s * &gain_t;
    symmetrize(&mut cov);
    Ok(GaussianState { mean, cov })
}
