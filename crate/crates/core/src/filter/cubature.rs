//! Third-degree spherical-radial cubature rule and sigma-point generation.

use nalgebra::DVector;

use super::linalg::cholesky_sqrt;
use super::GaussianState;
use crate::error::{FilterError, Result};

/// Unit cubature points `±√n e_i` with equal weights `1 / (2n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubaturePointSet {
    unit_points: Vec<DVector<f64>>,
    weights: Vec<f64>,
}

impl CubaturePointSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(FilterError::InvalidDimension(
                "cubature rule needs dimension >= 1".into(),
            ));
        }
        let radius = (n as f64).sqrt();
        let mut unit_points = Vec::with_capacity(2 * n);
        for sign in [1.0, -1.0] {
            for i in 0..n {
                let mut xi = DVector::zeros(n);
                xi[i] = sign * radius;
                unit_points.push(xi);
            }
        }
        let weights = vec![1.0 / (2 * n) as f64; 2 * n];
        Ok(Self {
            unit_points,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.unit_points[0].len()
    }

    pub fn len(&self) -> usize {
        self.unit_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_points.is_empty()
    }

    pub fn unit_points(&self) -> &[DVector<f64>] {
        &self.unit_points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

pub fn generate_cubature_points(n: usize) -> Result<CubaturePointSet> {
    CubaturePointSet::new(n)
}

/// Sigma points `z_i = m + L ξ_i` with `L` the lower Cholesky factor of the
/// state covariance.
pub fn sigma_points(state: &GaussianState, rule: &CubaturePointSet) -> Result<Vec<DVector<f64>>> {
    if rule.dim() != state.dim() {
        return Err(FilterError::Shape {
            expected: state.dim(),
            got: rule.dim(),
            context: "cubature rule dimension",
        });
    }
    let factor = cholesky_sqrt(&state.cov)?;
    let n = state.dim();
    let radius = (n as f64).sqrt();
    // ξ_i is a scaled coordinate vector, so L ξ_i is a scaled column of L.
    let mut points = Vec::with_capacity(2 * n);
    for sign in [1.0, -1.0] {
        for i in 0..n {
            points.push(&state.mean + factor.lower.column(i) * (sign * radius));
        }
    }
    Ok(points)
}
