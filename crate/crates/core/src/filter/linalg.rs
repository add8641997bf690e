use nalgebra::DMatrix;

use crate::error::{FilterError, Result};

/// Jitter multipliers tried in order, scaled by `trace(P) / d`.
pub const JITTER_SCHEDULE: [f64; 5] = [0.0, 1e-12, 1e-10, 1e-8, 1e-6];

/// Lower Cholesky factor together with the diagonal jitter that was needed.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub lower: DMatrix<f64>,
    pub jitter: f64,
}

/// Replaces `p` by `(p + pᵀ) / 2`. The result is exactly symmetric.
pub fn symmetrize(p: &mut DMatrix<f64>) {
    let n = p.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (p[(i, j)] + p[(j, i)]);
            p[(i, j)] = avg;
            p[(j, i)] = avg;
        }
    }
}

pub fn symmetrized(mut p: DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&mut p);
    p
}

/// Lower-triangular `L` with `L Lᵀ = P + j I`, escalating `j` along
/// [`JITTER_SCHEDULE`].
///
/// The all-zero matrix factors to the zero matrix with no jitter.
pub fn cholesky_sqrt(p: &DMatrix<f64>) -> Result<CholeskyFactor> {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return Err(FilterError::InvalidDimension(format!(
            "cholesky of {}x{} matrix",
            p.nrows(),
            p.ncols()
        )));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(FilterError::NonPsdCovariance);
    }
    if p.iter().all(|v| *v == 0.0) {
        return Ok(CholeskyFactor {
            lower: DMatrix::zeros(n, n),
            jitter: 0.0,
        });
    }
    let scale = p.trace() / n as f64;
    if scale <= 0.0 {
        return Err(FilterError::NonPsdCovariance);
    }
    let sym = symmetrized(p.clone());
    for mult in JITTER_SCHEDULE {
        let jitter = mult * scale;
        let mut trial = sym.clone();
        for i in 0..n {
            trial[(i, i)] += jitter;
        }
        if let Some(chol) = trial.cholesky() {
            return Ok(CholeskyFactor {
                lower: chol.unpack(),
                jitter,
            });
        }
    }
    Err(FilterError::NonPsdCovariance)
}

/// Block-diagonal concatenation of two square matrices.
pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(na + nb, na + nb);
    out.view_mut((0, 0), (na, na)).copy_from(a);
    out.view_mut((na, na), (nb, nb)).copy_from(b);
    out
}

pub fn max_abs_asymmetry(p: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            worst = worst.max((p[(i, j)] - p[(j, i)]).abs());
        }
    }
    worst
}
