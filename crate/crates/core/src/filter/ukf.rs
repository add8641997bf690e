//! Moment matching with the cubature rule (the "UKF" path).

use nalgebra::{DMatrix, DVector};

use super::cubature::{generate_cubature_points, sigma_points};
use super::linalg::{block_diag, symmetrize};
use super::model::{DynamicsModel, MeasurementModel};
use super::update::{kalman_update_core, InnovationStats};
use super::GaussianState;
use crate::error::{FilterError, Result};

/// Cubature estimates of `E[g(x)]`, `Cov[g(x)]` and `Cov[x, g(x)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTransform {
    pub mean: DVector<f64>,
    /// Covariance of `g(x)` without any additive noise term.
    pub cov: DMatrix<f64>,
    pub cross_cov: DMatrix<f64>,
}

/// Pushes the sigma points of `state` through `g` and matches the first two
/// moments of the output.
pub fn transform_moments<G>(g: G, state: &GaussianState) -> Result<MomentTransform>
where
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    let rule = generate_cubature_points(state.dim())?;
    let points = sigma_points(state, &rule)?;
    let weights = rule.weights();

    let mut outputs: Vec<DVector<f64>> = Vec::with_capacity(points.len());
    for (index, z) in points.iter().enumerate() {
        let gz = g(z);
        if let Some(first) = outputs.first() {
            if gz.len() != first.len() {
                return Err(FilterError::Shape {
                    expected: first.len(),
                    got: gz.len(),
                    context: "transformed sigma point",
                });
            }
        }
        if gz.iter().any(|v| !v.is_finite()) {
            return Err(FilterError::NonFinite { index });
        }
        outputs.push(gz);
    }

    let out_dim = outputs[0].len();
    let mut mean = DVector::zeros(out_dim);
    for (gz, w) in outputs.iter().zip(weights) {
        mean.axpy(*w, gz, 1.0);
    }

    let n = points.len();
    let mut out_dev = DMatrix::zeros(out_dim, n);
    let mut in_dev_w = DMatrix::zeros(state.dim(), n);
    for (i, (gz, z)) in outputs.iter().zip(&points).enumerate() {
        out_dev.set_column(i, &(gz - &mean));
        in_dev_w.set_column(i, &((z - &state.mean) * weights[i]));
    }
    let mut out_dev_w = out_dev.clone();
    for (i, w) in weights.iter().enumerate() {
        out_dev_w.column_mut(i).scale_mut(*w);
    }
    let mut cov = &out_dev_w * out_dev.transpose();
    symmetrize(&mut cov);
    let cross_cov = in_dev_w * out_dev.transpose();

    Ok(MomentTransform {
        mean,
        cov,
        cross_cov,
    })
}

/// Non-additive cubature prediction over the augmented state `(x, ε)`.
///
/// Uses `2 (d + s)` points; with `s = 0` this is `transform_moments` on `f`.
pub fn ukf_predict<D: DynamicsModel + ?Sized>(
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
    let q = dynamics.noise_cov(k);
    if q.nrows() != s || q.ncols() != s {
        return Err(FilterError::Shape {
            expected: s,
            got: q.nrows(),
            context: "process noise covariance",
        });
    }

    let augmented = if s == 0 {
        state.clone()
    } else {
        let mut mean = DVector::zeros(d + s);
        mean.rows_mut(0, d).copy_from(&state.mean);
        GaussianState::new(mean, block_diag(&state.cov, &q))?
    };
    let noise_zero = DVector::zeros(0);
    let moments = transform_moments(
        |z| {
            if s == 0 {
                dynamics.transition(z, &noise_zero, k)
            } else {
                let x = z.rows(0, d).into_owned();
                let eps = z.rows(d, s).into_owned();
                dynamics.transition(&x, &eps, k)
            }
        },
        &augmented,
    )?;
    if moments.mean.len() != d {
        return Err(FilterError::Shape {
            expected: d,
            got: moments.mean.len(),
            context: "dynamics output",
        });
    }
    Ok(GaussianState {
        mean: moments.mean,
        cov: moments.cov,
    })
}

/// Cubature innovation statistics followed by the Kalman update.
pub fn ukf_update<M: MeasurementModel + ?Sized>(
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
    let moments = transform_moments(|x| meas.measure(x, k), state)?;
    if moments.mean.len() != m {
        return Err(FilterError::Shape {
            expected: m,
            got: moments.mean.len(),
            context: "measurement function output",
        });
    }
    let mut innovation_cov = moments.cov + meas.noise_cov(k);
    symmetrize(&mut innovation_cov);
    let stats = InnovationStats {
        innovation_mean: moments.mean,
        innovation_cov,
        cross_cov: moments.cross_cov,
    };
    let post = kalman_update_core(state, &stats, y)?;
    Ok((post, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::linalg::max_abs_asymmetry;

    struct Scalar<F: Fn(f64, f64) -> f64> {
        f: F,
        q: f64,
    }

    impl<F: Fn(f64, f64) -> f64> DynamicsModel for Scalar<F> {
        fn state_dim(&self) -> usize {
            1
        }
        fn noise_dim(&self) -> usize {
            1
        }
        fn transition(&self, x: &DVector<f64>, e: &DVector<f64>, _k: usize) -> DVector<f64> {
            DVector::from_element(1, (self.f)(x[0], e[0]))
        }
        fn noise_cov(&self, _k: usize) -> DMatrix<f64> {
            DMatrix::from_element(1, 1, self.q)
        }
    }

    fn scalar(m: f64, p: f64) -> GaussianState {
        GaussianState::new(DVector::from_element(1, m), DMatrix::from_element(1, 1, p)).unwrap()
    }

    #[test]
    fn identity_map_preserves_moments() {
        let s = GaussianState::new(
            DVector::from_vec(vec![1.0, -2.0, 0.5]),
            DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5]),
        )
        .unwrap();
        let t = transform_moments(|x| x.clone(), &s).unwrap();
        assert!((t.mean - &s.mean).amax() < 1e-10);
        assert!((&t.cov - &s.cov).amax() < 1e-10);
        assert!((&t.cross_cov - &s.cov).amax() < 1e-10);
    }

    #[test]
    fn affine_map_is_exact() {
        let s = GaussianState::new(
            DVector::from_vec(vec![0.4, 1.0]),
            DMatrix::from_row_slice(2, 2, &[1.5, 0.4, 0.4, 0.8]),
        )
        .unwrap();
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 0.0, 3.0]);
        let b = DVector::from_vec(vec![0.1, 0.2, 0.3]);
        let t = transform_moments(|x| &a * x + &b, &s).unwrap();
        assert!((t.mean - (&a * &s.mean + &b)).amax() < 1e-10);
        assert!((t.cov - &a * &s.cov * a.transpose()).amax() < 1e-10);
        assert!((t.cross_cov - &s.cov * a.transpose()).amax() < 1e-10);
        assert_eq!(max_abs_asymmetry(&s.cov), 0.0);
    }

    #[test]
    fn square_of_standard_normal() {
        // E[x²] = 1 is degree 2 and exact; Var[x²] = 2 needs degree 4 and the
        // two-point rule returns 0.
        let t = transform_moments(|x| x.map(|v| v * v), &scalar(0.0, 1.0)).unwrap();
        assert!((t.mean[0] - 1.0).abs() < 1e-14);
        assert!(t.cov[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn non_finite_output_carries_index() {
        let t = transform_moments(
            |x| x.map(|v| if v < 0.0 { f64::NAN } else { v }),
            &scalar(0.0, 1.0),
        );
        assert_eq!(t.unwrap_err(), FilterError::NonFinite { index: 1 });
    }

    #[test]
    fn inconsistent_output_shape() {
        let t = transform_moments(
            |x| {
                if x[0] > 0.0 {
                    DVector::zeros(1)
                } else {
                    DVector::zeros(2)
                }
            },
            &scalar(0.0, 1.0),
        );
        assert!(matches!(t, Err(FilterError::Shape { .. })));
    }

    #[test]
    fn additive_random_walk_prediction() {
        let dynamics = Scalar {
            f: |x, e| x + e,
            q: 0.3,
        };
        let p = ukf_predict(&scalar(1.2, 0.7), &dynamics, 0).unwrap();
        assert!((p.mean[0] - 1.2).abs() < 1e-10);
        assert!((p.cov[(0, 0)] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn scaled_linear_prediction() {
        // 0.5² · 1 + 0.1
        let dynamics = Scalar {
            f: |x, e| 0.5 * x + e,
            q: 0.1,
        };
        let p = ukf_predict(&scalar(2.0, 1.0), &dynamics, 0).unwrap();
        assert!((p.mean[0] - 1.0).abs() < 1e-12);
        assert!((p.cov[(0, 0)] - 0.35).abs() < 1e-12);
    }

    #[test]
    fn odd_dynamics_keep_zero_mean() {
        let dynamics = Scalar {
            f: |x, e| x.sin() + e,
            q: 0.05,
        };
        let p = ukf_predict(&scalar(0.0, 0.4), &dynamics, 0).unwrap();
        assert!(p.mean[0].abs() < 1e-15);
    }

    struct Identity1 {
        r: f64,
    }

    impl MeasurementModel for Identity1 {
        fn meas_dim(&self) -> usize {
            1
        }
        fn measure(&self, x: &DVector<f64>, _k: usize) -> DVector<f64> {
            x.clone()
        }
        fn noise_cov(&self, _k: usize) -> DMatrix<f64> {
            DMatrix::from_element(1, 1, self.r)
        }
    }

    #[test]
    fn zero_innovation_identity_update() {
        let (post, stats) = ukf_update(
            &scalar(2.0, 3.0),
            &Identity1 { r: 1.0 },
            &DVector::from_element(1, 2.0),
            0,
        )
        .unwrap();
        assert!((post.mean[0] - 2.0).abs() < 1e-12);
        assert!((post.cov[(0, 0)] - (3.0 - 9.0 / 4.0)).abs() < 1e-12);
        assert!((stats.innovation_cov[(0, 0)] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn measurement_length_checked() {
        let err = ukf_update(
            &scalar(0.0, 1.0),
            &Identity1 { r: 1.0 },
            &DVector::zeros(2),
            0,
        );
        assert!(matches!(err, Err(FilterError::Shape { .. })));
    }
}
