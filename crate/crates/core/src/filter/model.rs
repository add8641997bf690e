use nalgebra::{DMatrix, DVector};

/// State transition `x_k = f_k(x_{k-1}, ε_k)` with `ε_k ~ N(0, Q_k)`.
pub trait DynamicsModel {
    fn state_dim(&self) -> usize;

    fn noise_dim(&self) -> usize;

    fn transition(&self, x: &DVector<f64>, noise: &DVector<f64>, k: usize) -> DVector<f64>;

    fn noise_cov(&self, k: usize) -> DMatrix<f64>;

    /// Analytic `(F_x, F_ε)` at `(x, 0)`. `None` selects finite differences.
    fn jacobians(&self, _x: &DVector<f64>, _k: usize) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        None
    }
}

/// Measurement `y_k = h_k(x_k) + r_k` with `r_k ~ N(0, R_k)`.
pub trait MeasurementModel {
    fn meas_dim(&self) -> usize;

    fn measure(&self, x: &DVector<f64>, k: usize) -> DVector<f64>;

    fn noise_cov(&self, k: usize) -> DMatrix<f64>;

    /// Analytic `H_x`. `None` selects finite differences.
    fn jacobian(&self, _x: &DVector<f64>, _k: usize) -> Option<DMatrix<f64>> {
        None
    }
}
