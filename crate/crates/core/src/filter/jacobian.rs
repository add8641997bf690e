use nalgebra::{DMatrix, DVector};

use crate::error::{FilterError, Result};

/// Per-coordinate central-difference steps `max(1e-6, 1e-6 |x_i|)`.
pub fn default_fd_steps(x: &DVector<f64>) -> DVector<f64> {
    x.map(|v| (1e-6 * v.abs()).max(1e-6))
}

/// Central-difference Jacobian with a single step `h` for every coordinate.
pub fn finite_difference_jacobian<G>(g: G, x: &DVector<f64>, h: f64) -> Result<DMatrix<f64>>
where
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    finite_difference_jacobian_steps(g, x, &DVector::from_element(x.len(), h))
}

/// Central-difference Jacobian, column `i` is `(g(x + h_i e_i) - g(x - h_i e_i)) / (2 h_i)`.
pub fn finite_difference_jacobian_steps<G>(
    g: G,
    x: &DVector<f64>,
    steps: &DVector<f64>,
) -> Result<DMatrix<f64>>
where
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    if steps.len() != x.len() {
        return Err(FilterError::Shape {
            expected: x.len(),
            got: steps.len(),
            context: "finite-difference steps",
        });
    }
    let mut columns: Option<DMatrix<f64>> = None;
    let mut probe = x.clone();
    for i in 0..x.len() {
        let h = steps[i];
        if !(h > 0.0 && h.is_finite()) {
            return Err(FilterError::Numeric(format!(
                "bad step {h} at coordinate {i}"
            )));
        }
        probe[i] = x[i] + h;
        let plus = g(&probe);
        probe[i] = x[i] - h;
        let minus = g(&probe);
        probe[i] = x[i];
        if plus.len() != minus.len() {
            return Err(FilterError::Shape {
                expected: plus.len(),
                got: minus.len(),
                context: "finite-difference output",
            });
        }
        let jac = columns.get_or_insert_with(|| DMatrix::zeros(plus.len(), x.len()));
        if jac.nrows() != plus.len() {
            return Err(FilterError::Shape {
                expected: jac.nrows(),
                got: plus.len(),
                context: "finite-difference output",
            });
        }
        let col = (plus - minus) / (2.0 * h);
        if col.iter().any(|v| !v.is_finite()) {
            return Err(FilterError::Numeric(format!(
                "non-finite finite difference in column {i}"
            )));
        }
        jac.set_column(i, &col);
    }
    columns.ok_or_else(|| FilterError::InvalidDimension("empty input".into()))
}
