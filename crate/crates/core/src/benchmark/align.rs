//! Similarity (Umeyama/Procrustes) alignment and normalized RMSE.

use nalgebra::{Matrix2, Vector2};

use crate::error::{FilterError, Result};

/// `x ↦ scale · rotation · x + translation`, proper rotation only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity2 {
    pub scale: f64,
    pub rotation: Matrix2<f64>,
    pub translation: Vector2<f64>,
}

impl Similarity2 {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: Matrix2::identity(),
            translation: Vector2::zeros(),
        }
    }

    pub fn apply(&self, p: &Vector2<f64>) -> Vector2<f64> {
        self.rotation * p * self.scale + self.translation
    }

    pub fn apply_all(&self, points: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
        points.iter().map(|p| self.apply(p)).collect()
    }
}

fn centroid(points: &[Vector2<f64>]) -> Vector2<f64> {
    points.iter().sum::<Vector2<f64>>() / points.len() as f64
}

/// Similarity transform minimizing `Σ ‖s R est_i + t - gt_i‖²`.
pub fn procrustes_align(est: &[Vector2<f64>], gt: &[Vector2<f64>]) -> Result<Similarity2> {
    if est.len() != gt.len() {
        return Err(FilterError::DegenerateAlignment(format!(
            "{} estimated points vs {} reference points",
            est.len(),
            gt.len()
        )));
    }
    if est.len() < 2 {
        return Err(FilterError::DegenerateAlignment(
            "need at least two point pairs".into(),
        ));
    }
    if est
        .iter()
        .chain(gt)
        .any(|p| !p.iter().all(|v| v.is_finite()))
    {
        return Err(FilterError::DegenerateAlignment("non-finite point".into()));
    }
    let n = est.len() as f64;
    let mu_est = centroid(est);
    let mu_gt = centroid(gt);
    let mut cross = Matrix2::zeros();
    let mut var_est = 0.0;
    let mut var_gt = 0.0;
    for (e, g) in est.iter().zip(gt) {
        let de = e - mu_est;
        let dg = g - mu_gt;
        cross += dg * de.transpose();
        var_est += de.norm_squared();
        var_gt += dg.norm_squared();
    }
    cross /= n;
    var_est /= n;
    var_gt /= n;
    let scale_ref = mu_est.norm().max(mu_gt.norm()).max(1.0);
    if var_est <= 1e-24 * scale_ref * scale_ref || var_gt <= 1e-24 * scale_ref * scale_ref {
        return Err(FilterError::DegenerateAlignment(
            "all points coincide".into(),
        ));
    }

    let svd = cross.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let singular = svd.singular_values;
    let mut signs = Matrix2::identity();
    if (u * v_t).determinant() < 0.0 {
        // flip the direction of the smallest singular value
        let weakest = if singular[0] < singular[1] { 0 } else { 1 };
        signs[(weakest, weakest)] = -1.0;
    }
    let rotation = u * signs * v_t;
    let scale = (singular[0] * signs[(0, 0)] + singular[1] * signs[(1, 1)]) / var_est;
    let translation = mu_gt - rotation * mu_est * scale;
    Ok(Similarity2 {
        scale,
        rotation,
        translation,
    })
}

/// Largest pairwise distance in a point set.
pub fn scene_diameter(points: &[Vector2<f64>]) -> f64 {
    let mut best = 0.0_f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}

/// `sqrt(mean ‖a_i - g_i‖²) / normalizer`.
pub fn rmse_normalized(
    aligned: &[Vector2<f64>],
    gt: &[Vector2<f64>],
    normalizer: f64,
) -> Result<f64> {
    if aligned.len() != gt.len() || aligned.is_empty() {
        return Err(FilterError::InvalidDimension(format!(
            "rmse over {} vs {} points",
            aligned.len(),
            gt.len()
        )));
    }
    if !(normalizer > 0.0 && normalizer.is_finite()) {
        return Err(FilterError::InvalidConfig(format!(
            "rmse normalizer must be positive, got {normalizer}"
        )));
    }
    let sum: f64 = aligned
        .iter()
        .zip(gt)
        .map(|(a, g)| (a - g).norm_squared())
        .sum();
    Ok((sum / aligned.len() as f64).sqrt() / normalizer)
}
