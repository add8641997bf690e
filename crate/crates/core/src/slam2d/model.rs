use nalgebra::{DMatrix, DVector, RowDVector, Vector2, Vector3};

use super::camera::{
    camera_frame, project_landmark_clamped, projection_gradient, CameraIntrinsics2d, Pose2,
};
use super::{Slam2dLayout, POSE_DIM};
use crate::error::{FilterError, Result};
use crate::filter::{DynamicsModel, GaussianState, MeasurementModel};

/// Landmark prior standard deviation (m), independent of how the initial
/// guesses were corrupted.
pub const DEFAULT_LANDMARK_PRIOR_STD: f64 = 4.0;

/// Pose prior variances for `(p_x, p_y, θ)`; anchors the gauge.
pub const DEFAULT_POSE_PRIOR_VAR: [f64; 3] = [1e-4, 1e-4, 1e-6];

/// World-frame odometry increment `(Δp, Δθ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdometryControl {
    pub delta_position: Vector2<f64>,
    pub delta_theta: f64,
}

impl OdometryControl {
    pub fn new(dx: f64, dy: f64, dtheta: f64) -> Self {
        Self {
            delta_position: Vector2::new(dx, dy),
            delta_theta: dtheta,
        }
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(
            self.delta_position.x,
            self.delta_position.y,
            self.delta_theta,
        )
    }
}

/// Analytic row of `∂h_i / ∂x` at `x`. Nonzero only in the pose block and the
/// block of landmark `i`.
pub fn measurement_jacobian(
    x: &DVector<f64>,
    layout: &Slam2dLayout,
    i: usize,
    intr: &CameraIntrinsics2d,
) -> Result<RowDVector<f64>> {
    let pose = layout.pose(x);
    let landmark = layout.landmark(x, i);
    let depth = camera_frame(&pose, &landmark).y;
    if depth.abs() < intr.depth_epsilon {
        return Err(FilterError::DegenerateDepth { depth });
    }
    Ok(jacobian_row(x, layout, i, intr))
}

fn jacobian_row(
    x: &DVector<f64>,
    layout: &Slam2dLayout,
    i: usize,
    intr: &CameraIntrinsics2d,
) -> RowDVector<f64> {
    let g = projection_gradient(&layout.pose(x), &layout.landmark(x, i), intr);
    let mut row = RowDVector::zeros(layout.dim());
    row[0] = g[0];
    row[1] = g[1];
    row[2] = g[2];
    let o = layout.landmark_offset(i);
    row[o] = g[3];
    row[o + 1] = g[4];
    row
}

/// Stacked projections of a set of visible landmarks with `R = σ_r² I`.
#[derive(Debug, Clone)]
pub struct StackedMeasurement {
    layout: Slam2dLayout,
    visible: Vec<usize>,
    intr: CameraIntrinsics2d,
    sigma_r: f64,
}

impl StackedMeasurement {
    pub fn visible(&self) -> &[usize] {
        &self.visible
    }
}

pub fn stacked_measurement_model(
    layout: Slam2dLayout,
    visible: &[usize],
    intr: CameraIntrinsics2d,
    sigma_r: f64,
) -> Result<StackedMeasurement> {
    if visible.is_empty() {
        return Err(FilterError::NoMeasurement);
    }
    if let Some(&bad) = visible.iter().find(|&&i| i >= layout.n_landmarks()) {
        return Err(FilterError::InvalidDimension(format!(
            "landmark index {bad} out of range"
        )));
    }
    Ok(StackedMeasurement {
        layout,
        visible: visible.to_vec(),
        intr,
        sigma_r,
    })
}

impl MeasurementModel for StackedMeasurement {
    fn meas_dim(&self) -> usize {
        self.visible.len()
    }

    fn measure(&self, x: &DVector<f64>, _k: usize) -> DVector<f64> {
        let pose = self.layout.pose(x);
        DVector::from_iterator(
            self.visible.len(),
            self.visible
                .iter()
                .map(|&i| project_landmark_clamped(&pose, &self.layout.landmark(x, i), &self.intr)),
        )
    }

    fn noise_cov(&self, _k: usize) -> DMatrix<f64> {
        DMatrix::identity(self.visible.len(), self.visible.len()) * self.sigma_r.powi(2)
    }

    fn jacobian(&self, x: &DVector<f64>, _k: usize) -> Option<DMatrix<f64>> {
        let mut h = DMatrix::zeros(self.visible.len(), self.layout.dim());
        for (r, &i) in self.visible.iter().enumerate() {
            h.set_row(r, &jacobian_row(x, &self.layout, i, &self.intr));
        }
        Some(h)
    }
}

/// Pose random walk driven by odometry; landmarks are static.
#[derive(Debug, Clone)]
pub struct SlamDynamics {
    layout: Slam2dLayout,
    control: OdometryControl,
    q_pose: DMatrix<f64>,
}

pub fn slam_dynamics_model(
    layout: Slam2dLayout,
    control: OdometryControl,
    q_pose: DMatrix<f64>,
) -> Result<SlamDynamics> {
    if q_pose.nrows() != POSE_DIM || q_pose.ncols() != POSE_DIM {
        return Err(FilterError::Shape {
            expected: POSE_DIM,
            got: q_pose.nrows(),
            context: "pose process noise",
        });
    }
    Ok(SlamDynamics {
        layout,
        control,
        q_pose,
    })
}

impl DynamicsModel for SlamDynamics {
    fn state_dim(&self) -> usize {
        self.layout.dim()
    }

    fn noise_dim(&self) -> usize {
        POSE_DIM
    }

    fn transition(&self, x: &DVector<f64>, noise: &DVector<f64>, _k: usize) -> DVector<f64> {
        let mut out = x.clone();
        let u = self.control.as_vector();
        for c in 0..POSE_DIM {
            out[c] += u[c] + noise[c];
        }
        out
    }

    fn noise_cov(&self, _k: usize) -> DMatrix<f64> {
        self.q_pose.clone()
    }

    fn jacobians(&self, _x: &DVector<f64>, _k: usize) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let d = self.layout.dim();
        let mut fe = DMatrix::zeros(d, POSE_DIM);
        for c in 0..POSE_DIM {
            fe[(c, c)] = 1.0;
        }
        Some((DMatrix::identity(d, d), fe))
    }
}

/// Landmark means set to the guesses with independent `prior_std² I₂` blocks.
pub fn initialize_landmarks(
    guesses: &[Vector2<f64>],
    prior_std: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = 2 * guesses.len();
    let mean = DVector::from_iterator(n, guesses.iter().flat_map(|g| [g.x, g.y]));
    let cov = DMatrix::identity(n, n) * prior_std.powi(2);
    (mean, cov)
}

/// Full SLAM prior: pose block `N(pose, diag(pose_var))`, landmarks from
/// [`initialize_landmarks`], zero cross-covariance.
pub fn initial_state(
    pose: &Pose2,
    pose_var: [f64; 3],
    guesses: &[Vector2<f64>],
    prior_std: f64,
) -> Result<GaussianState> {
    let layout = Slam2dLayout::new(guesses.len());
    let (lm_mean, lm_cov) = initialize_landmarks(guesses, prior_std);
    let d = layout.dim();
    let mut mean = DVector::zeros(d);
    mean[0] = pose.position.x;
    mean[1] = pose.position.y;
    mean[2] = pose.theta;
    mean.rows_mut(POSE_DIM, d - POSE_DIM).copy_from(&lm_mean);
    let mut cov = DMatrix::zeros(d, d);
    for c in 0..POSE_DIM {
        cov[(c, c)] = pose_var[c];
    }
    cov.view_mut((POSE_DIM, POSE_DIM), (d - POSE_DIM, d - POSE_DIM))
        .copy_from(&lm_cov);
    GaussianState::new(mean, cov)
}
