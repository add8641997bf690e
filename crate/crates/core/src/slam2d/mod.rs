//! Planar visual SLAM: joint pose and landmark state, 1D pinhole
//! measurements and odometry dynamics.

mod camera;
mod model;

pub use camera::{
    camera_frame, project_landmark, project_landmark_clamped, projection_gradient, rotation_matrix,
    visible_landmarks, CameraIntrinsics2d, Pose2,
};
pub use model::{
    initial_state, initialize_landmarks, measurement_jacobian, slam_dynamics_model,
    stacked_measurement_model, OdometryControl, SlamDynamics, StackedMeasurement,
    DEFAULT_LANDMARK_PRIOR_STD, DEFAULT_POSE_PRIOR_VAR,
};

use nalgebra::{DVector, Vector2};

pub const POSE_DIM: usize = 3;
pub const LANDMARK_DIM: usize = 2;

/// Named block that owns a state index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlamBlock {
    /// 0 = p_x, 1 = p_y, 2 = θ
    Pose(usize),
    /// (landmark, 0 = x | 1 = y)
    Landmark(usize, usize),
}

/// Layout of `(p_x, p_y, θ, x_1, y_1, ..., x_p, y_p)` in a flat state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slam2dLayout {
    n_landmarks: usize,
}

impl Slam2dLayout {
    pub fn new(n_landmarks: usize) -> Self {
        Self { n_landmarks }
    }

    pub fn n_landmarks(&self) -> usize {
        self.n_landmarks
    }

    pub fn dim(&self) -> usize {
        POSE_DIM + LANDMARK_DIM * self.n_landmarks
    }

    pub fn landmark_offset(&self, i: usize) -> usize {
        debug_assert!(i < self.n_landmarks);
        POSE_DIM + LANDMARK_DIM * i
    }

    pub fn block_of(&self, index: usize) -> Option<SlamBlock> {
        if index < POSE_DIM {
            Some(SlamBlock::Pose(index))
        } else if index < self.dim() {
            let r = index - POSE_DIM;
            Some(SlamBlock::Landmark(r / LANDMARK_DIM, r % LANDMARK_DIM))
        } else {
            None
        }
    }

    pub fn pose(&self, x: &DVector<f64>) -> Pose2 {
        Pose2::new(x[0], x[1], x[2])
    }

    pub fn landmark(&self, x: &DVector<f64>, i: usize) -> Vector2<f64> {
        let o = self.landmark_offset(i);
        Vector2::new(x[o], x[o + 1])
    }

    pub fn landmarks(&self, x: &DVector<f64>) -> Vec<Vector2<f64>> {
        (0..self.n_landmarks).map(|i| self.landmark(x, i)).collect()
    }

    /// Flat state vector from a pose and landmark positions.
    pub fn assemble(&self, pose: &Pose2, landmarks: &[Vector2<f64>]) -> DVector<f64> {
        assert_eq!(landmarks.len(), self.n_landmarks);
        let mut x = DVector::zeros(self.dim());
        x[0] = pose.position.x;
        x[1] = pose.position.y;
        x[2] = pose.theta;
        for (i, l) in landmarks.iter().enumerate() {
            let o = self.landmark_offset(i);
            x[o] = l.x;
            x[o + 1] = l.y;
        }
        x
    }
}
