use nalgebra::{Matrix2, Vector2};

use crate::error::{FilterError, Result};

/// Planar camera pose: position in world coordinates and heading `θ`.
///
/// The optical axis is the camera-frame `y` axis, i.e. world direction
/// `R(θ) (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    pub position: Vector2<f64>,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            position: Vector2::new(x, y),
            theta,
        }
    }
}

/// 1D pinhole intrinsics in normalized image units.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct CameraIntrinsics2d {
    pub focal: f64,
    pub principal: f64,
    pub image_halfwidth: f64,
    /// Smallest camera-frame depth treated as in front of the camera (m).
    pub depth_epsilon: f64,
}

impl Default for CameraIntrinsics2d {
    fn default() -> Self {
        Self {
            focal: 1.5,
            principal: 0.0,
            image_halfwidth: 1.0,
            depth_epsilon: 1e-3,
        }
    }
}

impl CameraIntrinsics2d {
    pub fn validate(&self) -> Result<()> {
        let ok = self.focal > 0.0
            && self.image_halfwidth > 0.0
            && self.depth_epsilon > 0.0
            && self.principal.is_finite()
            && self.focal.is_finite()
            && self.image_halfwidth.is_finite();
        if ok {
            Ok(())
        } else {
            Err(FilterError::InvalidConfig(format!(
                "camera intrinsics need focal > 0, image_halfwidth > 0, depth_epsilon > 0: {self:?}"
            )))
        }
    }
}

/// Camera-to-world rotation.
pub fn rotation_matrix(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// `R(θ)ᵀ (l - p)`: lateral offset first, depth second.
pub fn camera_frame(pose: &Pose2, landmark: &Vector2<f64>) -> Vector2<f64> {
    rotation_matrix(pose.theta).transpose() * (landmark - pose.position)
}

/// `u = [[f, c], [0, 1]] · [Rᵀ | -Rᵀ p] · (l, 1)`, returns `u₁ / u₂`.
pub fn project_landmark(
    pose: &Pose2,
    landmark: &Vector2<f64>,
    intr: &CameraIntrinsics2d,
) -> Result<f64> {
    let pc = camera_frame(pose, landmark);
    if pc.y.abs() < intr.depth_epsilon {
        return Err(FilterError::DegenerateDepth { depth: pc.y });
    }
    Ok(intr.focal * pc.x / pc.y + intr.principal)
}

fn clamped_depth(depth: f64, eps: f64) -> (f64, bool) {
    if depth.abs() >= eps {
        (depth, false)
    } else if depth < 0.0 {
        (-eps, true)
    } else {
        (eps, true)
    }
}

/// Projection with the depth magnitude floored at `depth_epsilon`.
///
/// Total on the plane, so it can be evaluated at arbitrary sigma points,
/// including ones that land behind the camera.
pub fn project_landmark_clamped(
    pose: &Pose2,
    landmark: &Vector2<f64>,
    intr: &CameraIntrinsics2d,
) -> f64 {
    let pc = camera_frame(pose, landmark);
    let (depth, _) = clamped_depth(pc.y, intr.depth_epsilon);
    intr.focal * pc.x / depth + intr.principal
}

/// Derivatives of the (clamped) projection with respect to
/// `(p_x, p_y, θ, l_x, l_y)`.
pub fn projection_gradient(
    pose: &Pose2,
    landmark: &Vector2<f64>,
    intr: &CameraIntrinsics2d,
) -> [f64; 5] {
    let pc = camera_frame(pose, landmark);
    let (depth, clamped) = clamped_depth(pc.y, intr.depth_epsilon);
    let f = intr.focal;
    let d_lat = f / depth;
    let d_depth = if clamped {
        0.0
    } else {
        -f * pc.x / (depth * depth)
    };
    let (s, c) = pose.theta.sin_cos();
    // lateral = c dx + s dy, depth = -s dx + c dy, with d = l - p
    let d_lx = d_lat * c - d_depth * s;
    let d_ly = d_lat * s + d_depth * c;
    // ∂lateral/∂θ = depth, ∂depth/∂θ = -lateral
    let d_theta = d_lat * pc.y - d_depth * pc.x;
    [-d_lx, -d_ly, d_theta, d_lx, d_ly]
}

/// Indices of landmarks in front of the camera whose projection lies inside
/// the image, ascending.
pub fn visible_landmarks(
    pose: &Pose2,
    landmarks: &[Vector2<f64>],
    intr: &CameraIntrinsics2d,
) -> Vec<usize> {
    landmarks
        .iter()
        .enumerate()
        .filter(|(_, l)| {
            let pc = camera_frame(pose, l);
            pc.y >= intr.depth_epsilon
                && (intr.focal * pc.x / pc.y + intr.principal).abs() <= intr.image_halfwidth
        })
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn intr() -> CameraIntrinsics2d {
        CameraIntrinsics2d::default()
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation_matrix(0.0), Matrix2::identity());
        let q = rotation_matrix(FRAC_PI_2);
        assert!((q - Matrix2::new(0.0, -1.0, 1.0, 0.0)).amax() < 1e-15);
        for t in [-3.0, -0.3, 0.7, 2.5, 11.0] {
            let r = rotation_matrix(t);
            assert!((r.transpose() * r - Matrix2::identity()).amax() < 1e-14);
            assert!((r.determinant() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_examples() {
        let origin = Pose2::new(0.0, 0.0, 0.0);
        assert_eq!(
            project_landmark(&origin, &Vector2::new(0.0, 2.0), &intr()).unwrap(),
            0.0
        );
        assert_eq!(
            project_landmark(&origin, &Vector2::new(1.0, 1.0), &intr()).unwrap(),
            1.5
        );
        let shifted = Pose2::new(1.0, 0.0, 0.0);
        let y = project_landmark(&shifted, &Vector2::new(2.0, 2.0), &intr()).unwrap();
        assert!((y - 0.75).abs() < 1e-15);
    }

    #[test]
    fn degenerate_depth_is_an_error() {
        let origin = Pose2::new(0.0, 0.0, 0.0);
        let err = project_landmark(&origin, &Vector2::new(1.0, 1e-4), &intr()).unwrap_err();
        assert!(matches!(err, FilterError::DegenerateDepth { .. }));
        // the clamped form stays finite
        assert!(project_landmark_clamped(&origin, &Vector2::new(1.0, 0.0), &intr()).is_finite());
    }

    #[test]
    fn wrap_invariance() {
        let l = Vector2::new(2.0, 3.0);
        for t in [0.1, 1.4, -2.2] {
            let a = project_landmark(&Pose2::new(0.3, -0.2, t), &l, &intr()).unwrap();
            let b = project_landmark(&Pose2::new(0.3, -0.2, t + 2.0 * PI), &l, &intr()).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn on_axis_position_derivative() {
        let depth = 50.0;
        let g = projection_gradient(
            &Pose2::new(0.0, 0.0, 0.0),
            &Vector2::new(0.0, depth),
            &intr(),
        );
        assert!((g[0] + 1.5 / depth).abs() < 1e-15);
    }

    #[test]
    fn visibility_rules() {
        let origin = Pose2::new(0.0, 0.0, 0.0);
        let landmarks = [
            Vector2::new(0.0, -2.0), // behind
            Vector2::new(0.0, 2.0),  // on axis
            Vector2::new(0.8, 1.0),  // projects to 1.2
            Vector2::new(0.5, 1.0),  // projects to 0.75
        ];
        assert_eq!(visible_landmarks(&origin, &landmarks, &intr()), vec![1, 3]);
        assert!(visible_landmarks(&origin, &[], &intr()).is_empty());
    }

    #[test]
    fn intrinsics_validation() {
        assert!(intr().validate().is_ok());
        let bad = CameraIntrinsics2d {
            focal: 0.0,
            ..intr()
        };
        assert!(bad.validate().is_err());
    }
}
