use nalgebra::{DVector, Quaternion, Vector3, Vector4};

use super::quaternion::{omega_matrix, quat_from_wxyz, quat_to_wxyz, rotate_vector};
use crate::error::{FilterError, Result};

/// Offsets of the named blocks in the 19-dimensional VIO state.
pub mod layout {
    use std::ops::Range;

    pub const POSITION: Range<usize> = 0..3;
    pub const VELOCITY: Range<usize> = 3..6;
    pub const ORIENTATION: Range<usize> = 6..10;
    pub const ACCEL_SCALE: Range<usize> = 10..13;
    pub const ACCEL_BIAS: Range<usize> = 13..16;
    pub const GYRO_BIAS: Range<usize> = 16..19;
    pub const DIM: usize = 19;
    /// `(ε^a, ε^ω)`
    pub const NOISE_DIM: usize = 6;

    pub const BLOCKS: [(&str, Range<usize>); 6] = [
        ("position", POSITION),
        ("velocity", VELOCITY),
        ("orientation", ORIENTATION),
        ("accel_scale", ACCEL_SCALE),
        ("accel_bias", ACCEL_BIAS),
        ("gyro_bias", GYRO_BIAS),
    ];
}

/// Gravity in the world frame (m/s²), z up.
pub const DEFAULT_GRAVITY: [f64; 3] = [0.0, 0.0, 9.81];

/// One synchronized gyroscope/accelerometer pair and its integration interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    /// rad/s
    pub gyro: Vector3<f64>,
    /// m/s²
    pub accel: Vector3<f64>,
    /// s
    pub dt: f64,
}

impl ImuSample {
    pub fn new(gyro: Vector3<f64>, accel: Vector3<f64>, dt: f64) -> Result<Self> {
        let finite = gyro.iter().chain(accel.iter()).all(|v| v.is_finite());
        if !(dt > 0.0 && dt.is_finite()) || !finite {
            return Err(FilterError::InvalidConfig(format!(
                "IMU sample needs finite values and dt > 0 (dt = {dt})"
            )));
        }
        Ok(Self { gyro, accel, dt })
    }
}

/// Values of the VIO state blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VioValues {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub orientation: Quaternion<f64>,
    /// Diagonal of the multiplicative accelerometer correction `T^a`.
    pub accel_scale: Vector3<f64>,
    pub accel_bias: Vector3<f64>,
    pub gyro_bias: Vector3<f64>,
}

impl Default for VioValues {
    fn default() -> Self {
        Self {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            orientation: Quaternion::identity(),
            accel_scale: Vector3::repeat(1.0),
            accel_bias: Vector3::zeros(),
            gyro_bias: Vector3::zeros(),
        }
    }
}

impl VioValues {
    pub fn to_vector(&self) -> DVector<f64> {
        let mut x = DVector::zeros(layout::DIM);
        x.rows_mut(0, 3).copy_from(&self.position);
        x.rows_mut(3, 3).copy_from(&self.velocity);
        x.rows_mut(6, 4).copy_from(&quat_to_wxyz(&self.orientation));
        x.rows_mut(10, 3).copy_from(&self.accel_scale);
        x.rows_mut(13, 3).copy_from(&self.accel_bias);
        x.rows_mut(16, 3).copy_from(&self.gyro_bias);
        x
    }

    pub fn from_vector(x: &DVector<f64>) -> Self {
        assert_eq!(x.len(), layout::DIM, "VIO state must have 19 entries");
        let v3 = |o: usize| Vector3::new(x[o], x[o + 1], x[o + 2]);
        Self {
            position: v3(0),
            velocity: v3(3),
            orientation: quat_from_wxyz(&Vector4::new(x[6], x[7], x[8], x[9])),
            accel_scale: v3(10),
            accel_bias: v3(13),
            gyro_bias: v3(16),
        }
    }
}

/// `ã = T^a a - b^a`, `ω̃ = ω - b^ω` (elementwise, `T^a` diagonal).
pub fn bias_correct(
    sample: &ImuSample,
    accel_scale: &Vector3<f64>,
    accel_bias: &Vector3<f64>,
    gyro_bias: &Vector3<f64>,
) -> (Vector3<f64>, Vector3<f64>) {
    (
        accel_scale.component_mul(&sample.accel) - accel_bias,
        sample.gyro - gyro_bias,
    )
}

/// One mechanization step without renormalizing the quaternion.
///
/// The quaternion is propagated first because the velocity update rotates
/// the specific force with the new orientation; position uses the old
/// velocity. `Ω` is orthogonal, so the quaternion norm is carried over.
pub fn mechanize_unnormalized(
    state: &VioValues,
    sample: &ImuSample,
    accel_noise: &Vector3<f64>,
    gyro_noise: &Vector3<f64>,
    gravity: &Vector3<f64>,
) -> VioValues {
    let (acc, rate) = bias_correct(
        sample,
        &state.accel_scale,
        &state.accel_bias,
        &state.gyro_bias,
    );
    let dt = sample.dt;
    let q_prev = quat_to_wxyz(&state.orientation);
    let q = quat_from_wxyz(&(omega_matrix(&((rate + gyro_noise) * dt)) * q_prev));
    let specific_force = rotate_vector(&q, &(acc + accel_noise));
    VioValues {
        position: state.position + state.velocity * dt,
        velocity: state.velocity + (specific_force - gravity) * dt,
        orientation: q,
        ..*state
    }
}

/// One mechanization step followed by quaternion renormalization.
pub fn mechanize(
    state: &VioValues,
    sample: &ImuSample,
    accel_noise: &Vector3<f64>,
    gyro_noise: &Vector3<f64>,
    gravity: &Vector3<f64>,
) -> VioValues {
    let mut next = mechanize_unnormalized(state, sample, accel_noise, gyro_noise, gravity);
    next.orientation = next.orientation.normalize();
    next
}
