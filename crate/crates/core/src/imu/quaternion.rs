use nalgebra::{Matrix4, Quaternion, Vector3, Vector4};

/// Below this rotation angle `Ω` uses its Taylor series.
const SERIES_THRESHOLD: f64 = 1e-8;

/// `(w, x, y, z)` ordering used in the state vector.
pub fn quat_to_wxyz(q: &Quaternion<f64>) -> Vector4<f64> {
    Vector4::new(q.w, q.i, q.j, q.k)
}

pub fn quat_from_wxyz(v: &Vector4<f64>) -> Quaternion<f64> {
    Quaternion::new(v[0], v[1], v[2], v[3])
}

/// Quaternion-increment matrix for a body-frame rotation vector `φ`.
///
/// `Ω[φ] q = q ⊗ exp(φ / 2)` on `(w, x, y, z)` coordinates:
/// `Ω = cos(|φ|/2) I + sin(|φ|/2)/|φ| [Φ]`, with `[Φ]` the right-multiplication
/// matrix of the pure quaternion `(0, φ)`. Orthogonal for every `φ`.
pub fn omega_matrix(phi: &Vector3<f64>) -> Matrix4<f64> {
    let angle = phi.norm();
    let (a, b) = if angle < SERIES_THRESHOLD {
        let a2 = angle * angle;
        (1.0 - a2 / 8.0, 0.5 - a2 / 48.0)
    } else {
        let half = 0.5 * angle;
        (half.cos(), half.sin() / angle)
    };
    let (x, y, z) = (phi.x, phi.y, phi.z);
    #[rustfmt::skip]
    let skew = Matrix4::new(
        0.0, -x,  -y,  -z,
        x,   0.0,  z,  -y,
        y,  -z,   0.0,  x,
        z,   y,   -x,  0.0,
    );
    Matrix4::identity() * a + skew * b
}

/// `q v q⋆ / |q|²`, i.e. the rotation represented by `q` applied to `v`.
pub fn rotate_vector(q: &Quaternion<f64>, v: &Vector3<f64>) -> Vector3<f64> {
    let pure = Quaternion::from_imag(*v);
    let out = q * pure * q.conjugate();
    out.imag() / q.norm_squared()
}

/// Unit quaternion `exp(φ / 2)` for a rotation vector `φ`.
pub fn quat_exp(phi: &Vector3<f64>) -> Quaternion<f64> {
    let angle = phi.norm();
    if angle < SERIES_THRESHOLD {
        return Quaternion::from_parts(1.0, phi * 0.5);
    }
    let half = 0.5 * angle;
    Quaternion::from_parts(half.cos(), phi * (half.sin() / angle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn zero_increment_is_identity() {
        assert_eq!(omega_matrix(&Vector3::zeros()), Matrix4::identity());
    }

    #[test]
    fn omega_is_orthogonal() {
        for phi in [
            Vector3::new(0.3, -0.2, 1.1),
            Vector3::new(1e-9, 0.0, -2e-9),
            Vector3::new(PI, 0.0, 0.0),
            Vector3::new(-4.0, 2.0, 7.0),
        ] {
            let o = omega_matrix(&phi);
            assert!((o.transpose() * o - Matrix4::identity()).amax() < 1e-12);
        }
    }

    #[test]
    fn omega_matches_right_multiplication() {
        let q = Quaternion::new(0.3, -0.5, 0.7, 0.4).normalize();
        let phi = Vector3::new(0.2, -0.4, 0.9);
        let via_matrix = omega_matrix(&phi) * quat_to_wxyz(&q);
        let via_product = quat_to_wxyz(&(q * quat_exp(&phi)));
        assert!((via_matrix - via_product).amax() < 1e-14);
    }

    #[test]
    fn half_turn_roll() {
        let q = quat_from_wxyz(
            &(omega_matrix(&Vector3::new(PI, 0.0, 0.0)) * Vector4::new(1.0, 0.0, 0.0, 0.0)),
        );
        let v = rotate_vector(&q, &Vector3::new(0.0, 0.0, 1.0));
        assert!((v - Vector3::new(0.0, 0.0, -1.0)).amax() < 1e-12);
    }

    #[test]
    fn rotate_examples() {
        let v = Vector3::new(0.3, -1.0, 2.0);
        assert_eq!(rotate_vector(&Quaternion::identity(), &v), v);
        let yaw = quat_exp(&Vector3::new(0.0, 0.0, FRAC_PI_2));
        let r = rotate_vector(&yaw, &Vector3::new(1.0, 0.0, 0.0));
        assert!((r - Vector3::new(0.0, 1.0, 0.0)).amax() < 1e-12);
        let q = Quaternion::new(0.1, 0.9, -0.3, 0.2).normalize();
        assert!((rotate_vector(&q, &v).norm() - v.norm()).abs() < 1e-12);
    }
}
