//! Quaternion helpers, scalar-first `(w, x, y, z)` convention.
//!
//! All arithmetic runs in `f64`; callers truncate to `f32` for storage.

/// Identity rotation.
pub const IDENTITY: [f64; 4] = [1.0, 0.0, 0.0, 0.0];

/// Raw quaternions with a norm below this normalize to the identity.
pub const DEGENERATE_NORM: f64 = 1e-8;

pub fn norm(q: [f64; 4]) -> f64 {
    (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt()
}

/// Normalize, mapping degenerate (near-zero) quaternions to the identity.
pub fn normalize(q: [f64; 4]) -> [f64; 4] {
    let n = norm(q);
    if n < DEGENERATE_NORM {
        return IDENTITY;
    }
    [q[0] / n, q[1] / n, q[2] / n, q[3] / n]
}

/// Hamilton product `a * b` (applies `b` first, then `a`, for column vectors).
pub fn multiply(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    let [aw, ax, ay, az] = a;
    let [bw, bx, by, bz] = b;
    [
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ]
}

/// Conjugate; equals the inverse for unit quaternions.
pub fn conjugate(q: [f64; 4]) -> [f64; 4] {
    [q[0], -q[1], -q[2], -q[3]]
}

pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> [f64; 4] {
    let len = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if len < DEGENERATE_NORM {
        return IDENTITY;
    }
    let half = 0.5 * angle;
    let s = half.sin() / len;
    [half.cos(), axis[0] * s, axis[1] * s, axis[2] * s]
}

/// Rotation angle in radians of a unit quaternion, in [0, pi].
pub fn rotation_angle(q: [f64; 4]) -> f64 {
    let v = (q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    2.0 * v.atan2(q[0].abs())
}

/// Row-major 3x3 rotation matrix of a unit quaternion.
pub fn to_rotation_matrix(q: [f64; 4]) -> [[f64; 3]; 3] {
    let [w, x, y, z] = q;
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

pub fn rotate_vector(q: [f64; 4], v: [f64; 3]) -> [f64; 3] {
    let m = to_rotation_matrix(q);
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Exact identity test on raw `f32` storage; used for no-op fast paths.
pub fn is_identity_raw(q: [f32; 4]) -> bool {
    q == [1.0, 0.0, 0.0, 0.0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn multiply_composes_rotations() {
        // 90 deg about z, twice, is 180 deg about z.
        let q90 = from_axis_angle([0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2);
        let q180 = multiply(q90, q90);
        let expect = from_axis_angle([0.0, 0.0, 1.0], std::f64::consts::PI);
        for i in 0..4 {
            assert_relative_eq!(q180[i], expect[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn normalize_degenerate_is_identity() {
        assert_eq!(normalize([0.0; 4]), IDENTITY);
        assert_eq!(normalize([1e-12, 0.0, 0.0, 0.0]), IDENTITY);
    }

    #[test]
    fn rotation_matrix_matches_axis_angle() {
        let q = from_axis_angle([0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2);
        let r = to_rotation_matrix(q);
        // Rotating +x by 90 deg about z gives +y.
        let v = rotate_vector(q, [1.0, 0.0, 0.0]);
        assert_relative_eq!(v[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(v[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(r[0][0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn angle_of_identity_is_zero() {
        assert_eq!(rotation_angle(IDENTITY), 0.0);
        let q = from_axis_angle([1.0, 0.0, 0.0], 0.3);
        assert_relative_eq!(rotation_angle(q), 0.3, epsilon = 1e-12);
    }
}
