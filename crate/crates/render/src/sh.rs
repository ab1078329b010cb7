//! Real spherical harmonics for view-dependent color, degrees 0..=3.
//!
//! Basis ordering and signs follow the 3DGS convention, so coefficients
//! imported from standard splat PLY files evaluate identically.

pub const MAX_SH_DEGREE: u32 = 3;

const C0: f64 = 0.282_094_791_773_878_14;
const C1: f64 = 0.488_602_511_902_919_9;
const C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Basis values for a unit direction; entries past the requested degree are zero.
pub fn sh_basis(degree: u32, dir: [f64; 3]) -> [f64; 16] {
    let [x, y, z] = dir;
    let mut b = [0.0; 16];
    b[0] = C0;
    if degree >= 1 {
        b[1] = -C1 * y;
        b[2] = C1 * z;
        b[3] = -C1 * x;
    }
    if degree >= 2 {
        let (xx, yy, zz) = (x * x, y * y, z * z);
        b[4] = C2[0] * x * y;
        b[5] = C2[1] * y * z;
        b[6] = C2[2] * (2.0 * zz - xx - yy);
        b[7] = C2[3] * x * z;
        b[8] = C2[4] * (xx - yy);
    }
    if degree >= 3 {
        let (xx, yy, zz) = (x * x, y * y, z * z);
        b[9] = C3[0] * y * (3.0 * xx - yy);
        b[10] = C3[1] * x * y * z;
        b[11] = C3[2] * y * (4.0 * zz - xx - yy);
        b[12] = C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
        b[13] = C3[4] * x * (4.0 * zz - xx - yy);
        b[14] = C3[5] * z * (xx - yy);
        b[15] = C3[6] * x * (xx - 3.0 * yy);
    }
    b
}

/// d(basis k)/d(direction component) for the backward pass.
pub fn sh_basis_grad(degree: u32, dir: [f64; 3]) -> [[f64; 3]; 16] {
    let [x, y, z] = dir;
    let mut g = [[0.0; 3]; 16];
    if degree >= 1 {
        g[1] = [0.0, -C1, 0.0];
        g[2] = [0.0, 0.0, C1];
        g[3] = [-C1, 0.0, 0.0];
    }
    if degree >= 2 {
        g[4] = [C2[0] * y, C2[0] * x, 0.0];
        g[5] = [0.0, C2[1] * z, C2[1] * y];
        g[6] = [-2.0 * C2[2] * x, -2.0 * C2[2] * y, 4.0 * C2[2] * z];
        g[7] = [C2[3] * z, 0.0, C2[3] * x];
        g[8] = [2.0 * C2[4] * x, -2.0 * C2[4] * y, 0.0];
    }
    if degree >= 3 {
        let (xx, yy, zz) = (x * x, y * y, z * z);
        g[9] = [C3[0] * 6.0 * x * y, C3[0] * (3.0 * xx - 3.0 * yy), 0.0];
        g[10] = [C3[1] * y * z, C3[1] * x * z, C3[1] * x * y];
        g[11] = [
            -2.0 * C3[2] * x * y,
            C3[2] * (4.0 * zz - xx - 3.0 * yy),
            8.0 * C3[2] * y * z,
        ];
        g[12] = [
            -6.0 * C3[3] * x * z,
            -6.0 * C3[3] * y * z,
            C3[3] * (6.0 * zz - 3.0 * xx - 3.0 * yy),
        ];
        g[13] = [
            C3[4] * (4.0 * zz - 3.0 * xx - yy),
            -2.0 * C3[4] * x * y,
            8.0 * C3[4] * x * z,
        ];
        g[14] = [2.0 * C3[5] * x * z, -2.0 * C3[5] * y * z, C3[5] * (xx - yy)];
        g[15] = [C3[6] * (3.0 * xx - 3.0 * yy), -6.0 * C3[6] * x * y, 0.0];
    }
    g
}

/// View-dependent color: `clamp(0.5 + sum_k basis_k * sh[ch][k], 0, 1)`.
///
/// `sh` is channel-major (`3 * (degree+1)^2` values), `view_dir` unit length.
pub fn evaluate_sh(sh: &[f32], degree: u32, view_dir: [f64; 3]) -> [f64; 3] {
    let k = ((degree + 1) * (degree + 1)) as usize;
    debug_assert_eq!(sh.len(), 3 * k);
    let basis = sh_basis(degree, view_dir);
    let mut rgb = [0.0f64; 3];
    for (ch, out) in rgb.iter_mut().enumerate() {
        let mut acc = 0.5;
        for (j, b) in basis[..k].iter().enumerate() {
            acc += b * sh[ch * k + j] as f64;
        }
        *out = acc.clamp(0.0, 1.0);
    }
    rgb
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn norm3(v: [f64; 3]) -> [f64; 3] {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    }

    #[test]
    fn dc_only_is_direction_independent() {
        let sh = vec![0.4f32, -0.2, 0.9];
        let a = evaluate_sh(&sh, 0, [1.0, 0.0, 0.0]);
        let b = evaluate_sh(&sh, 0, norm3([-0.3, 0.8, 0.5]));
        for ch in 0..3 {
            assert_relative_eq!(a[ch], b[ch], epsilon = 1e-12);
            assert_relative_eq!(a[ch], (0.5 + C0 * sh[ch] as f64).clamp(0.0, 1.0), epsilon = 1e-12);
        }
        // Antipodal directions agree at degree 0.
        let c = evaluate_sh(&sh, 0, [0.0, 0.0, 1.0]);
        let d = evaluate_sh(&sh, 0, [0.0, 0.0, -1.0]);
        assert_eq!(c, d);
    }

    #[test]
    fn single_band1_coefficient_varies_linearly() {
        // Only the z-linear basis entry set on the red channel.
        let mut sh = vec![0.0f32; 12];
        sh[2] = 0.5; // channel R, coefficient 2 => C1 * z
        for &z in &[-0.6f64, -0.1, 0.2, 0.7] {
            let dir = norm3([0.3, -0.4, 0.0]);
            let tilted = norm3([dir[0] * (1.0 - z * z).sqrt(), dir[1] * (1.0 - z * z).sqrt(), z]);
            let rgb = evaluate_sh(&sh, 1, tilted);
            assert_relative_eq!(rgb[0], 0.5 + C1 * tilted[2] * 0.5, epsilon = 1e-12);
            assert_relative_eq!(rgb[1], 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn output_is_clamped() {
        let sh = vec![10.0f32, -10.0, 0.0];
        let rgb = evaluate_sh(&sh, 0, [0.0, 0.0, 1.0]);
        assert_eq!(rgb[0], 1.0);
        assert_eq!(rgb[1], 0.0);
        assert_eq!(rgb[2], 0.5);
    }

    #[test]
    fn basis_gradients_match_finite_differences() {
        let dir = norm3([0.35, -0.52, 0.78]);
        let h = 1e-6;
        let grads = sh_basis_grad(3, dir);
        for axis in 0..3 {
            let mut lo = dir;
            let mut hi = dir;
            lo[axis] -= h;
            hi[axis] += h;
            // Gradients are with respect to the raw (unnormalized) components.
            let blo = sh_basis(3, lo);
            let bhi = sh_basis(3, hi);
            for k in 0..16 {
                let fd = (bhi[k] - blo[k]) / (2.0 * h);
                assert_relative_eq!(grads[k][axis], fd, epsilon = 1e-5, max_relative = 1e-5);
            }
        }
    }
}
