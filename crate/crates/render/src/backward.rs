//! Reverse-mode gradients of the forward blend.
//!
//! The backward pass replays the recorded per-pixel blend lists. Gradients
//! w.r.t. transmittance are carried by a reverse scan (no division by
//! `1 - alpha'`, so fully opaque contributions are safe), then chained
//! through the 2D Gaussian weight, the projection Jacobian (including its
//! dependence on the camera-space point), the covariance factorization and
//! the spherical-harmonics color, down to the raw Gaussian attributes.

use igs_core::{quat, Camera, GaussianSet};
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::project::{prepare_set, projection_jacobian, rotation_matrix};
use crate::rasterize::ForwardState;
use crate::sh::{sh_basis, sh_basis_grad};
use crate::{PixelGradients, RenderError};

/// Gradients of the loss w.r.t. every Gaussian attribute, plus the
/// accumulated view-space positional gradient magnitude that drives
/// densification. Entries for untouched Gaussians are exactly zero.
#[derive(Debug, Clone)]
pub struct RenderGradients {
    pub d_mu: Vec<f32>,
    pub d_rot: Vec<f32>,
    pub d_scale: Vec<f32>,
    pub d_opacity: Vec<f32>,
    pub d_sh: Vec<f32>,
    /// Norm of the accumulated screen-space mean gradient, per Gaussian.
    pub view_space_grad: Vec<f32>,
}

#[derive(Debug, Clone, Copy, Default)]
struct SplatAccum {
    d_alpha: f64,
    d_mean: [f64; 2],
    /// Symmetric gradient w.r.t. the inverse floored covariance.
    d_m: [f64; 3],
    d_rgb: [f64; 3],
    touched: bool,
}

pub fn rasterize_backward(
    set: &GaussianSet,
    cam: &Camera,
    d_pixels: &PixelGradients,
    state: &ForwardState,
) -> Result<RenderGradients, RenderError> {
    if state.count != set.count() {
        return Err(RenderError::StateMismatch(format!(
            "state holds {} Gaussians, set has {}",
            state.count,
            set.count()
        )));
    }
    if state.cam != *cam {
        return Err(RenderError::StateMismatch("camera differs".to_string()));
    }
    if d_pixels.width != cam.width() || d_pixels.height != cam.height() {
        return Err(RenderError::GradientDims {
            got_w: d_pixels.width,
            got_h: d_pixels.height,
            want_w: cam.width(),
            want_h: cam.height(),
        });
    }

    let cfg = &state.cfg;
    let (splats, _) = prepare_set(set, cam, cfg, true);
    // Original Gaussian index -> prepared slot.
    let mut slot_of = vec![u32::MAX; set.count()];
    for (slot, sp) in splats.iter().enumerate() {
        slot_of[sp.index as usize] = slot as u32;
    }

    let (width, height) = (cam.width() as usize, cam.height() as usize);
    let bg = [
        state.background[0] as f64,
        state.background[1] as f64,
        state.background[2] as f64,
    ];

    let mut acc = vec![SplatAccum::default(); splats.len()];
    let mut t_before: Vec<f64> = Vec::new();

    for y in 0..height {
        for x in 0..width {
            let pix = y * width + x;
            let (start, end) = (
                state.pixel_start[pix] as usize,
                state.pixel_start[pix + 1] as usize,
            );
            if start == end {
                continue;
            }
            let hits = &state.hits[start..end];
            let w = [
                d_pixels.values[pix * 3] as f64,
                d_pixels.values[pix * 3 + 1] as f64,
                d_pixels.values[pix * 3 + 2] as f64,
            ];
            if w == [0.0, 0.0, 0.0] {
                continue;
            }

            // Forward replay for the transmittance in front of each hit.
            t_before.clear();
            let mut t = 1.0f64;
            for h in hits {
                t_before.push(t);
                t *= 1.0 - h.alpha_prime;
            }

            // Reverse scan. g_t carries dL/dT_{i+1}; the background term
            // seeds it because the final transmittance multiplies bg.
            let mut g_t = w[0] * bg[0] + w[1] * bg[1] + w[2] * bg[2];
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            for (i, h) in hits.iter().enumerate().rev() {
                let slot = slot_of[h.index as usize];
                debug_assert_ne!(slot, u32::MAX, "hit for a culled splat");
                let sp = &splats[slot as usize];
                let a = &mut acc[slot as usize];
                let ti = t_before[i];
                let ap = h.alpha_prime;

                let w_dot_rgb = w[0] * sp.rgb[0] + w[1] * sp.rgb[1] + w[2] * sp.rgb[2];
                let g_alpha = w_dot_rgb * ti - g_t * ti;
                g_t = w_dot_rgb * ap + g_t * (1.0 - ap);

                let weight = ap * ti;
                a.d_rgb[0] += w[0] * weight;
                a.d_rgb[1] += w[1] * weight;
                a.d_rgb[2] += w[2] * weight;

                // alpha' = alpha * G with G = exp(-q/2), q = d^T M d.
                let g = ap / sp.alpha;
                a.d_alpha += g_alpha * g;
                let common = g_alpha * ap; // = g_alpha * alpha * G
                let d = Vector2::new(px - sp.mean.x, py - sp.mean.y);
                let md = sp.inv_cov * d;
                a.d_mean[0] += common * md.x;
                a.d_mean[1] += common * md.y;
                a.d_m[0] += -0.5 * common * d.x * d.x;
                a.d_m[1] += -0.5 * common * d.x * d.y;
                a.d_m[2] += -0.5 * common * d.y * d.y;
                a.touched = true;
            }
        }
    }

    chain_to_parameters(set, cam, state, &splats, &acc)
}

fn chain_to_parameters(
    set: &GaussianSet,
    cam: &Camera,
    state: &ForwardState,
    splats: &[crate::project::Prepared],
    acc: &[SplatAccum],
) -> Result<RenderGradients, RenderError> {
    let n = set.count();
    let stride = set.sh_stride();
    let degree = set.sh_degree();
    let k = stride / 3;
    let mut out = RenderGradients {
        d_mu: vec![0.0; 3 * n],
        d_rot: vec![0.0; 4 * n],
        d_scale: vec![0.0; 3 * n],
        d_opacity: vec![0.0; n],
        d_sh: vec![0.0; stride * n],
        view_space_grad: vec![0.0; n],
    };

    let w_rot = rotation_matrix(cam);
    let fx = cam.fx() as f64;
    let fy = cam.fy() as f64;
    let campos = cam.position();

    for (slot, sp) in splats.iter().enumerate() {
        let a = &acc[slot];
        if !a.touched {
            continue;
        }
        let i = sp.index as usize;
        let mu = set.position(i);
        let rot = set.rotation(i);
        let scale = set.scale(i);
        let sh = set.sh_of(i);

        // --- 2D quantities -------------------------------------------------
        let m = sp.inv_cov;
        let g_m = Matrix2::new(a.d_m[0], a.d_m[1], a.d_m[1], a.d_m[2]);
        // V = M^{-1}: dL/dV = -M dL/dM M. The low-pass floor is additive, so
        // the raw projected covariance shares this gradient.
        let g_v = -(m * g_m * m);

        let p = cam.to_camera_space(mu);
        let p_cam = Vector3::new(p[0], p[1], p[2]);
        let j = projection_jacobian(cam, &p_cam);
        let u = j * w_rot;
        let q = quat::normalize([
            rot[0] as f64,
            rot[1] as f64,
            rot[2] as f64,
            rot[3] as f64,
        ]);
        let rm = quat::to_rotation_matrix(q);
        let r = Matrix3::new(
            rm[0][0], rm[0][1], rm[0][2], rm[1][0], rm[1][1], rm[1][2], rm[2][0], rm[2][1],
            rm[2][2],
        );
        let s = [scale[0] as f64, scale[1] as f64, scale[2] as f64];
        let d_mat = Matrix3::from_diagonal(&Vector3::new(s[0] * s[0], s[1] * s[1], s[2] * s[2]));
        let sigma = r * d_mat * r.transpose();

        let g_sigma = u.transpose() * g_v * u;
        let g_u = 2.0 * g_v * u * sigma;
        let g_j = g_u * w_rot.transpose();

        // --- mean2d and Jacobian into the camera-space point ---------------
        let d_mean = Vector2::new(a.d_mean[0], a.d_mean[1]);
        let mut g_pcam = j.transpose() * d_mean;
        let z = p_cam.z;
        let z2 = z * z;
        let z3 = z2 * z;
        g_pcam.x += g_j[(0, 2)] * (-fx / z2);
        g_pcam.y += g_j[(1, 2)] * (-fy / z2);
        g_pcam.z += g_j[(0, 0)] * (-fx / z2)
            + g_j[(1, 1)] * (-fy / z2)
            + g_j[(0, 2)] * (2.0 * fx * p_cam.x / z3)
            + g_j[(1, 2)] * (2.0 * fy * p_cam.y / z3);
        let mut g_mu = w_rot.transpose() * g_pcam;

        // --- spherical harmonics -------------------------------------------
        let to_cam = [
            mu[0] as f64 - campos[0],
            mu[1] as f64 - campos[1],
            mu[2] as f64 - campos[2],
        ];
        let len = (to_cam[0] * to_cam[0] + to_cam[1] * to_cam[1] + to_cam[2] * to_cam[2]).sqrt();
        let dir = [to_cam[0] / len, to_cam[1] / len, to_cam[2] / len];
        let basis = sh_basis(degree, dir);
        let mut g_dir = [0.0f64; 3];
        let bgrad = sh_basis_grad(degree, dir);
        for ch in 0..3 {
            let mut linear = 0.5f64;
            for kk in 0..k {
                linear += basis[kk] * sh[ch * k + kk] as f64;
            }
            // Color clamped to [0,1]: gradient does not pass the clamp.
            if !(0.0..=1.0).contains(&linear) {
                continue;
            }
            let g_ch = a.d_rgb[ch];
            if g_ch == 0.0 {
                continue;
            }
            for kk in 0..k {
                out.d_sh[i * stride + ch * k + kk] += (g_ch * basis[kk]) as f32;
                for axis in 0..3 {
                    g_dir[axis] += g_ch * sh[ch * k + kk] as f64 * bgrad[kk][axis];
                }
            }
        }
        // dir = v / |v|: project out the radial component.
        let radial = g_dir[0] * dir[0] + g_dir[1] * dir[1] + g_dir[2] * dir[2];
        for axis in 0..3 {
            g_mu[axis] += (g_dir[axis] - radial * dir[axis]) / len;
        }

        // --- covariance factorization --------------------------------------
        let g_d = r.transpose() * g_sigma * r;
        for axis in 0..3 {
            out.d_scale[3 * i + axis] = (2.0 * s[axis] * g_d[(axis, axis)]) as f32;
        }
        let g_r = 2.0 * g_sigma * r * d_mat;
        let dq = rotation_quaternion_grads(q);
        let mut g_q = [0.0f64; 4];
        for (aq, dr) in g_q.iter_mut().zip(dq.iter()) {
            let mut sum = 0.0;
            for row in 0..3 {
                for col in 0..3 {
                    sum += g_r[(row, col)] * dr[row][col];
                }
            }
            *aq = sum;
        }
        // Through quaternion normalization at unit norm: (I - q q^T) g.
        let qdot = g_q[0] * q[0] + g_q[1] * q[1] + g_q[2] * q[2] + g_q[3] * q[3];
        for axis in 0..4 {
            out.d_rot[4 * i + axis] = (g_q[axis] - qdot * q[axis]) as f32;
        }

        for axis in 0..3 {
            out.d_mu[3 * i + axis] = g_mu[axis] as f32;
        }
        out.d_opacity[i] = a.d_alpha as f32;
        out.view_space_grad[i] =
            ((a.d_mean[0] * a.d_mean[0] + a.d_mean[1] * a.d_mean[1]).sqrt()) as f32;
    }

    let _ = state;
    Ok(out)
}

/// dR/dq for the scalar-first rotation matrix of `quat::to_rotation_matrix`.
fn rotation_quaternion_grads(q: [f64; 4]) -> [[[f64; 3]; 3]; 4] {
    let [w, x, y, z] = q;
    [
        [
            [0.0, -2.0 * z, 2.0 * y],
            [2.0 * z, 0.0, -2.0 * x],
            [-2.0 * y, 2.0 * x, 0.0],
        ],
        [
            [0.0, 2.0 * y, 2.0 * z],
            [2.0 * y, -4.0 * x, -2.0 * w],
            [2.0 * z, 2.0 * w, -4.0 * x],
        ],
        [
            [-4.0 * y, 2.0 * x, 2.0 * w],
            [2.0 * x, 0.0, 2.0 * z],
            [-2.0 * w, 2.0 * z, -4.0 * y],
        ],
        [
            [-4.0 * z, -2.0 * w, 2.0 * x],
            [2.0 * w, -4.0 * z, 2.0 * y],
            [2.0 * x, 2.0 * y, 0.0],
        ],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rasterize::rasterize_with_state;
    use crate::RenderConfig;
    use igs_core::Gaussian;

    const IDENTITY: [f32; 9] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

    fn cam32() -> Camera {
        Camera::new(40.0, 40.0, 16.0, 16.0, IDENTITY, [0.0; 3], 32, 32).unwrap()
    }

    fn small_scene() -> GaussianSet {
        let g0 = Gaussian::flat([0.05, -0.1, 2.0], [1.0, 0.0, 0.0, 0.0], [0.1; 3], 0.4, [0.3, -0.2, 0.1]);
        let g1 = Gaussian::flat([-0.1, 0.1, 2.6], [1.0, 0.0, 0.0, 0.0], [0.15; 3], 0.3, [-0.1, 0.4, 0.0]);
        GaussianSet::from_gaussians(0, &[g0, g1]).unwrap()
    }

    #[test]
    fn zero_cotangent_yields_zero_gradients() {
        let set = small_scene();
        let cam = cam32();
        let (_, state) = rasterize_with_state(&set, &cam, [0.0; 3], &RenderConfig::default()).unwrap();
        let zeros = PixelGradients::zeros(32, 32);
        let g = rasterize_backward(&set, &cam, &zeros, &state).unwrap();
        assert!(g.d_mu.iter().all(|v| *v == 0.0));
        assert!(g.d_rot.iter().all(|v| *v == 0.0));
        assert!(g.d_scale.iter().all(|v| *v == 0.0));
        assert!(g.d_opacity.iter().all(|v| *v == 0.0));
        assert!(g.d_sh.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn untouched_gaussian_has_zero_gradients() {
        // Second Gaussian far outside the frustum.
        let g0 = Gaussian::flat([0.0, 0.0, 2.0], [1.0, 0.0, 0.0, 0.0], [0.1; 3], 0.4, [0.3; 3]);
        let g1 = Gaussian::flat([100.0, 0.0, 2.0], [1.0, 0.0, 0.0, 0.0], [0.1; 3], 0.9, [0.3; 3]);
        let set = GaussianSet::from_gaussians(0, &[g0, g1]).unwrap();
        let cam = cam32();
        let (out, state) =
            rasterize_with_state(&set, &cam, [0.0; 3], &RenderConfig::default()).unwrap();
        assert_eq!(out.per_gaussian_touch_count[1], 0);
        let mut ones = PixelGradients::zeros(32, 32);
        ones.values.fill(1.0);
        let g = rasterize_backward(&set, &cam, &ones, &state).unwrap();
        for a in 0..3 {
            assert_eq!(g.d_mu[3 + a], 0.0);
            assert_eq!(g.d_scale[3 + a], 0.0);
        }
        assert_eq!(g.d_opacity[1], 0.0);
        assert_eq!(g.view_space_grad[1], 0.0);
        // The visible one received something.
        assert!(g.d_opacity[0] != 0.0);
    }

    #[test]
    fn mismatched_state_is_an_error() {
        let set = small_scene();
        let cam = cam32();
        let (_, state) = rasterize_with_state(&set, &cam, [0.0; 3], &RenderConfig::default()).unwrap();
        let other = GaussianSet::from_gaussians(
            0,
            &[Gaussian::flat([0.0; 3], [1.0, 0.0, 0.0, 0.0], [0.1; 3], 0.5, [0.0; 3])],
        )
        .unwrap();
        let zeros = PixelGradients::zeros(32, 32);
        assert!(matches!(
            rasterize_backward(&other, &cam, &zeros, &state),
            Err(RenderError::StateMismatch(_))
        ));
    }
}
