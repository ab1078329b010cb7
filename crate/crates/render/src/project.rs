use igs_core::{quat, Camera, Gaussian, GaussianSet};
use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector2, Vector3};

use crate::{sh, RenderConfig};

/// A Gaussian after projection to screen space.
///
/// `cov2d` is the raw projected covariance; the low-pass floor is applied at
/// blending time, consistently in every path that inverts it.
#[derive(Debug, Clone, PartialEq)]
pub struct Splat2D {
    pub mean2d: [f64; 2],
    pub cov2d: [[f64; 2]; 2],
    pub depth: f64,
    pub alpha: f64,
    pub rgb: [f64; 3],
}

/// `R diag(scale^2) R^T` for a unit quaternion and positive scales.
pub fn build_covariance(rot: [f32; 4], scale: [f32; 3]) -> Matrix3<f64> {
    let q = quat::normalize([rot[0] as f64, rot[1] as f64, rot[2] as f64, rot[3] as f64]);
    let m = quat::to_rotation_matrix(q);
    let r = Matrix3::new(
        m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
    );
    let d = Matrix3::from_diagonal(&Vector3::new(
        (scale[0] as f64) * (scale[0] as f64),
        (scale[1] as f64) * (scale[1] as f64),
        (scale[2] as f64) * (scale[2] as f64),
    ));
    r * d * r.transpose()
}

/// Jacobian of the perspective projection at a camera-space point.
pub(crate) fn projection_jacobian(cam: &Camera, p: &Vector3<f64>) -> Matrix2x3<f64> {
    let fx = cam.fx() as f64;
    let fy = cam.fy() as f64;
    let z = p.z;
    Matrix2x3::new(
        fx / z,
        0.0,
        -fx * p.x / (z * z),
        0.0,
        fy / z,
        -fy * p.y / (z * z),
    )
}

pub(crate) fn rotation_matrix(cam: &Camera) -> Matrix3<f64> {
    let r = cam.rotation();
    Matrix3::new(
        r[0] as f64,
        r[1] as f64,
        r[2] as f64,
        r[3] as f64,
        r[4] as f64,
        r[5] as f64,
        r[6] as f64,
        r[7] as f64,
        r[8] as f64,
    )
}

/// Radius beyond which the contribution of a splat with base opacity
/// `alpha` is guaranteed to fall below `alpha_min`.
pub(crate) fn footprint_radius(cov_floored: &Matrix2<f64>, alpha: f64, alpha_min: f64) -> f64 {
    if alpha <= alpha_min {
        return 0.0;
    }
    let a = cov_floored[(0, 0)];
    let b = cov_floored[(0, 1)];
    let c = cov_floored[(1, 1)];
    let mid = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let lambda_max = (mid + disc).max(0.0);
    (2.0 * (alpha / alpha_min).ln() * lambda_max).sqrt()
}

/// Project a single Gaussian; `None` when it is culled (behind the near
/// plane, or its footprint misses the image rectangle plus guard band).
pub fn project_gaussian(g: &Gaussian, cam: &Camera, cfg: &RenderConfig) -> Option<Splat2D> {
    let sh_coeffs = g.sh.len() / 3;
    let degree = (sh_coeffs as f64).sqrt() as u32 - 1;
    project_attributes(
        g.mu, g.rot, g.scale, g.opacity, &g.sh, degree, cam, cfg,
    )
}

/// Near-plane cull only; callers decide whether to apply the screen cull.
#[allow(clippy::too_many_arguments)]
pub(crate) fn project_unculled(
    mu: [f32; 3],
    rot: [f32; 4],
    scale: [f32; 3],
    opacity: f32,
    sh_values: &[f32],
    degree: u32,
    cam: &Camera,
    cfg: &RenderConfig,
) -> Option<Splat2D> {
    let p = cam.to_camera_space(mu);
    if p[2] <= cfg.near_plane {
        return None;
    }
    let p_cam = Vector3::new(p[0], p[1], p[2]);
    let j = projection_jacobian(cam, &p_cam);
    let w = rotation_matrix(cam);
    let sigma = build_covariance(rot, scale);
    let u = j * w;
    let cov2d = u * sigma * u.transpose();
    let (mx, my) = cam.project_camera_space(p);

    let campos = cam.position();
    let dir = normalize3([
        mu[0] as f64 - campos[0],
        mu[1] as f64 - campos[1],
        mu[2] as f64 - campos[2],
    ]);
    let rgb = sh::evaluate_sh(sh_values, degree, dir);

    Some(Splat2D {
        mean2d: [mx, my],
        cov2d: [[cov2d[(0, 0)], cov2d[(0, 1)]], [cov2d[(1, 0)], cov2d[(1, 1)]]],
        depth: p[2],
        alpha: opacity as f64,
        rgb,
    })
}

pub(crate) fn offscreen(splat: &Splat2D, cam: &Camera, cfg: &RenderConfig) -> bool {
    let floored = Matrix2::new(
        splat.cov2d[0][0] + cfg.lowpass,
        splat.cov2d[0][1],
        splat.cov2d[1][0],
        splat.cov2d[1][1] + cfg.lowpass,
    );
    let radius = footprint_radius(&floored, splat.alpha, cfg.alpha_min);
    let g = cfg.guard_band;
    let (w_px, h_px) = (cam.width() as f64, cam.height() as f64);
    let [mx, my] = splat.mean2d;
    mx + radius < -g || mx - radius > w_px + g || my + radius < -g || my - radius > h_px + g
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn project_attributes(
    mu: [f32; 3],
    rot: [f32; 4],
    scale: [f32; 3],
    opacity: f32,
    sh_values: &[f32],
    degree: u32,
    cam: &Camera,
    cfg: &RenderConfig,
) -> Option<Splat2D> {
    let splat = project_unculled(mu, rot, scale, opacity, sh_values, degree, cam, cfg)?;
    if offscreen(&splat, cam, cfg) {
        return None;
    }
    Some(splat)
}

pub(crate) fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n == 0.0 {
        return [0.0, 0.0, 1.0];
    }
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Splat prepared for blending: floored-covariance inverse plus tile extent.
/// `index` refers back to the Gaussian in the source set.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub index: u32,
    pub mean: Vector2<f64>,
    /// Inverse of the floored 2D covariance.
    pub inv_cov: Matrix2<f64>,
    pub depth: f64,
    pub alpha: f64,
    pub rgb: [f64; 3],
    pub radius: f64,
}

/// Project and floor every visible Gaussian in deterministic index order.
/// Splats whose floored covariance is degenerate are dropped and counted.
/// The reference path disables the screen cull and walks every splat.
pub(crate) fn prepare_set(
    set: &GaussianSet,
    cam: &Camera,
    cfg: &RenderConfig,
    cull_offscreen: bool,
) -> (Vec<Prepared>, u32) {
    let mut out = Vec::with_capacity(set.count());
    let mut degenerate = 0u32;
    let stride = set.sh_stride();
    let degree = set.sh_degree();
    for i in 0..set.count() {
        let sh_values = &set.sh()[i * stride..(i + 1) * stride];
        let Some(splat) = project_unculled(
            set.position(i),
            set.rotation(i),
            set.scale(i),
            set.opacity(i),
            sh_values,
            degree,
            cam,
            cfg,
        ) else {
            continue;
        };
        if cull_offscreen && offscreen(&splat, cam, cfg) {
            continue;
        }
        let floored = Matrix2::new(
            splat.cov2d[0][0] + cfg.lowpass,
            splat.cov2d[0][1],
            splat.cov2d[1][0],
            splat.cov2d[1][1] + cfg.lowpass,
        );
        let det = floored[(0, 0)] * floored[(1, 1)] - floored[(0, 1)] * floored[(1, 0)];
        if det <= 0.0 {
            degenerate += 1;
            continue;
        }
        let inv_cov = Matrix2::new(
            floored[(1, 1)] / det,
            -floored[(0, 1)] / det,
            -floored[(1, 0)] / det,
            floored[(0, 0)] / det,
        );
        out.push(Prepared {
            index: i as u32,
            mean: Vector2::new(splat.mean2d[0], splat.mean2d[1]),
            inv_cov,
            depth: splat.depth,
            alpha: splat.alpha,
            rgb: splat.rgb,
            radius: footprint_radius(&floored, splat.alpha, cfg.alpha_min),
        });
    }
    (out, degenerate)
}
