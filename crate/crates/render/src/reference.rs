//! Brute-force rendering oracle: every Gaussian evaluated at every pixel,
//! one full-precision global sort, no tiling, no early termination.

use igs_core::{Camera, GaussianSet};

use crate::project::prepare_set;
use crate::rasterize::{contribution, finalize_images, RenderOutput};
use crate::{RenderConfig, RenderError};

pub fn rasterize_reference(
    set: &GaussianSet,
    cam: &Camera,
    background: [f32; 3],
    cfg: &RenderConfig,
) -> Result<RenderOutput, RenderError> {
    if set.sh_degree() > crate::sh::MAX_SH_DEGREE {
        return Err(RenderError::UnsupportedShDegree(set.sh_degree()));
    }
    let (width, height) = (cam.width() as usize, cam.height() as usize);
    let (mut splats, skipped_degenerate) = prepare_set(set, cam, cfg, false);
    splats.sort_by(|a, b| a.depth.partial_cmp(&b.depth).unwrap().then(a.index.cmp(&b.index)));

    let bg = [
        background[0] as f64,
        background[1] as f64,
        background[2] as f64,
    ];
    let mut raw = vec![[0.0f64; 4]; width * height];
    let mut touch = vec![0u32; set.count()];
    for y in 0..height {
        for x in 0..width {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut t = 1.0f64;
            let mut rgb = [0.0f64; 3];
            let mut depth = 0.0f64;
            for sp in &splats {
                let Some(alpha_prime) = contribution(sp, px, py, cfg.alpha_min) else {
                    continue;
                };
                let w = alpha_prime * t;
                rgb[0] += sp.rgb[0] * w;
                rgb[1] += sp.rgb[1] * w;
                rgb[2] += sp.rgb[2] * w;
                depth += sp.depth * w;
                touch[sp.index as usize] += 1;
                t *= 1.0 - alpha_prime;
            }
            rgb[0] += t * bg[0];
            rgb[1] += t * bg[1];
            rgb[2] += t * bg[2];
            depth += t * cfg.far_plane;
            raw[y * width + x] = [rgb[0], rgb[1], rgb[2], depth];
        }
    }

    let (color, depth) = finalize_images(width, height, &raw, cfg.far_plane);
    Ok(RenderOutput {
        color,
        depth,
        per_gaussian_touch_count: touch,
        skipped_degenerate,
    })
}
