//! Projection-aware lift of 2D motion features onto 3D anchors.

use crate::{AnchorSet, FeatureMapSet, MotionConfig, MotionError};

/// Project each anchor into every view's feature grid and average the
/// bilinear reads.
///
/// Views where the anchor is behind the near plane or lands outside the
/// grid are excluded and the average renormalized over the remaining views
/// (or, with `strict_view_average`, kept as zeros over all V). Anchors
/// visible nowhere get a zero feature and a zero valid-view count.
pub fn lift_features(
    anchors: &AnchorSet,
    maps: &FeatureMapSet,
    cfg: &MotionConfig,
) -> Result<AnchorSet, MotionError> {
    let m = anchors.count();
    let c = maps.channels();
    let v = maps.views();
    let (gh, gw) = (maps.height(), maps.width());
    let mut features = vec![0.0f32; m * c];
    let mut valid_counts = vec![0u32; m];
    let mut read = vec![0.0f64; c];
    let mut acc = vec![0.0f64; c];

    for a in 0..m {
        let pos = anchors.position(a);
        acc.iter_mut().for_each(|x| *x = 0.0);
        let mut valid = 0u32;
        for (view, cam) in maps.cameras().iter().enumerate() {
            let p = cam.to_camera_space(pos);
            if p[2] <= cfg.near_plane {
                continue;
            }
            let (u, vpx) = cam.project_camera_space(p);
            // Full-resolution pixels to grid cell-center coordinates.
            let gx = u * (gw as f64 / cam.width() as f64) - 0.5;
            let gy = vpx * (gh as f64 / cam.height() as f64) - 0.5;
            if !(0.0..=(gw - 1) as f64).contains(&gx) || !(0.0..=(gh - 1) as f64).contains(&gy) {
                continue;
            }
            bilinear(maps, view, gx, gy, &mut read);
            for ch in 0..c {
                acc[ch] += read[ch];
            }
            valid += 1;
        }
        valid_counts[a] = valid;
        let denom = if cfg.strict_view_average {
            v as f64
        } else {
            valid as f64
        };
        if valid > 0 {
            for ch in 0..c {
                features[a * c + ch] = (acc[ch] / denom) as f32;
            }
        }
    }
    anchors.with_features(c, features, valid_counts)
}

/// Bilinear read of all channels at grid cell-center coordinates.
fn bilinear(maps: &FeatureMapSet, view: usize, gx: f64, gy: f64, out: &mut [f64]) {
    let (gw, gh) = (maps.width(), maps.height());
    let (x0, fx) = split_coord(gx, gw);
    let (y0, fy) = split_coord(gy, gh);
    let x1 = (x0 + 1).min(gw - 1);
    let y1 = (y0 + 1).min(gh - 1);
    let w00 = (1.0 - fx) * (1.0 - fy);
    let w10 = fx * (1.0 - fy);
    let w01 = (1.0 - fx) * fy;
    let w11 = fx * fy;
    for (ch, o) in out.iter_mut().enumerate() {
        *o = w00 * maps.value(view, ch, y0, x0) as f64
            + w10 * maps.value(view, ch, y0, x1) as f64
            + w01 * maps.value(view, ch, y1, x0) as f64
            + w11 * maps.value(view, ch, y1, x1) as f64;
    }
}

fn split_coord(g: f64, extent: usize) -> (usize, f64) {
    if extent == 1 {
        return (0, 0.0);
    }
    let cell = (g.floor() as usize).min(extent - 2);
    (cell, g - cell as f64)
}
