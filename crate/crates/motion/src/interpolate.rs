//! Distance-weighted interpolation of anchor features onto Gaussians.

use igs_core::GaussianSet;

use crate::kdtree::KdTree;
use crate::{AnchorSet, MotionConfig, MotionError};

/// For each Gaussian, gather its K nearest anchors and blend their features
/// with weights `exp(-d / distance_scale)`, normalized to sum to one.
/// K clamps to the anchor count.
pub fn interpolate_motion_features(
    set: &GaussianSet,
    anchors: &AnchorSet,
    cfg: &MotionConfig,
) -> Result<Vec<f32>, MotionError> {
    if cfg.knn < 1 {
        return Err(MotionError::BadConfig("knn must be >= 1".to_string()));
    }
    if !anchors.has_features() {
        return Err(MotionError::DimensionMismatch(
            "anchors carry no features".to_string(),
        ));
    }
    let c = anchors.channels();
    let k = cfg.knn.min(anchors.count());
    let tree = KdTree::build(anchors.positions());
    let mut out = vec![0.0f32; set.count() * c];

    for i in 0..set.count() {
        let p = set.position(i);
        let neighbors = tree.nearest_k([p[0] as f64, p[1] as f64, p[2] as f64], k);
        // Weights relative to the closest neighbor, so far-away queries do
        // not underflow the kernel.
        let d_min = neighbors[0].0.sqrt();
        let mut weights = Vec::with_capacity(k);
        let mut total = 0.0f64;
        for (d2, _) in &neighbors {
            let w = (-(d2.sqrt() - d_min) / cfg.distance_scale).exp();
            weights.push(w);
            total += w;
        }
        for ((_, a), w) in neighbors.iter().zip(&weights) {
            let wn = w / total;
            let feat = anchors.feature(*a);
            for ch in 0..c {
                out[i * c + ch] += (wn * feat[ch] as f64) as f32;
            }
        }
    }
    Ok(out)
}

/// Normalized interpolation weights for one query point; exposed so tests
/// can assert the kernel arithmetic directly.
pub fn interpolation_weights(distances: &[f64], distance_scale: f64) -> Vec<f64> {
    let d_min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = distances
        .iter()
        .map(|d| (-(d - d_min) / distance_scale).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}
