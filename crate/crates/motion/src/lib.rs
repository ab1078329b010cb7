//! Anchor-driven Gaussian motion engine.
//!
//! A target frame's multi-view images are turned into 2D motion feature
//! maps, lifted onto anchor points sampled from the key frame's Gaussians
//! by farthest point sampling, refined by a self-attention block, then
//! interpolated back to every Gaussian and decoded into per-Gaussian
//! displacement and rotation deltas.
//!
//! Everything here is a pure function of its inputs. Reductions that range
//! over anchors use canonically ordered summation so that permutation
//! equivariance holds bit-exactly, not just approximately.

mod decode;
mod error;
mod extract;
mod fps;
mod interpolate;
mod kdtree;
mod lift;
mod transformer;
mod types;
mod weights;

pub use decode::{apply_motion, calibrate_head, decode_motion};
pub use error::MotionError;
pub use extract::{
    extract_motion_features, FeatureExtractor, OracleExtractor, SyntheticExtractor,
};
pub use fps::{sample_anchor_indices, sample_anchors_fps};
pub use interpolate::interpolate_motion_features;
pub use kdtree::KdTree;
pub use lift::lift_features;
pub use transformer::transformer_forward;
pub use types::{AnchorSet, FeatureMapSet};
pub use weights::{
    read_weights, write_weights, AgmWeights, AttentionLayerWeights, DecodeHead, ModulationNet,
    IGSW_MAGIC,
};

/// Tuning knobs for the motion pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionConfig {
    /// Number of anchor points sampled from the key frame (M).
    pub anchor_count: usize,
    /// Index of the Gaussian seeding farthest point sampling.
    pub fps_seed_index: usize,
    /// Neighbors used when interpolating anchor features to Gaussians (K).
    pub knn: usize,
    /// World-unit length scale of the interpolation kernel exp(-d/scale).
    pub distance_scale: f64,
    /// Motion feature channels (C).
    pub channels: usize,
    /// Feature grid resolution.
    pub grid_height: usize,
    pub grid_width: usize,
    /// Average lifted features over all views with zeros for invalid views,
    /// instead of renormalizing over valid views.
    pub strict_view_average: bool,
    /// Anchors at or behind this camera-space depth see nothing in a view.
    pub near_plane: f64,
    /// Block-matching search radius of the synthetic extractor, in pixels.
    pub search_radius: u32,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            anchor_count: 8192,
            fps_seed_index: 0,
            knn: 8,
            distance_scale: 1.0,
            channels: 128,
            grid_height: 128,
            grid_width: 128,
            strict_view_average: false,
            near_plane: 0.01,
            search_radius: 8,
        }
    }
}

/// Sum addends in ascending `total_cmp` order.
///
/// Sorting makes the reduction a function of the multiset of values alone,
/// which is what makes attention bit-exactly permutation-equivariant.
pub(crate) fn sorted_sum(addends: &mut [f64]) -> f64 {
    addends.sort_unstable_by(f64::total_cmp);
    addends.iter().sum()
}
