//! 2D motion feature extraction.
//!
//! The trained optical-flow backbone is out of scope; extraction is a
//! pluggable interface with two built-in implementations. The synthetic
//! extractor runs deterministic integer block matching between the frame
//! pair; the oracle extractor encodes externally supplied ground-truth flow
//! grids losslessly into the first two channels. Either way, a modulation
//! network conditioned on the camera pose and the view's mean depth applies
//! a per-channel scale and shift before the maps are lifted to 3D.

use igs_core::{Camera, Image};

use crate::weights::ModulationNet;
use crate::{FeatureMapSet, MotionConfig, MotionError};

pub trait FeatureExtractor: Send + Sync {
    /// Produce a `channels x height x width` embedding for one view's
    /// (previous, current) image pair.
    fn extract(
        &self,
        view: usize,
        prev: &Image,
        curr: &Image,
        dims: (usize, usize, usize),
    ) -> Result<Vec<f32>, MotionError>;
}

/// Integer block matching at feature-grid granularity.
///
/// Each grid cell's block in the previous frame is searched in the current
/// frame over `[-radius, radius]^2`; the displacement minimizing the sum of
/// absolute differences becomes the flow, encoded in channels 0 (x) and 1
/// (y) in full-resolution pixels. Ties prefer the smallest displacement, so
/// a static pair yields exactly zero flow.
pub struct SyntheticExtractor {
    pub search_radius: u32,
}

impl FeatureExtractor for SyntheticExtractor {
    fn extract(
        &self,
        _view: usize,
        prev: &Image,
        curr: &Image,
        dims: (usize, usize, usize),
    ) -> Result<Vec<f32>, MotionError> {
        let (channels, gh, gw) = dims;
        if channels < 2 {
            return Err(MotionError::BadConfig(
                "synthetic extractor needs at least 2 channels".to_string(),
            ));
        }
        let (iw, ih) = (prev.width() as usize, prev.height() as usize);
        if iw < gw || ih < gh {
            return Err(MotionError::ResolutionMismatch(format!(
                "feature grid {gw}x{gh} exceeds image {iw}x{ih}"
            )));
        }
        let mut out = vec![0.0f32; channels * gh * gw];
        // Offsets ordered by (radius^2, dy, dx): the first strict minimum
        // wins, so ties resolve toward zero motion.
        let r = self.search_radius as i64;
        let mut offsets: Vec<(i64, i64)> = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                offsets.push((dy, dx));
            }
        }
        offsets.sort_by_key(|&(dy, dx)| (dy * dy + dx * dx, dy, dx));

        for gy in 0..gh {
            let y0 = gy * ih / gh;
            let y1 = ((gy + 1) * ih / gh).max(y0 + 1);
            for gx in 0..gw {
                let x0 = gx * iw / gw;
                let x1 = ((gx + 1) * iw / gw).max(x0 + 1);
                let mut best = f64::INFINITY;
                let mut best_d = (0i64, 0i64);
                for &(dy, dx) in &offsets {
                    let mut sad = 0.0f64;
                    for y in y0..y1 {
                        let sy = (y as i64 + dy).clamp(0, ih as i64 - 1) as u32;
                        for x in x0..x1 {
                            let sx = (x as i64 + dx).clamp(0, iw as i64 - 1) as u32;
                            for c in 0..prev.channels() {
                                sad += (prev.value(x as u32, y as u32, c) as f64
                                    - curr.value(sx, sy, c) as f64)
                                    .abs();
                            }
                        }
                    }
                    if sad < best {
                        best = sad;
                        best_d = (dy, dx);
                    }
                }
                out[gy * gw + gx] = best_d.1 as f32;
                out[gh * gw + gy * gw + gx] = best_d.0 as f32;
            }
        }
        Ok(out)
    }
}

/// Encodes supplied per-view flow grids (2 x H x W, full-resolution pixels)
/// losslessly into channels 0 and 1; the rest stay zero.
pub struct OracleExtractor {
    flows: Vec<Vec<f32>>,
    grid_height: usize,
    grid_width: usize,
}

impl OracleExtractor {
    pub fn new(flows: Vec<Vec<f32>>, grid_height: usize, grid_width: usize) -> Result<Self, MotionError> {
        for (v, f) in flows.iter().enumerate() {
            if f.len() != 2 * grid_height * grid_width {
                return Err(MotionError::DimensionMismatch(format!(
                    "flow grid for view {v} must hold 2x{grid_height}x{grid_width} values"
                )));
            }
        }
        Ok(OracleExtractor {
            flows,
            grid_height,
            grid_width,
        })
    }
}

impl FeatureExtractor for OracleExtractor {
    fn extract(
        &self,
        view: usize,
        _prev: &Image,
        _curr: &Image,
        dims: (usize, usize, usize),
    ) -> Result<Vec<f32>, MotionError> {
        let (channels, gh, gw) = dims;
        if channels < 2 {
            return Err(MotionError::BadConfig(
                "oracle extractor needs at least 2 channels".to_string(),
            ));
        }
        if gh != self.grid_height || gw != self.grid_width {
            return Err(MotionError::ResolutionMismatch(format!(
                "oracle flow grid is {}x{}, configured grid is {gw}x{gh}",
                self.grid_width, self.grid_height
            )));
        }
        let flow = self
            .flows
            .get(view)
            .ok_or_else(|| MotionError::DimensionMismatch(format!("no flow for view {view}")))?;
        let mut out = vec![0.0f32; channels * gh * gw];
        out[..2 * gh * gw].copy_from_slice(flow);
        Ok(out)
    }
}

/// Build per-view motion feature maps from frame pairs and modulate them
/// with the camera pose and mean scene depth.
pub fn extract_motion_features(
    prev: &[Image],
    curr: &[Image],
    cams: &[Camera],
    depth: &[Image],
    extractor: &dyn FeatureExtractor,
    modulation: &ModulationNet,
    cfg: &MotionConfig,
) -> Result<FeatureMapSet, MotionError> {
    let v = cams.len();
    if prev.len() != v || curr.len() != v || depth.len() != v {
        return Err(MotionError::ResolutionMismatch(format!(
            "view counts differ: prev {} curr {} depth {} cameras {v}",
            prev.len(),
            curr.len(),
            depth.len()
        )));
    }
    let (c, gh, gw) = (cfg.channels, cfg.grid_height, cfg.grid_width);
    if modulation.output_channels() != c {
        return Err(MotionError::DimensionMismatch(format!(
            "modulation network emits {} channels, config says {c}",
            modulation.output_channels()
        )));
    }
    let mut values = Vec::with_capacity(v * c * gh * gw);
    for view in 0..v {
        for img in [&prev[view], &curr[view]] {
            if img.width() != cams[view].width() || img.height() != cams[view].height() {
                return Err(MotionError::ResolutionMismatch(format!(
                    "view {view}: image {}x{} vs camera {}x{}",
                    img.width(),
                    img.height(),
                    cams[view].width(),
                    cams[view].height()
                )));
            }
        }
        let embedding = extractor.extract(view, &prev[view], &curr[view], (c, gh, gw))?;
        if embedding.len() != c * gh * gw {
            return Err(MotionError::DimensionMismatch(format!(
                "extractor returned {} values for view {view}, expected {}",
                embedding.len(),
                c * gh * gw
            )));
        }
        let mean_depth = depth[view].values().iter().map(|v| *v as f64).sum::<f64>()
            / depth[view].values().len() as f64;
        let (scale, shift) = modulation.forward(&cams[view], mean_depth);
        for ch in 0..c {
            let s = scale[ch];
            let b = shift[ch];
            for px in &embedding[ch * gh * gw..(ch + 1) * gh * gw] {
                values.push((s * *px as f64 + b) as f32);
            }
        }
    }
    FeatureMapSet::new(c, gh, gw, values, cams.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITY: [f32; 9] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

    fn cam(w: u32, h: u32) -> Camera {
        Camera::new(
            w as f32,
            h as f32,
            w as f32 / 2.0,
            h as f32 / 2.0,
            IDENTITY,
            [0.0; 3],
            w,
            h,
        )
        .unwrap()
    }

    fn small_cfg() -> MotionConfig {
        MotionConfig {
            channels: 4,
            grid_height: 4,
            grid_width: 4,
            search_radius: 3,
            ..MotionConfig::default()
        }
    }

    fn checker(w: u32, h: u32, shift: u32) -> Image {
        let mut v = Vec::new();
        for y in 0..h {
            for x in 0..w {
                v.push(if ((x + shift) / 2 + y / 2) % 2 == 0 { 1.0 } else { 0.0 });
            }
        }
        Image::new(w, h, 1, v).unwrap()
    }

    #[test]
    fn static_pair_gives_zero_flow() {
        let cfg = small_cfg();
        let img = checker(16, 16, 0);
        let ext = SyntheticExtractor { search_radius: 3 };
        let dims = (cfg.channels, cfg.grid_height, cfg.grid_width);
        let e = ext.extract(0, &img, &img, dims).unwrap();
        assert!(e.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn shifted_pattern_is_detected() {
        let cfg = small_cfg();
        let prev = checker(16, 16, 0);
        let curr = checker(16, 16, 2);
        let ext = SyntheticExtractor { search_radius: 3 };
        let dims = (cfg.channels, cfg.grid_height, cfg.grid_width);
        let e = ext.extract(0, &prev, &curr, dims).unwrap();
        // Interior cells should report the 2px horizontal shift.
        let gw = cfg.grid_width;
        let x_flow = e[1 * gw + 1];
        assert_eq!(x_flow.abs(), 2.0);
        let y_flow = e[cfg.grid_height * gw + 1 * gw + 1];
        assert_eq!(y_flow, 0.0);
    }

    #[test]
    fn oracle_encodes_constant_flow_losslessly() {
        let cfg = small_cfg();
        let (gh, gw) = (cfg.grid_height, cfg.grid_width);
        let mut flow = vec![0.0f32; 2 * gh * gw];
        flow[..gh * gw].fill(1.5);
        flow[gh * gw..].fill(-0.75);
        let ext = OracleExtractor::new(vec![flow], gh, gw).unwrap();
        let img = checker(16, 16, 0);
        let e = ext.extract(0, &img, &img, (cfg.channels, gh, gw)).unwrap();
        assert!(e[..gh * gw].iter().all(|v| *v == 1.5));
        assert!(e[gh * gw..2 * gh * gw].iter().all(|v| *v == -0.75));
        assert!(e[2 * gh * gw..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_modulation_passes_embedding_through() {
        let cfg = small_cfg();
        let camera = cam(16, 16);
        let img = checker(16, 16, 0);
        let moved = checker(16, 16, 2);
        let depth = Image::filled(16, 16, 1, 0.5).unwrap();
        let modulation = ModulationNet::identity(cfg.channels, 8);
        let ext = SyntheticExtractor { search_radius: 3 };
        let maps = extract_motion_features(
            &[img.clone()],
            &[moved],
            &[camera],
            &[depth],
            &ext,
            &modulation,
            &cfg,
        )
        .unwrap();
        let raw = ext
            .extract(0, &img, &checker(16, 16, 2), (cfg.channels, 4, 4))
            .unwrap();
        assert_eq!(maps.values(), raw.as_slice());
    }

    #[test]
    fn resolution_mismatch_is_an_error() {
        let cfg = small_cfg();
        let camera = cam(16, 16);
        let img = checker(16, 16, 0);
        let wrong = checker(8, 8, 0);
        let depth = Image::filled(16, 16, 1, 0.5).unwrap();
        let modulation = ModulationNet::identity(cfg.channels, 8);
        let ext = SyntheticExtractor { search_radius: 3 };
        let err = extract_motion_features(
            &[img],
            &[wrong],
            &[camera],
            &[depth],
            &ext,
            &modulation,
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(err, MotionError::ResolutionMismatch(_)));
    }
}
