use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use igs_core::Camera;

use crate::MotionError;

pub const IGSF_MAGIC: &[u8; 4] = b"IGSF";

/// Multi-view 2D motion feature maps, `[view][channel][row][col]`, plus the
/// full-resolution camera of each view.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapSet {
    views: usize,
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f32>,
    cameras: Vec<Camera>,
}

impl FeatureMapSet {
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        values: Vec<f32>,
        cameras: Vec<Camera>,
    ) -> Result<Self, MotionError> {
        let views = cameras.len();
        let expected = views * channels * height * width;
        if values.len() != expected {
            return Err(MotionError::DimensionMismatch(format!(
                "feature values: expected {expected}, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MotionError::DimensionMismatch(
                "feature values must be finite".to_string(),
            ));
        }
        Ok(FeatureMapSet {
            views,
            channels,
            height,
            width,
            values,
            cameras,
        })
    }

    pub fn views(&self) -> usize {
        self.views
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn cameras(&self) -> &[Camera] {
        &self.cameras
    }
    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn value(&self, view: usize, channel: usize, row: usize, col: usize) -> f32 {
        self.values
            [((view * self.channels + channel) * self.height + row) * self.width + col]
    }

    /// Raw "IGSF" dump: magic, u32 version, views, channels, height, width,
    /// then the f32 values little-endian. Cameras are not stored; attach
    /// them again when reading.
    pub fn write_igsf(&self, path: &Path) -> Result<(), MotionError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(IGSF_MAGIC)?;
        for v in [
            1u32,
            self.views as u32,
            self.channels as u32,
            self.height as u32,
            self.width as u32,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_igsf(path: &Path, cameras: Vec<Camera>) -> Result<Self, MotionError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != IGSF_MAGIC {
            return Err(MotionError::BadMapFile(format!("bad magic {magic:?}")));
        }
        let mut buf = [0u8; 4];
        let mut next = || -> Result<u32, MotionError> {
            r.read_exact(&mut buf)?;
            Ok(u32::from_le_bytes(buf))
        };
        let version = next()?;
        if version != 1 {
            return Err(MotionError::BadMapFile(format!(
                "unsupported version {version}"
            )));
        }
        let views = next()? as usize;
        let channels = next()? as usize;
        let height = next()? as usize;
        let width = next()? as usize;
        if views != cameras.len() {
            return Err(MotionError::DimensionMismatch(format!(
                "file has {views} views but {} cameras were supplied",
                cameras.len()
            )));
        }
        let count = views * channels * height * width;
        let mut values = Vec::with_capacity(count);
        let mut f32buf = [0u8; 4];
        let mut reader = r;
        for _ in 0..count {
            reader.read_exact(&mut f32buf)?;
            values.push(f32::from_le_bytes(f32buf));
        }
        FeatureMapSet::new(channels, height, width, values, cameras)
    }
}

/// Anchor points with optional per-anchor motion features.
///
/// `features` holds `f` right after the projection-aware lift and `z` after
/// the attention block; it is empty for a freshly sampled set.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    positions: Vec<f32>,
    channels: usize,
    features: Vec<f32>,
    valid_view_counts: Vec<u32>,
    /// Index of the source Gaussian each anchor was sampled from.
    source_indices: Vec<usize>,
}

impl AnchorSet {
    pub fn from_positions(
        positions: Vec<f32>,
        source_indices: Vec<usize>,
    ) -> Result<Self, MotionError> {
        if positions.is_empty() || positions.len() % 3 != 0 {
            return Err(MotionError::DimensionMismatch(
                "anchor positions must be a nonempty multiple of 3".to_string(),
            ));
        }
        if source_indices.len() != positions.len() / 3 {
            return Err(MotionError::DimensionMismatch(
                "source index count must match anchor count".to_string(),
            ));
        }
        Ok(AnchorSet {
            positions,
            channels: 0,
            features: Vec::new(),
            valid_view_counts: Vec::new(),
            source_indices,
        })
    }

    pub fn with_features(
        &self,
        channels: usize,
        features: Vec<f32>,
        valid_view_counts: Vec<u32>,
    ) -> Result<Self, MotionError> {
        let m = self.count();
        if features.len() != m * channels {
            return Err(MotionError::DimensionMismatch(format!(
                "features: expected {} values, got {}",
                m * channels,
                features.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(MotionError::DimensionMismatch(
                "features must be finite".to_string(),
            ));
        }
        if valid_view_counts.len() != m {
            return Err(MotionError::DimensionMismatch(
                "valid view counts must match anchor count".to_string(),
            ));
        }
        Ok(AnchorSet {
            positions: self.positions.clone(),
            channels,
            features,
            valid_view_counts,
            source_indices: self.source_indices.clone(),
        })
    }

    pub fn count(&self) -> usize {
        self.positions.len() / 3
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn positions(&self) -> &[f32] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> [f32; 3] {
        [
            self.positions[3 * i],
            self.positions[3 * i + 1],
            self.positions[3 * i + 2],
        ]
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &[f32] {
        &self.features[i * self.channels..(i + 1) * self.channels]
    }

    pub fn valid_view_counts(&self) -> &[u32] {
        &self.valid_view_counts
    }

    pub fn source_indices(&self) -> &[usize] {
        &self.source_indices
    }

    pub fn has_features(&self) -> bool {
        self.channels > 0
    }
}
