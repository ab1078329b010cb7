use crate::ValidationError;

/// Row-major image with 1 or 3 channels, values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: u32,
    height: u32,
    channels: u32,
    values: Vec<f32>,
}

impl Image {
    pub fn new(width: u32, height: u32, channels: u32, values: Vec<f32>) -> Result<Self, ValidationError> {
        if width == 0 || height == 0 {
            return Err(ValidationError::BadImageDims {
                reason: format!("dimensions must be >= 1 (got {width}x{height})"),
            });
        }
        if channels != 1 && channels != 3 {
            return Err(ValidationError::BadImageDims {
                reason: format!("channels must be 1 or 3 (got {channels})"),
            });
        }
        let expected = (width * height * channels) as usize;
        if values.len() != expected {
            return Err(ValidationError::LengthMismatch {
                field: "image values",
                expected,
                actual: values.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(ValidationError::NonFinite {
                    field: "image values",
                    index: i,
                });
            }
            if !(0.0..=1.0).contains(v) {
                return Err(ValidationError::ImageValueOutOfRange {
                    index: i,
                    value: *v,
                });
            }
        }
        Ok(Image {
            width,
            height,
            channels,
            values,
        })
    }

    pub fn filled(width: u32, height: u32, channels: u32, value: f32) -> Result<Self, ValidationError> {
        Self::new(
            width,
            height,
            channels,
            vec![value; (width * height * channels) as usize],
        )
    }

    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }
    pub fn channels(&self) -> u32 {
        self.channels
    }
    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn value(&self, x: u32, y: u32, c: u32) -> f32 {
        self.values[((y * self.width + x) * self.channels + c) as usize]
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }
}
