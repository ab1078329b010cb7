//! Core domain types for the IGS engine.
//!
//! Everything downstream (renderer, motion engine, streaming driver, codec)
//! speaks in terms of these types. They are validated on construction and
//! immutable afterwards, so any value you can observe satisfies its
//! invariants and is safe to share across threads.
//!
//! Scalars are stored as `f32`; numeric kernels promote to `f64` internally.

mod camera;
mod error;
mod gaussian;
mod image;
mod motion_field;
pub mod quat;

pub use camera::Camera;
pub use error::ValidationError;
pub use gaussian::{sh_coeff_count, sh_value_count, validate_gaussian_set, Gaussian, GaussianSet};
pub use image::Image;
pub use motion_field::MotionField;

/// Unit-norm tolerance shared by quaternion and rotation-matrix checks.
pub const UNIT_TOLERANCE: f32 = 1e-6;
