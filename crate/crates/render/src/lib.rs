//! Software point-based splatting renderer.
//!
//! Forward path: project 3D Gaussians to 2D splats, bin them into tiles,
//! sort front-to-back per tile by `(depth, index)` and alpha-blend per pixel
//! with `f64` accumulation. A brute-force per-pixel reference renderer with
//! no tiling and no early termination serves as the correctness oracle, and
//! an analytic backward pass provides exact reverse-mode gradients of the
//! blend for key-frame refinement.
//!
//! Both forward paths share one contribution rule: a splat contributes
//! `alpha * exp(-q/2)` at a pixel only where that value reaches
//! [`RenderConfig::alpha_min`]. The tile culling radius is derived from the
//! same rule, so the tiled and reference images agree except for early
//! termination, which is bounded by [`RenderConfig::termination`].

mod backward;
mod error;
pub mod io;
mod project;
mod rasterize;
mod reference;
mod sh;

pub use backward::{rasterize_backward, RenderGradients};
pub use error::RenderError;
pub use project::{build_covariance, project_gaussian, Splat2D};
pub use rasterize::{rasterize, rasterize_f64, rasterize_with_state, ForwardState, RenderOutput};
pub use reference::rasterize_reference;
pub use sh::{evaluate_sh, sh_basis, sh_basis_grad, MAX_SH_DEGREE};

use igs_core::ValidationError;

/// Renderer tuning knobs. The defaults are the ones every test pins.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    /// Tile edge in pixels.
    pub tile_size: usize,
    /// Splats at or behind this camera-space depth are culled.
    pub near_plane: f64,
    /// Depth assigned to the remaining transmittance in the depth map; the
    /// depth image stores camera-space z divided by this value.
    pub far_plane: f64,
    /// Added to the 2D covariance diagonal before inversion (pixels^2).
    pub lowpass: f64,
    /// Minimum per-pixel contribution; smaller contributions are dropped in
    /// both the tiled and the reference path.
    pub alpha_min: f64,
    /// Blending stops once transmittance falls below this (tiled path only).
    pub termination: f64,
    /// Extra margin around the image rectangle before footprint culling.
    pub guard_band: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            tile_size: 16,
            near_plane: 0.01,
            far_plane: 100.0,
            lowpass: 0.3,
            alpha_min: 1e-8,
            termination: 1e-4,
            guard_band: 0.0,
        }
    }
}

/// Gradient buffer shaped like a color image; unlike [`igs_core::Image`] the
/// values are unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGradients {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f32>,
}

impl PixelGradients {
    pub fn zeros(width: u32, height: u32) -> Self {
        PixelGradients {
            width,
            height,
            values: vec![0.0; (width * height * 3) as usize],
        }
    }

    pub fn new(width: u32, height: u32, values: Vec<f32>) -> Result<Self, ValidationError> {
        if values.len() != (width * height * 3) as usize {
            return Err(ValidationError::LengthMismatch {
                field: "pixel gradients",
                expected: (width * height * 3) as usize,
                actual: values.len(),
            });
        }
        Ok(PixelGradients {
            width,
            height,
            values,
        })
    }
}
