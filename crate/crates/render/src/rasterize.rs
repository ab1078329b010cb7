use igs_core::{Camera, GaussianSet, Image};
use nalgebra::Vector2;
use rayon::prelude::*;

use crate::project::{prepare_set, Prepared};
use crate::{RenderConfig, RenderError};

/// Forward render result.
///
/// `depth` is the alpha-weighted expected camera-space z with the leftover
/// transmittance assigned the far plane, divided by the far plane.
#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub color: Image,
    pub depth: Image,
    pub per_gaussian_touch_count: Vec<u32>,
    /// Splats dropped because their floored covariance was not invertible.
    pub skipped_degenerate: u32,
}

/// One accepted blending event: which Gaussian, at what projected opacity.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Hit {
    pub index: u32,
    pub alpha_prime: f64,
}

/// Everything the backward pass needs to replay the forward blend.
///
/// Confined to one rendering session: it is only valid for the exact same
/// set, camera, background and config it was produced with.
pub struct ForwardState {
    pub(crate) count: usize,
    pub(crate) cam: Camera,
    pub(crate) background: [f32; 3],
    pub(crate) cfg: RenderConfig,
    pub(crate) hits: Vec<Hit>,
    /// CSR offsets per pixel (row-major), length `width*height + 1`.
    pub(crate) pixel_start: Vec<u32>,
}

pub(crate) struct TileGrid {
    pub tile_size: usize,
    pub tiles_x: usize,
    pub tiles_y: usize,
    pub width: usize,
    pub height: usize,
}

impl TileGrid {
    pub fn new(width: usize, height: usize, tile_size: usize) -> Self {
        TileGrid {
            tile_size,
            tiles_x: width.div_ceil(tile_size),
            tiles_y: height.div_ceil(tile_size),
            width,
            height,
        }
    }

    pub fn tile_count(&self) -> usize {
        self.tiles_x * self.tiles_y
    }

    /// Pixel rectangle of a tile: (x0, y0, x1, y1) half-open.
    pub fn tile_rect(&self, t: usize) -> (usize, usize, usize, usize) {
        let ty = t / self.tiles_x;
        let tx = t % self.tiles_x;
        let x0 = tx * self.tile_size;
        let y0 = ty * self.tile_size;
        (
            x0,
            y0,
            (x0 + self.tile_size).min(self.width),
            (y0 + self.tile_size).min(self.height),
        )
    }
}

/// Pixel index interval `[lo, hi]` covered by a footprint interval, or None.
fn pixel_span(center: f64, radius: f64, limit: usize) -> Option<(usize, usize)> {
    let lo = (center - radius - 0.5).ceil() as i64 - 1;
    let hi = (center + radius - 0.5).floor() as i64 + 1;
    let lo = lo.max(0);
    let hi = hi.min(limit as i64 - 1);
    if lo > hi {
        None
    } else {
        Some((lo as usize, hi as usize))
    }
}

/// Bin splats into per-tile lists sorted front-to-back by (depth, index).
pub(crate) fn build_tile_lists(splats: &[Prepared], grid: &TileGrid) -> Vec<Vec<u32>> {
    let mut lists: Vec<Vec<u32>> = vec![Vec::new(); grid.tile_count()];
    for (slot, sp) in splats.iter().enumerate() {
        let Some((px0, px1)) = pixel_span(sp.mean.x, sp.radius, grid.width) else {
            continue;
        };
        let Some((py0, py1)) = pixel_span(sp.mean.y, sp.radius, grid.height) else {
            continue;
        };
        let (tx0, tx1) = (px0 / grid.tile_size, px1 / grid.tile_size);
        let (ty0, ty1) = (py0 / grid.tile_size, py1 / grid.tile_size);
        for ty in ty0..=ty1 {
            for tx in tx0..=tx1 {
                lists[ty * grid.tiles_x + tx].push(slot as u32);
            }
        }
    }
    for list in &mut lists {
        list.sort_by(|&a, &b| {
            let (sa, sb) = (&splats[a as usize], &splats[b as usize]);
            sa.depth
                .partial_cmp(&sb.depth)
                .unwrap()
                .then(sa.index.cmp(&sb.index))
        });
    }
    lists
}

#[inline]
pub(crate) fn contribution(sp: &Prepared, px: f64, py: f64, alpha_min: f64) -> Option<f64> {
    let d = Vector2::new(px - sp.mean.x, py - sp.mean.y);
    let q = d.dot(&(sp.inv_cov * d));
    let alpha_prime = sp.alpha * (-0.5 * q).exp();
    if alpha_prime < alpha_min {
        None
    } else {
        Some(alpha_prime)
    }
}

struct TileResult {
    /// (r, g, b, depth) per tile pixel, row-major within the tile.
    pixels: Vec<[f64; 4]>,
    /// Touch counts aligned with the tile's splat list.
    touches: Vec<u32>,
    /// Blend records per tile pixel.
    hits: Vec<Hit>,
    hit_start: Vec<u32>,
}

fn render_tile(
    tile: usize,
    splats: &[Prepared],
    list: &[u32],
    grid: &TileGrid,
    background: [f32; 3],
    cfg: &RenderConfig,
    record: bool,
) -> TileResult {
    let (x0, y0, x1, y1) = grid.tile_rect(tile);
    let (tw, th) = (x1 - x0, y1 - y0);
    let mut pixels = vec![[0.0f64; 4]; tw * th];
    let mut touches = vec![0u32; list.len()];
    let mut hits = Vec::new();
    let mut hit_start = Vec::with_capacity(tw * th + 1);
    hit_start.push(0u32);

    let bg = [
        background[0] as f64,
        background[1] as f64,
        background[2] as f64,
    ];
    for y in y0..y1 {
        for x in x0..x1 {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut t = 1.0f64;
            let mut rgb = [0.0f64; 3];
            let mut depth = 0.0f64;
            for (k, &slot) in list.iter().enumerate() {
                if t < cfg.termination {
                    break;
                }
                let sp = &splats[slot as usize];
                let Some(alpha_prime) = contribution(sp, px, py, cfg.alpha_min) else {
                    continue;
                };
                let w = alpha_prime * t;
                rgb[0] += sp.rgb[0] * w;
                rgb[1] += sp.rgb[1] * w;
                rgb[2] += sp.rgb[2] * w;
                depth += sp.depth * w;
                touches[k] += 1;
                if record {
                    hits.push(Hit {
                        index: sp.index,
                        alpha_prime,
                    });
                }
                t *= 1.0 - alpha_prime;
            }
            rgb[0] += t * bg[0];
            rgb[1] += t * bg[1];
            rgb[2] += t * bg[2];
            depth += t * cfg.far_plane;
            let out = &mut pixels[(y - y0) * tw + (x - x0)];
            *out = [rgb[0], rgb[1], rgb[2], depth];
            hit_start.push(hits.len() as u32);
        }
    }
    TileResult {
        pixels,
        touches,
        hits,
        hit_start,
    }
}

pub(crate) fn finalize_images(
    width: usize,
    height: usize,
    raw: &[[f64; 4]],
    far: f64,
) -> (Image, Image) {
    let mut color = Vec::with_capacity(width * height * 3);
    let mut depth = Vec::with_capacity(width * height);
    for px in raw {
        color.push((px[0].clamp(0.0, 1.0)) as f32);
        color.push((px[1].clamp(0.0, 1.0)) as f32);
        color.push((px[2].clamp(0.0, 1.0)) as f32);
        depth.push(((px[3] / far).clamp(0.0, 1.0)) as f32);
    }
    (
        Image::new(width as u32, height as u32, 3, color).expect("color image in range"),
        Image::new(width as u32, height as u32, 1, depth).expect("depth image in range"),
    )
}

fn rasterize_impl(
    set: &GaussianSet,
    cam: &Camera,
    background: [f32; 3],
    cfg: &RenderConfig,
    record: bool,
) -> (RenderOutput, Option<ForwardState>, Vec<f64>) {
    let (width, height) = (cam.width() as usize, cam.height() as usize);
    let (splats, skipped_degenerate) = prepare_set(set, cam, cfg, true);
    let grid = TileGrid::new(width, height, cfg.tile_size);
    let lists = build_tile_lists(&splats, &grid);

    let results: Vec<TileResult> = (0..grid.tile_count())
        .into_par_iter()
        .map(|t| render_tile(t, &splats, &lists[t], &grid, background, cfg, record))
        .collect();

    // Merge in tile order so the output never depends on scheduling.
    let mut raw = vec![[0.0f64; 4]; width * height];
    let mut touch = vec![0u32; set.count()];
    for (t, res) in results.iter().enumerate() {
        let (x0, y0, x1, y1) = grid.tile_rect(t);
        let tw = x1 - x0;
        for y in y0..y1 {
            for x in x0..x1 {
                raw[y * width + x] = res.pixels[(y - y0) * tw + (x - x0)];
            }
        }
        for (k, &slot) in lists[t].iter().enumerate() {
            touch[splats[slot as usize].index as usize] += res.touches[k];
        }
    }

    let state = if record {
        let mut hits = Vec::new();
        let mut pixel_start = vec![0u32; width * height + 1];
        // Walk pixels row-major, pulling each pixel's records from its tile.
        for y in 0..height {
            for x in 0..width {
                let t = (y / cfg.tile_size) * grid.tiles_x + x / cfg.tile_size;
                let res = &results[t];
                let (x0, y0, x1, _) = grid.tile_rect(t);
                let local = (y - y0) * (x1 - x0) + (x - x0);
                let (s, e) = (
                    res.hit_start[local] as usize,
                    res.hit_start[local + 1] as usize,
                );
                hits.extend_from_slice(&res.hits[s..e]);
                pixel_start[y * width + x + 1] = hits.len() as u32;
            }
        }
        Some(ForwardState {
            count: set.count(),
            cam: cam.clone(),
            background,
            cfg: cfg.clone(),
            hits,
            pixel_start,
        })
    } else {
        None
    };

    let (color, depth) = finalize_images(width, height, &raw, cfg.far_plane);
    let mut color64 = Vec::with_capacity(width * height * 3);
    for px in &raw {
        color64.extend_from_slice(&px[..3]);
    }
    (
        RenderOutput {
            color,
            depth,
            per_gaussian_touch_count: touch,
            skipped_degenerate,
        },
        state,
        color64,
    )
}

/// Tiled forward render; deterministic for fixed inputs regardless of the
/// rayon pool size.
pub fn rasterize(
    set: &GaussianSet,
    cam: &Camera,
    background: [f32; 3],
    cfg: &RenderConfig,
) -> Result<RenderOutput, RenderError> {
    if set.sh_degree() > crate::sh::MAX_SH_DEGREE {
        return Err(RenderError::UnsupportedShDegree(set.sh_degree()));
    }
    Ok(rasterize_impl(set, cam, background, cfg, false).0)
}

/// Forward render returning the unquantized f64 color buffer, row-major RGB.
/// Gradient verification differentiates this, so that f32 image quantization
/// does not pollute finite differences.
pub fn rasterize_f64(
    set: &GaussianSet,
    cam: &Camera,
    background: [f32; 3],
    cfg: &RenderConfig,
) -> Result<Vec<f64>, RenderError> {
    if set.sh_degree() > crate::sh::MAX_SH_DEGREE {
        return Err(RenderError::UnsupportedShDegree(set.sh_degree()));
    }
    Ok(rasterize_impl(set, cam, background, cfg, false).2)
}

/// Forward render that also records per-pixel blending state for
/// [`crate::rasterize_backward`].
pub fn rasterize_with_state(
    set: &GaussianSet,
    cam: &Camera,
    background: [f32; 3],
    cfg: &RenderConfig,
) -> Result<(RenderOutput, ForwardState), RenderError> {
    if set.sh_degree() > crate::sh::MAX_SH_DEGREE {
        return Err(RenderError::UnsupportedShDegree(set.sh_degree()));
    }
    let (out, state, _) = rasterize_impl(set, cam, background, cfg, true);
    Ok((out, state.expect("state recorded")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use igs_core::Gaussian;

    const IDENTITY: [f32; 9] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

    fn cam64() -> Camera {
        Camera::new(50.0, 50.0, 32.0, 32.0, IDENTITY, [0.0; 3], 64, 64).unwrap()
    }

    /// A Gaussian whose SH DC produces exactly this linear color.
    fn flat_color(mu: [f32; 3], scale: f32, opacity: f32, rgb: [f32; 3]) -> Gaussian {
        let c0 = 0.282_094_791_773_878_14_f32;
        Gaussian::flat(
            mu,
            [1.0, 0.0, 0.0, 0.0],
            [scale; 3],
            opacity,
            [
                (rgb[0] - 0.5) / c0,
                (rgb[1] - 0.5) / c0,
                (rgb[2] - 0.5) / c0,
            ],
        )
    }

    #[test]
    fn empty_set_renders_background() {
        let set = GaussianSet::empty(0);
        let out = rasterize(&set, &cam64(), [0.25, 0.5, 0.75], &RenderConfig::default()).unwrap();
        for y in 0..64 {
            for x in 0..64 {
                assert_eq!(out.color.value(x, y, 0), 0.25);
                assert_eq!(out.color.value(x, y, 1), 0.5);
                assert_eq!(out.color.value(x, y, 2), 0.75);
            }
        }
        assert!(out.per_gaussian_touch_count.is_empty());
    }

    #[test]
    fn opaque_gaussian_at_pixel_center_paints_its_color() {
        // Mean projects exactly onto the center of pixel (32, 32).
        let cam = Camera::new(50.0, 50.0, 32.5, 32.5, IDENTITY, [0.0; 3], 64, 64).unwrap();
        let g = flat_color([0.0, 0.0, 2.0], 0.2, 1.0, [0.9, 0.3, 0.1]);
        let set = GaussianSet::from_gaussians(0, &[g]).unwrap();
        let out = rasterize(&set, &cam, [0.0; 3], &RenderConfig::default()).unwrap();
        // alpha' = 1 exactly at the mean, so the pixel is the splat color.
        assert!((out.color.value(32, 32, 0) - 0.9).abs() < 1e-6);
        assert!((out.color.value(32, 32, 1) - 0.3).abs() < 1e-6);
        assert!((out.color.value(32, 32, 2) - 0.1).abs() < 1e-6);
    }

    #[test]
    fn two_splat_blend_matches_hand_computation() {
        let cam = Camera::new(50.0, 50.0, 32.5, 32.5, IDENTITY, [0.0; 3], 64, 64).unwrap();
        // Both means project onto the pixel (32, 32) center; front at z=1, back at z=2.
        let front = flat_color([0.0, 0.0, 1.0], 0.2, 0.6, [1.0, 0.0, 0.0]);
        let back = flat_color([0.0, 0.0, 2.0], 0.4, 0.5, [0.0, 1.0, 0.0]);
        let set = GaussianSet::from_gaussians(0, &[back, front]).unwrap();
        let out = rasterize(&set, &cam, [0.0; 3], &RenderConfig::default()).unwrap();
        // 0.6 * (1,0,0) + 0.4 * 0.5 * (0,1,0) = (0.6, 0.2, 0)
        assert!((out.color.value(32, 32, 0) - 0.6).abs() < 1e-6);
        assert!((out.color.value(32, 32, 1) - 0.2).abs() < 1e-6);
        assert!((out.color.value(32, 32, 2) - 0.0).abs() < 1e-6);
    }

    #[test]
    fn runs_are_bit_identical() {
        let mut gs = Vec::new();
        for i in 0..40 {
            let fi = i as f32;
            gs.push(flat_color(
                [0.3 * (fi * 0.7).sin(), 0.3 * (fi * 1.3).cos(), 2.0 + 0.1 * fi],
                0.05 + 0.01 * (i % 5) as f32,
                0.1 + 0.02 * (i % 7) as f32,
                [0.2, 0.5, 0.8],
            ));
        }
        let set = GaussianSet::from_gaussians(0, &gs).unwrap();
        let a = rasterize(&set, &cam64(), [0.0; 3], &RenderConfig::default()).unwrap();
        let b = rasterize(&set, &cam64(), [0.0; 3], &RenderConfig::default()).unwrap();
        assert_eq!(a.color.values(), b.color.values());
        assert_eq!(a.depth.values(), b.depth.values());
        assert_eq!(a.per_gaussian_touch_count, b.per_gaussian_touch_count);
    }

    #[test]
    fn equal_depth_ties_break_by_index() {
        let cam = Camera::new(50.0, 50.0, 32.5, 32.5, IDENTITY, [0.0; 3], 64, 64).unwrap();
        let a = flat_color([0.0, 0.0, 2.0], 0.2, 0.6, [1.0, 0.0, 0.0]);
        let b = flat_color([0.0, 0.0, 2.0], 0.2, 0.6, [0.0, 0.0, 1.0]);
        let cfg = RenderConfig::default();
        let set_ab = GaussianSet::from_gaussians(0, &[a.clone(), b.clone()]).unwrap();
        let out_ab = rasterize(&set_ab, &cam, [0.0; 3], &cfg).unwrap();
        // Index 0 blends first: 0.6*red + 0.4*0.6*blue.
        assert!((out_ab.color.value(32, 32, 0) - 0.6).abs() < 1e-6);
        assert!((out_ab.color.value(32, 32, 2) - 0.24).abs() < 1e-6);
        // Swapping two identical splats leaves the output bit-identical.
        let set_aa = GaussianSet::from_gaussians(0, &[a.clone(), a.clone()]).unwrap();
        let set_aa_swapped = GaussianSet::from_gaussians(0, &[a.clone(), a]).unwrap();
        let o1 = rasterize(&set_aa, &cam, [0.0; 3], &cfg).unwrap();
        let o2 = rasterize(&set_aa_swapped, &cam, [0.0; 3], &cfg).unwrap();
        assert_eq!(o1.color.values(), o2.color.values());
    }

    #[test]
    fn transmittance_partition_keeps_pixels_in_range() {
        let mut gs = Vec::new();
        for i in 0..30 {
            gs.push(flat_color(
                [0.0, 0.0, 1.0 + 0.05 * i as f32],
                0.3,
                0.9,
                [1.0, 1.0, 1.0],
            ));
        }
        let set = GaussianSet::from_gaussians(0, &gs).unwrap();
        let out = rasterize(&set, &cam64(), [1.0; 3], &RenderConfig::default()).unwrap();
        for v in out.color.values() {
            assert!(*v >= 0.0 && *v <= 1.0);
        }
    }

    #[test]
    fn depth_map_is_expected_depth_over_far() {
        let cam = Camera::new(50.0, 50.0, 32.5, 32.5, IDENTITY, [0.0; 3], 64, 64).unwrap();
        let g = flat_color([0.0, 0.0, 2.0], 0.2, 1.0, [0.5; 3]);
        let set = GaussianSet::from_gaussians(0, &[g]).unwrap();
        let cfg = RenderConfig::default();
        let out = rasterize(&set, &cam, [0.0; 3], &cfg).unwrap();
        // Fully opaque at the center pixel: depth = z / far.
        assert!((out.depth.value(32, 32, 0) as f64 - 2.0 / cfg.far_plane).abs() < 1e-9);
        // Far corner is background: depth = 1.
        assert_eq!(out.depth.value(0, 0, 0), 1.0);
    }
}
