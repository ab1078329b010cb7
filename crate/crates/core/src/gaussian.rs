use crate::{ValidationError, UNIT_TOLERANCE};

/// SH coefficients per color channel for a given degree.
pub fn sh_coeff_count(degree: u32) -> usize {
    ((degree + 1) * (degree + 1)) as usize
}

/// Total SH scalars per Gaussian (three channels).
pub fn sh_value_count(degree: u32) -> usize {
    3 * sh_coeff_count(degree)
}

/// One anisotropic 3D Gaussian primitive.
///
/// `rot` is a unit quaternion in scalar-first `(w, x, y, z)` order; `scale`
/// holds positive per-axis standard deviations in world units. SH color
/// coefficients are stored channel-major: all R coefficients, then G, then B.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mu: [f32; 3],
    pub rot: [f32; 4],
    pub scale: [f32; 3],
    pub opacity: f32,
    pub sh: Vec<f32>,
}

impl Gaussian {
    /// Degree-0 Gaussian with constant color given as the DC coefficient.
    pub fn flat(mu: [f32; 3], rot: [f32; 4], scale: [f32; 3], opacity: f32, dc: [f32; 3]) -> Self {
        Gaussian {
            mu,
            rot,
            scale,
            opacity,
            sh: vec![dc[0], dc[1], dc[2]],
        }
    }
}

/// A frame's scene: structure-of-arrays storage for `count` Gaussians.
///
/// Attribute layouts: positions `3N`, rotations `4N` (w,x,y,z), scales `3N`,
/// opacities `N`, sh `3 (n+1)^2 N` channel-major per Gaussian. Instances are
/// immutable once constructed and always satisfy the per-Gaussian invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSet {
    count: usize,
    sh_degree: u32,
    positions: Vec<f32>,
    rotations: Vec<f32>,
    scales: Vec<f32>,
    opacities: Vec<f32>,
    sh: Vec<f32>,
}

impl GaussianSet {
    pub fn new(
        sh_degree: u32,
        positions: Vec<f32>,
        rotations: Vec<f32>,
        scales: Vec<f32>,
        opacities: Vec<f32>,
        sh: Vec<f32>,
    ) -> Result<Self, ValidationError> {
        let count = opacities.len();
        let set = GaussianSet {
            count,
            sh_degree,
            positions,
            rotations,
            scales,
            opacities,
            sh,
        };
        validate_gaussian_set(&set)?;
        Ok(set)
    }

    pub fn from_gaussians(sh_degree: u32, gaussians: &[Gaussian]) -> Result<Self, ValidationError> {
        let n = gaussians.len();
        let mut positions = Vec::with_capacity(3 * n);
        let mut rotations = Vec::with_capacity(4 * n);
        let mut scales = Vec::with_capacity(3 * n);
        let mut opacities = Vec::with_capacity(n);
        let mut sh = Vec::with_capacity(sh_value_count(sh_degree) * n);
        for g in gaussians {
            positions.extend_from_slice(&g.mu);
            rotations.extend_from_slice(&g.rot);
            scales.extend_from_slice(&g.scale);
            opacities.push(g.opacity);
            sh.extend_from_slice(&g.sh);
        }
        Self::new(sh_degree, positions, rotations, scales, opacities, sh)
    }

    pub fn empty(sh_degree: u32) -> Self {
        GaussianSet {
            count: 0,
            sh_degree,
            positions: Vec::new(),
            rotations: Vec::new(),
            scales: Vec::new(),
            opacities: Vec::new(),
            sh: Vec::new(),
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn sh_degree(&self) -> u32 {
        self.sh_degree
    }

    /// SH scalars per Gaussian.
    pub fn sh_stride(&self) -> usize {
        sh_value_count(self.sh_degree)
    }

    pub fn positions(&self) -> &[f32] {
        &self.positions
    }

    pub fn rotations(&self) -> &[f32] {
        &self.rotations
    }

    pub fn scales(&self) -> &[f32] {
        &self.scales
    }

    pub fn opacities(&self) -> &[f32] {
        &self.opacities
    }

    pub fn sh(&self) -> &[f32] {
        &self.sh
    }

    pub fn position(&self, i: usize) -> [f32; 3] {
        [
            self.positions[3 * i],
            self.positions[3 * i + 1],
            self.positions[3 * i + 2],
        ]
    }

    pub fn rotation(&self, i: usize) -> [f32; 4] {
        [
            self.rotations[4 * i],
            self.rotations[4 * i + 1],
            self.rotations[4 * i + 2],
            self.rotations[4 * i + 3],
        ]
    }

    pub fn scale(&self, i: usize) -> [f32; 3] {
        [
            self.scales[3 * i],
            self.scales[3 * i + 1],
            self.scales[3 * i + 2],
        ]
    }

    pub fn opacity(&self, i: usize) -> f32 {
        self.opacities[i]
    }

    pub fn sh_of(&self, i: usize) -> &[f32] {
        let s = self.sh_stride();
        &self.sh[i * s..(i + 1) * s]
    }

    pub fn gaussian(&self, i: usize) -> Gaussian {
        Gaussian {
            mu: self.position(i),
            rot: self.rotation(i),
            scale: self.scale(i),
            opacity: self.opacity(i),
            sh: self.sh_of(i).to_vec(),
        }
    }

    /// Diagonal length of the positions' axis-aligned bounding box.
    /// Zero for empty or single-point sets.
    pub fn extent(&self) -> f32 {
        if self.count == 0 {
            return 0.0;
        }
        let mut lo = [f32::INFINITY; 3];
        let mut hi = [f32::NEG_INFINITY; 3];
        for i in 0..self.count {
            for a in 0..3 {
                let v = self.positions[3 * i + a];
                lo[a] = lo[a].min(v);
                hi[a] = hi[a].max(v);
            }
        }
        let d = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }
}

fn check_finite(field: &'static str, values: &[f32]) -> Result<(), ValidationError> {
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(ValidationError::NonFinite { field, index: i });
        }
    }
    Ok(())
}

fn check_len(
    field: &'static str,
    actual: usize,
    expected: usize,
) -> Result<(), ValidationError> {
    if actual != expected {
        return Err(ValidationError::LengthMismatch {
            field,
            expected,
            actual,
        });
    }
    Ok(())
}

/// Audit every invariant of a set, reporting the first violation found.
pub fn validate_gaussian_set(set: &GaussianSet) -> Result<(), ValidationError> {
    let n = set.count;
    check_len("positions", set.positions.len(), 3 * n)?;
    check_len("rotations", set.rotations.len(), 4 * n)?;
    check_len("scales", set.scales.len(), 3 * n)?;
    check_len("opacities", set.opacities.len(), n)?;
    check_len("sh", set.sh.len(), sh_value_count(set.sh_degree) * n)?;

    check_finite("positions", &set.positions)?;
    check_finite("rotations", &set.rotations)?;
    check_finite("scales", &set.scales)?;
    check_finite("opacities", &set.opacities)?;
    check_finite("sh", &set.sh)?;

    for i in 0..n {
        let q = set.rotation(i);
        let norm =
            (q[0] as f64 * q[0] as f64 + q[1] as f64 * q[1] as f64 + q[2] as f64 * q[2] as f64
                + q[3] as f64 * q[3] as f64)
                .sqrt() as f32;
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(ValidationError::NonUnitRotation { index: i, norm });
        }
        for a in 0..3 {
            let s = set.scales[3 * i + a];
            if s <= 0.0 {
                return Err(ValidationError::NonPositiveScale {
                    index: i,
                    component: a,
                    value: s,
                });
            }
        }
        let op = set.opacities[i];
        if !(0.0..=1.0).contains(&op) {
            return Err(ValidationError::OpacityOutOfRange {
                index: i,
                value: op,
            });
        }
    }
    Ok(())
}
