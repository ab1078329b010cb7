//! Loadable weights for the motion network, plus the "IGSW" file format.
//!
//! IGSW layout (all little-endian): magic `IGSW`, u32 version (1), u32 C,
//! u32 L, u32 h, u32 modulation hidden size, then raw f32 tensors in fixed
//! order: per layer `ln1_gain, ln1_bias, wq, bq, wk, bk, wv, bv, wo, bo,
//! ln2_gain, ln2_bias, ff_w1, ff_b1, ff_w2, ff_b2`; then the modulation
//! network `w1, b1, w2, b2`; the decode head `w, b` comes last. Matrices
//! are row-major with shapes documented on the fields.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use igs_core::Camera;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::MotionError;

pub const IGSW_MAGIC: &[u8; 4] = b"IGSW";

/// One pre-norm residual block: self-attention then feed-forward.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionLayerWeights {
    pub ln1_gain: Vec<f32>, // C
    pub ln1_bias: Vec<f32>, // C
    pub wq: Vec<f32>,       // C x C
    pub bq: Vec<f32>,       // C
    pub wk: Vec<f32>,       // C x C
    pub bk: Vec<f32>,       // C
    pub wv: Vec<f32>,       // C x C
    pub bv: Vec<f32>,       // C
    pub wo: Vec<f32>,       // C x C
    pub bo: Vec<f32>,       // C
    pub ln2_gain: Vec<f32>, // C
    pub ln2_bias: Vec<f32>, // C
    pub ff_w1: Vec<f32>,    // 4C x C
    pub ff_b1: Vec<f32>,    // 4C
    pub ff_w2: Vec<f32>,    // C x 4C
    pub ff_b2: Vec<f32>,    // C
}

impl AttentionLayerWeights {
    pub fn zeroed(c: usize) -> Self {
        AttentionLayerWeights {
            ln1_gain: vec![1.0; c],
            ln1_bias: vec![0.0; c],
            wq: vec![0.0; c * c],
            bq: vec![0.0; c],
            wk: vec![0.0; c * c],
            bk: vec![0.0; c],
            wv: vec![0.0; c * c],
            bv: vec![0.0; c],
            wo: vec![0.0; c * c],
            bo: vec![0.0; c],
            ln2_gain: vec![1.0; c],
            ln2_bias: vec![0.0; c],
            ff_w1: vec![0.0; 4 * c * c],
            ff_b1: vec![0.0; 4 * c],
            ff_w2: vec![0.0; 4 * c * c],
            ff_b2: vec![0.0; c],
        }
    }
}

/// Two-layer network mapping a pose-and-depth embedding (camera origin,
/// forward axis, mean depth: 7 values) to per-channel (scale, shift).
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationNet {
    pub hidden: usize,
    pub w1: Vec<f32>, // hidden x 7
    pub b1: Vec<f32>, // hidden
    pub w2: Vec<f32>, // 2C x hidden
    pub b2: Vec<f32>, // 2C
}

impl ModulationNet {
    /// Zero weights with bias fixed at (scale 1, shift 0): the identity.
    pub fn identity(c: usize, hidden: usize) -> Self {
        let mut b2 = vec![0.0; 2 * c];
        b2[..c].fill(1.0);
        ModulationNet {
            hidden,
            w1: vec![0.0; hidden * 7],
            b1: vec![0.0; hidden],
            w2: vec![0.0; 2 * c * hidden],
            b2,
        }
    }

    pub fn output_channels(&self) -> usize {
        self.b2.len() / 2
    }

    /// Per-channel (scale, shift) for a view.
    pub fn forward(&self, cam: &Camera, mean_depth: f64) -> (Vec<f64>, Vec<f64>) {
        let origin = cam.position();
        let fwd = cam.forward();
        let input = [
            origin[0], origin[1], origin[2], fwd[0], fwd[1], fwd[2], mean_depth,
        ];
        let mut h = vec![0.0f64; self.hidden];
        for (i, hv) in h.iter_mut().enumerate() {
            let mut acc = self.b1[i] as f64;
            for (j, x) in input.iter().enumerate() {
                acc += self.w1[i * 7 + j] as f64 * x;
            }
            *hv = acc.tanh();
        }
        let c = self.output_channels();
        let mut out = vec![0.0f64; 2 * c];
        for (i, ov) in out.iter_mut().enumerate() {
            let mut acc = self.b2[i] as f64;
            for (j, hv) in h.iter().enumerate() {
                acc += self.w2[i * self.hidden + j] as f64 * hv;
            }
            *ov = acc;
        }
        let shift = out.split_off(c);
        (out, shift)
    }
}

/// Linear map from motion features to (dmu, drot raw).
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeHead {
    pub w: Vec<f32>, // 7 x C
    pub b: Vec<f32>, // 7
}

impl DecodeHead {
    pub fn zeroed(c: usize) -> Self {
        DecodeHead {
            w: vec![0.0; 7 * c],
            b: vec![0.0; 7],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgmWeights {
    pub channels: usize,
    pub heads: usize,
    pub layers: Vec<AttentionLayerWeights>,
    pub modulation: ModulationNet,
    pub head: DecodeHead,
}

impl AgmWeights {
    /// All-zero network: attention and feed-forward reduce to the residual
    /// identity, modulation is the identity, the decode head emits no motion.
    pub fn zeroed(channels: usize, layers: usize, heads: usize, mod_hidden: usize) -> Self {
        AgmWeights {
            channels,
            heads,
            layers: (0..layers).map(|_| AttentionLayerWeights::zeroed(channels)).collect(),
            modulation: ModulationNet::identity(channels, mod_hidden),
            head: DecodeHead::zeroed(channels),
        }
    }

    /// Small random weights for exercising the full network; deterministic
    /// in the seed. Modulation stays the identity.
    pub fn randomized(
        channels: usize,
        layers: usize,
        heads: usize,
        mod_hidden: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = Self::zeroed(channels, layers, heads, mod_hidden);
        let scale = 0.3 / (channels as f32).sqrt();
        let mut fill = |v: &mut Vec<f32>, rng: &mut ChaCha8Rng| {
            for x in v.iter_mut() {
                *x = rng.gen_range(-scale..scale);
            }
        };
        for layer in &mut w.layers {
            fill(&mut layer.wq, &mut rng);
            fill(&mut layer.bq, &mut rng);
            fill(&mut layer.wk, &mut rng);
            fill(&mut layer.bk, &mut rng);
            fill(&mut layer.wv, &mut rng);
            fill(&mut layer.bv, &mut rng);
            fill(&mut layer.wo, &mut rng);
            fill(&mut layer.bo, &mut rng);
            fill(&mut layer.ff_w1, &mut rng);
            fill(&mut layer.ff_b1, &mut rng);
            fill(&mut layer.ff_w2, &mut rng);
            fill(&mut layer.ff_b2, &mut rng);
        }
        fill(&mut w.head.w, &mut rng);
        w
    }

    pub fn validate(&self) -> Result<(), MotionError> {
        let c = self.channels;
        if c == 0 || self.heads == 0 || c % self.heads != 0 {
            return Err(MotionError::BadConfig(format!(
                "channels {c} must be a positive multiple of heads {}",
                self.heads
            )));
        }
        let check = |name: &str, v: &[f32], len: usize| -> Result<(), MotionError> {
            if v.len() != len {
                return Err(MotionError::DimensionMismatch(format!(
                    "{name}: expected {len} values, got {}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(MotionError::DimensionMismatch(format!(
                    "{name} contains non-finite values"
                )));
            }
            Ok(())
        };
        for (i, l) in self.layers.iter().enumerate() {
            let p = |n: &str| format!("layer {i} {n}");
            check(&p("ln1_gain"), &l.ln1_gain, c)?;
            check(&p("ln1_bias"), &l.ln1_bias, c)?;
            check(&p("wq"), &l.wq, c * c)?;
            check(&p("bq"), &l.bq, c)?;
            check(&p("wk"), &l.wk, c * c)?;
            check(&p("bk"), &l.bk, c)?;
            check(&p("wv"), &l.wv, c * c)?;
            check(&p("bv"), &l.bv, c)?;
            check(&p("wo"), &l.wo, c * c)?;
            check(&p("bo"), &l.bo, c)?;
            check(&p("ln2_gain"), &l.ln2_gain, c)?;
            check(&p("ln2_bias"), &l.ln2_bias, c)?;
            check(&p("ff_w1"), &l.ff_w1, 4 * c * c)?;
            check(&p("ff_b1"), &l.ff_b1, 4 * c)?;
            check(&p("ff_w2"), &l.ff_w2, 4 * c * c)?;
            check(&p("ff_b2"), &l.ff_b2, c)?;
        }
        check("modulation w1", &self.modulation.w1, self.modulation.hidden * 7)?;
        check("modulation b1", &self.modulation.b1, self.modulation.hidden)?;
        check(
            "modulation w2",
            &self.modulation.w2,
            2 * c * self.modulation.hidden,
        )?;
        check("modulation b2", &self.modulation.b2, 2 * c)?;
        check("head w", &self.head.w, 7 * c)?;
        check("head b", &self.head.b, 7)?;
        Ok(())
    }

    fn tensors(&self) -> Vec<&[f32]> {
        let mut t: Vec<&[f32]> = Vec::new();
        for l in &self.layers {
            t.extend([
                l.ln1_gain.as_slice(),
                l.ln1_bias.as_slice(),
                l.wq.as_slice(),
                l.bq.as_slice(),
                l.wk.as_slice(),
                l.bk.as_slice(),
                l.wv.as_slice(),
                l.bv.as_slice(),
                l.wo.as_slice(),
                l.bo.as_slice(),
                l.ln2_gain.as_slice(),
                l.ln2_bias.as_slice(),
                l.ff_w1.as_slice(),
                l.ff_b1.as_slice(),
                l.ff_w2.as_slice(),
                l.ff_b2.as_slice(),
            ]);
        }
        t.extend([
            self.modulation.w1.as_slice(),
            self.modulation.b1.as_slice(),
            self.modulation.w2.as_slice(),
            self.modulation.b2.as_slice(),
            self.head.w.as_slice(),
            self.head.b.as_slice(),
        ]);
        t
    }
}

pub fn write_weights(weights: &AgmWeights, path: &Path) -> Result<(), MotionError> {
    weights.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(IGSW_MAGIC)?;
    for v in [
        1u32,
        weights.channels as u32,
        weights.layers.len() as u32,
        weights.heads as u32,
        weights.modulation.hidden as u32,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    for tensor in weights.tensors() {
        for x in tensor {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_weights(path: &Path) -> Result<AgmWeights, MotionError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != IGSW_MAGIC {
        return Err(MotionError::BadWeightsFile(format!("bad magic {magic:?}")));
    }
    let mut buf = [0u8; 4];
    let mut next_u32 = |r: &mut BufReader<File>| -> Result<u32, MotionError> {
        r.read_exact(&mut buf)?;
        Ok(u32::from_le_bytes(buf))
    };
    let version = next_u32(&mut r)?;
    if version != 1 {
        return Err(MotionError::BadWeightsFile(format!(
            "unsupported version {version}"
        )));
    }
    let c = next_u32(&mut r)? as usize;
    let layers = next_u32(&mut r)? as usize;
    let heads = next_u32(&mut r)? as usize;
    let hidden = next_u32(&mut r)? as usize;

    let mut out = AgmWeights::zeroed(c, layers, heads, hidden);
    let mut read_into = |v: &mut Vec<f32>, r: &mut BufReader<File>| -> Result<(), MotionError> {
        let mut fbuf = [0u8; 4];
        for x in v.iter_mut() {
            r.read_exact(&mut fbuf)?;
            *x = f32::from_le_bytes(fbuf);
        }
        Ok(())
    };
    for i in 0..layers {
        let l = &mut out.layers[i];
        read_into(&mut l.ln1_gain, &mut r)?;
        read_into(&mut l.ln1_bias, &mut r)?;
        read_into(&mut l.wq, &mut r)?;
        read_into(&mut l.bq, &mut r)?;
        read_into(&mut l.wk, &mut r)?;
        read_into(&mut l.bk, &mut r)?;
        read_into(&mut l.wv, &mut r)?;
        read_into(&mut l.bv, &mut r)?;
        read_into(&mut l.wo, &mut r)?;
        read_into(&mut l.bo, &mut r)?;
        read_into(&mut l.ln2_gain, &mut r)?;
        read_into(&mut l.ln2_bias, &mut r)?;
        read_into(&mut l.ff_w1, &mut r)?;
        read_into(&mut l.ff_b1, &mut r)?;
        read_into(&mut l.ff_w2, &mut r)?;
        read_into(&mut l.ff_b2, &mut r)?;
    }
    read_into(&mut out.modulation.w1, &mut r)?;
    read_into(&mut out.modulation.b1, &mut r)?;
    read_into(&mut out.modulation.w2, &mut r)?;
    read_into(&mut out.modulation.b2, &mut r)?;
    read_into(&mut out.head.w, &mut r)?;
    read_into(&mut out.head.b, &mut r)?;
    out.validate()?;
    Ok(out)
}
