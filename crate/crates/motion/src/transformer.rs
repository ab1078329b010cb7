//! Pre-norm self-attention over anchor tokens.
//!
//! Each of the L blocks is `x += Attn(LN(x)); x += FF(LN(x))`, multi-head,
//! feed-forward expansion 4x, tanh-form GELU, no positional encoding. The
//! softmax denominator and the attention-value reduction range over tokens,
//! so they sum in canonical (sorted) order; everything else is per-token.

use crate::{sorted_sum, AgmWeights, AnchorSet, MotionError};

const LN_EPS: f64 = 1e-5;

pub fn transformer_forward(
    anchors: &AnchorSet,
    weights: &AgmWeights,
) -> Result<AnchorSet, MotionError> {
    weights.validate()?;
    let c = weights.channels;
    if !anchors.has_features() || anchors.channels() != c {
        return Err(MotionError::DimensionMismatch(format!(
            "anchors carry {} channels, weights expect {c}",
            anchors.channels()
        )));
    }
    let m = anchors.count();
    let heads = weights.heads;
    let dh = c / heads;
    let inv_sqrt_dh = 1.0 / (dh as f64).sqrt();

    let mut x: Vec<f64> = anchors.features().iter().map(|v| *v as f64).collect();
    let mut normed = vec![0.0f64; m * c];
    let mut q = vec![0.0f64; m * c];
    let mut k = vec![0.0f64; m * c];
    let mut v = vec![0.0f64; m * c];
    let mut attn_out = vec![0.0f64; m * c];
    let mut scratch = vec![0.0f64; m];
    let mut exps = vec![0.0f64; m];

    for layer in &weights.layers {
        // Attention sub-block.
        layer_norm(&x, m, c, &layer.ln1_gain, &layer.ln1_bias, &mut normed);
        matvec_tokens(&normed, m, c, &layer.wq, &layer.bq, &mut q);
        matvec_tokens(&normed, m, c, &layer.wk, &layer.bk, &mut k);
        matvec_tokens(&normed, m, c, &layer.wv, &layer.bv, &mut v);

        for i in 0..m {
            for h in 0..heads {
                let off = h * dh;
                // Scores against every token.
                let mut max_score = f64::NEG_INFINITY;
                for j in 0..m {
                    let mut dot = 0.0;
                    for d in 0..dh {
                        dot += q[i * c + off + d] * k[j * c + off + d];
                    }
                    let s = dot * inv_sqrt_dh;
                    scratch[j] = s;
                    if s > max_score {
                        max_score = s;
                    }
                }
                for j in 0..m {
                    exps[j] = (scratch[j] - max_score).exp();
                }
                let mut denom_terms = exps.clone();
                let denom = sorted_sum(&mut denom_terms);
                for d in 0..dh {
                    let mut terms: Vec<f64> =
                        (0..m).map(|j| exps[j] * v[j * c + off + d]).collect();
                    attn_out[i * c + off + d] = sorted_sum(&mut terms) / denom;
                }
            }
        }
        // Output projection + residual.
        for i in 0..m {
            for row in 0..c {
                let mut acc = layer.bo[row] as f64;
                for col in 0..c {
                    acc += layer.wo[row * c + col] as f64 * attn_out[i * c + col];
                }
                x[i * c + row] += acc;
            }
        }

        // Feed-forward sub-block.
        layer_norm(&x, m, c, &layer.ln2_gain, &layer.ln2_bias, &mut normed);
        for i in 0..m {
            let tok = &normed[i * c..(i + 1) * c];
            let mut hidden = vec![0.0f64; 4 * c];
            for (row, hv) in hidden.iter_mut().enumerate() {
                let mut acc = layer.ff_b1[row] as f64;
                for (col, t) in tok.iter().enumerate() {
                    acc += layer.ff_w1[row * c + col] as f64 * t;
                }
                *hv = gelu(acc);
            }
            for row in 0..c {
                let mut acc = layer.ff_b2[row] as f64;
                for (col, hv) in hidden.iter().enumerate() {
                    acc += layer.ff_w2[row * 4 * c + col] as f64 * hv;
                }
                x[i * c + row] += acc;
            }
        }
    }

    let features: Vec<f32> = x.iter().map(|v| *v as f32).collect();
    anchors.with_features(c, features, anchors.valid_view_counts().to_vec())
}

fn layer_norm(x: &[f64], m: usize, c: usize, gain: &[f32], bias: &[f32], out: &mut [f64]) {
    for i in 0..m {
        let tok = &x[i * c..(i + 1) * c];
        let mean = tok.iter().sum::<f64>() / c as f64;
        let var = tok.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / c as f64;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        for ch in 0..c {
            out[i * c + ch] = (tok[ch] - mean) * inv * gain[ch] as f64 + bias[ch] as f64;
        }
    }
}

fn matvec_tokens(x: &[f64], m: usize, c: usize, w: &[f32], b: &[f32], out: &mut [f64]) {
    for i in 0..m {
        let tok = &x[i * c..(i + 1) * c];
        for row in 0..c {
            let mut acc = b[row] as f64;
            for (col, t) in tok.iter().enumerate() {
                acc += w[row * c + col] as f64 * t;
            }
            out[i * c + row] = acc;
        }
    }
}

fn gelu(x: f64) -> f64 {
    // tanh approximation.
    const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
    0.5 * x * (1.0 + (SQRT_2_OVER_PI * (x + 0.044715 * x * x * x)).tanh())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchors_with_features(m: usize, c: usize, seed: u64) -> AnchorSet {
        let mut state = seed | 1;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f32 / (1u64 << 31) as f32) - 0.5
        };
        let positions: Vec<f32> = (0..3 * m).map(|_| next()).collect();
        let base = AnchorSet::from_positions(positions, (0..m).collect()).unwrap();
        let features: Vec<f32> = (0..m * c).map(|_| next()).collect();
        base.with_features(c, features, vec![1; m]).unwrap()
    }

    #[test]
    fn zero_weights_are_the_identity() {
        let anchors = anchors_with_features(5, 8, 3);
        let weights = AgmWeights::zeroed(8, 3, 2, 4);
        let out = transformer_forward(&anchors, &weights).unwrap();
        assert_eq!(out.features(), anchors.features());
    }

    #[test]
    fn single_token_closed_form() {
        // With one token the softmax is exactly 1, so the attention output
        // is value(token) through the output projection plus residuals.
        let c = 4;
        let anchors = anchors_with_features(1, c, 17);
        let mut weights = AgmWeights::randomized(c, 1, 2, 4, 5);
        // Keep the feed-forward inactive for a closed-form check.
        weights.layers[0].ff_w1.fill(0.0);
        weights.layers[0].ff_b1.fill(0.0);
        weights.layers[0].ff_w2.fill(0.0);
        weights.layers[0].ff_b2.fill(0.0);
        let out = transformer_forward(&anchors, &weights).unwrap();

        let f: Vec<f64> = anchors.features().iter().map(|v| *v as f64).collect();
        let layer = &weights.layers[0];
        let mut normed = vec![0.0f64; c];
        layer_norm(&f, 1, c, &layer.ln1_gain, &layer.ln1_bias, &mut normed);
        let mut value = vec![0.0f64; c];
        matvec_tokens(&normed, 1, c, &layer.wv, &layer.bv, &mut value);
        for row in 0..c {
            let mut acc = layer.bo[row] as f64;
            for col in 0..c {
                acc += layer.wo[row * c + col] as f64 * value[col];
            }
            let expect = (f[row] + acc) as f32;
            assert!((out.features()[row] - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn permutation_equivariance_is_bit_exact() {
        let m = 13;
        let c = 8;
        let anchors = anchors_with_features(m, c, 23);
        let weights = AgmWeights::randomized(c, 2, 2, 4, 7);
        let out = transformer_forward(&anchors, &weights).unwrap();

        // A fixed non-trivial permutation.
        let perm: Vec<usize> = (0..m).map(|i| (i * 5 + 3) % m).collect();
        let mut pos = Vec::new();
        let mut feats = Vec::new();
        for &p in &perm {
            pos.extend_from_slice(&anchors.positions()[3 * p..3 * p + 3]);
            feats.extend_from_slice(anchors.feature(p));
        }
        let permuted = AnchorSet::from_positions(pos, perm.clone())
            .unwrap()
            .with_features(c, feats, vec![1; m])
            .unwrap();
        let out_perm = transformer_forward(&permuted, &weights).unwrap();

        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(
                out_perm.feature(i),
                out.feature(p),
                "token {p} differs after permutation"
            );
        }
    }

    #[test]
    fn channel_mismatch_is_an_error() {
        let anchors = anchors_with_features(3, 8, 2);
        let weights = AgmWeights::zeroed(16, 1, 4, 4);
        assert!(matches!(
            transformer_forward(&anchors, &weights),
            Err(MotionError::DimensionMismatch(_))
        ));
    }
}
