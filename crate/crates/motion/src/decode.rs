//! Motion decode, application, and head calibration.

use igs_core::{quat, GaussianSet, MotionField};
use nalgebra::{DMatrix, DVector};

use crate::weights::DecodeHead;
use crate::MotionError;

/// Displacements below this norm, and rotation deltas below this angle
/// (radians), count as "not moved".
pub const MOVED_EPS: f64 = 1e-6;

/// Linear decode of per-Gaussian features into a motion field.
///
/// The decoded rotation delta stays a raw 4-vector; it is normalized when
/// applied. Sub-threshold residuals are zeroed outright so that a masked
/// field is exactly the field that was applied, which keeps the residual
/// codec lossless.
pub fn decode_motion(
    features: &[f32],
    count: usize,
    head: &DecodeHead,
) -> Result<MotionField, MotionError> {
    if count == 0 {
        return Ok(MotionField::identity(0));
    }
    if features.len() % count != 0 {
        return Err(MotionError::DimensionMismatch(format!(
            "feature length {} not divisible by count {count}",
            features.len()
        )));
    }
    let c = features.len() / count;
    if head.w.len() != 7 * c {
        return Err(MotionError::DimensionMismatch(format!(
            "decode head expects {} channels, features have {c}",
            head.w.len() / 7
        )));
    }

    let mut dmu = vec![0.0f32; 3 * count];
    let mut drot = vec![0.0f32; 4 * count];
    let mut moved = vec![false; count];
    for i in 0..count {
        let z = &features[i * c..(i + 1) * c];
        let mut out = [0.0f64; 7];
        for (row, o) in out.iter_mut().enumerate() {
            let mut acc = head.b[row] as f64;
            for (col, zv) in z.iter().enumerate() {
                acc += head.w[row * c + col] as f64 * *zv as f64;
            }
            *o = acc;
        }
        let d = [out[0], out[1], out[2]];
        let q_raw = [out[3], out[4], out[5], out[6]];
        let disp = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let angle = quat::rotation_angle(quat::normalize(q_raw));
        if disp > MOVED_EPS || angle > MOVED_EPS {
            moved[i] = true;
            for a in 0..3 {
                dmu[3 * i + a] = d[a] as f32;
            }
            for a in 0..4 {
                drot[4 * i + a] = q_raw[a] as f32;
            }
        } else {
            drot[4 * i] = 1.0;
        }
    }
    MotionField::new(dmu, drot, moved).map_err(MotionError::from)
}

/// Translate positions and compose rotations; scale, opacity and SH pass
/// through bit-identically.
///
/// Identity entries (zero displacement, exact identity quaternion) are
/// no-ops down to the bit level, so applying a field with an empty mask
/// reproduces the input exactly.
pub fn apply_motion(set: &GaussianSet, motion: &MotionField) -> Result<GaussianSet, MotionError> {
    if set.count() != motion.count() {
        return Err(MotionError::CountMismatch {
            set: set.count(),
            field: motion.count(),
        });
    }
    let n = set.count();
    let mut positions = set.positions().to_vec();
    let mut rotations = set.rotations().to_vec();
    for i in 0..n {
        let d = motion.dmu_of(i);
        if d != [0.0, 0.0, 0.0] {
            positions[3 * i] += d[0];
            positions[3 * i + 1] += d[1];
            positions[3 * i + 2] += d[2];
        }
        let dq = motion.drot_of(i);
        if !quat::is_identity_raw(dq) {
            let r = set.rotation(i);
            let composed = quat::normalize(quat::multiply(
                quat::normalize([r[0] as f64, r[1] as f64, r[2] as f64, r[3] as f64]),
                quat::normalize([dq[0] as f64, dq[1] as f64, dq[2] as f64, dq[3] as f64]),
            ));
            for a in 0..4 {
                rotations[4 * i + a] = composed[a] as f32;
            }
        }
    }
    GaussianSet::new(
        set.sh_degree(),
        positions,
        rotations,
        set.scales().to_vec(),
        set.opacities().to_vec(),
        set.sh().to_vec(),
    )
    .map_err(MotionError::from)
}

/// Ridge least-squares fit of the decode head from (feature, motion) pairs.
///
/// The bias is fit through an augmented ones column and regularized along
/// with the weights. Returns the head and the RMS residual.
pub fn calibrate_head(
    samples: &[(Vec<f32>, [f32; 7])],
    ridge: f64,
) -> Result<(DecodeHead, f64), MotionError> {
    let s = samples.len();
    if s == 0 {
        return Err(MotionError::BadConfig("no calibration samples".to_string()));
    }
    let c = samples[0].0.len();
    if samples.iter().any(|(f, _)| f.len() != c) {
        return Err(MotionError::DimensionMismatch(
            "calibration features have inconsistent lengths".to_string(),
        ));
    }
    if s < c {
        return Err(MotionError::BadConfig(format!(
            "need at least {c} samples, got {s}"
        )));
    }
    let d = c + 1; // augmented with a ones column for the bias
    let mut xtx = DMatrix::<f64>::zeros(d, d);
    let mut xty = DMatrix::<f64>::zeros(d, 7);
    for (f, y) in samples {
        let mut row = DVector::<f64>::zeros(d);
        for (j, v) in f.iter().enumerate() {
            row[j] = *v as f64;
        }
        row[c] = 1.0;
        xtx += &row * row.transpose();
        for (t, yv) in y.iter().enumerate() {
            for j in 0..d {
                xty[(j, t)] += row[j] * *yv as f64;
            }
        }
    }
    for j in 0..d {
        xtx[(j, j)] += ridge;
    }
    let chol = xtx.cholesky().ok_or(MotionError::RankDeficient)?;
    let solution = chol.solve(&xty); // d x 7

    let mut head = DecodeHead {
        w: vec![0.0; 7 * c],
        b: vec![0.0; 7],
    };
    for t in 0..7 {
        for j in 0..c {
            head.w[t * c + j] = solution[(j, t)] as f32;
        }
        head.b[t] = solution[(c, t)] as f32;
    }

    let mut sq = 0.0f64;
    for (f, y) in samples {
        for t in 0..7 {
            let mut pred = head.b[t] as f64;
            for (j, v) in f.iter().enumerate() {
                pred += head.w[t * c + j] as f64 * *v as f64;
            }
            let r = pred - y[t] as f64;
            sq += r * r;
        }
    }
    let rms = (sq / (s as f64 * 7.0)).sqrt();
    Ok((head, rms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use igs_core::Gaussian;

    fn simple_set(n: usize) -> GaussianSet {
        let gs: Vec<Gaussian> = (0..n)
            .map(|i| {
                Gaussian::flat(
                    [i as f32, 0.0, 2.0],
                    [1.0, 0.0, 0.0, 0.0],
                    [0.1; 3],
                    0.5,
                    [0.1; 3],
                )
            })
            .collect();
        GaussianSet::from_gaussians(0, &gs).unwrap()
    }

    #[test]
    fn zero_head_decodes_to_identity_field() {
        let head = DecodeHead::zeroed(4);
        let features = vec![0.3f32; 3 * 4];
        let field = decode_motion(&features, 3, &head).unwrap();
        assert_eq!(field.moved_count(), 0);
        for i in 0..3 {
            assert_eq!(field.dmu_of(i), [0.0; 3]);
            assert_eq!(field.drot_of(i), [1.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn selector_head_copies_channels_into_dmu() {
        let c = 4;
        let mut head = DecodeHead::zeroed(c);
        for a in 0..3 {
            head.w[a * c + a] = 1.0; // dmu_a = z_a
        }
        let features = vec![0.5f32, -0.25, 0.125, 9.0];
        let field = decode_motion(&features, 1, &head).unwrap();
        assert_eq!(field.dmu_of(0), [0.5, -0.25, 0.125]);
        assert!(field.moved()[0]);
    }

    #[test]
    fn identity_motion_is_a_bitwise_noop() {
        let set = simple_set(4);
        let field = MotionField::identity(4);
        let out = apply_motion(&set, &field).unwrap();
        assert_eq!(set, out);
    }

    #[test]
    fn pure_translation_shifts_positions() {
        let set = simple_set(3);
        let mut dmu = vec![0.0f32; 9];
        for i in 0..3 {
            dmu[3 * i] = 1.0;
        }
        let mut drot = vec![0.0f32; 12];
        for i in 0..3 {
            drot[4 * i] = 1.0;
        }
        let field = MotionField::new(dmu, drot, vec![true; 3]).unwrap();
        let out = apply_motion(&set, &field).unwrap();
        for i in 0..3 {
            assert_eq!(out.position(i)[0], set.position(i)[0] + 1.0);
        }
        assert_eq!(out.scales(), set.scales());
        assert_eq!(out.opacities(), set.opacities());
        assert_eq!(out.sh(), set.sh());
    }

    #[test]
    fn quarter_turns_compose_to_half_turn() {
        let half = std::f64::consts::FRAC_PI_4;
        let q90 = [half.cos() as f32, 0.0, 0.0, half.sin() as f32];
        let g = Gaussian::flat([0.0; 3], q90, [0.1; 3], 0.5, [0.1; 3]);
        let set = GaussianSet::from_gaussians(0, &[g]).unwrap();
        let field = MotionField::new(vec![0.0; 3], q90.to_vec(), vec![true]).unwrap();
        let out = apply_motion(&set, &field).unwrap();
        let r = out.rotation(0);
        // 180 degrees about z: (0, 0, 0, 1).
        assert!((r[0] as f64).abs() < 1e-6);
        assert!((r[3] as f64).abs() - 1.0 < 1e-6);
        let n = (r.iter().map(|v| (*v as f64).powi(2)).sum::<f64>()).sqrt();
        assert!((n - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn count_mismatch_is_an_error() {
        let set = simple_set(3);
        let field = MotionField::identity(2);
        assert!(matches!(
            apply_motion(&set, &field),
            Err(MotionError::CountMismatch { .. })
        ));
    }

    #[test]
    fn calibration_recovers_exact_linear_map() {
        let c = 3;
        // Ground-truth map: y = W z + b.
        let w_true = [
            [0.5, -0.2, 0.1],
            [0.0, 0.3, -0.6],
            [0.2, 0.2, 0.2],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [-0.4, 0.5, 0.9],
        ];
        let b_true = [0.1, -0.2, 0.3, 0.0, 0.05, -0.05, 0.2];
        let mut samples = Vec::new();
        let mut state = 42u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f32 / (1u64 << 31) as f32) - 0.5
        };
        for _ in 0..40 {
            let z: Vec<f32> = (0..c).map(|_| next()).collect();
            let mut y = [0.0f32; 7];
            for t in 0..7 {
                y[t] = b_true[t];
                for j in 0..c {
                    y[t] += w_true[t][j] * z[j];
                }
            }
            samples.push((z, y));
        }
        let (head, rms) = calibrate_head(&samples, 0.0).unwrap();
        assert!(rms < 1e-6, "rms {rms}");
        for t in 0..7 {
            for j in 0..c {
                assert!((head.w[t * c + j] - w_true[t][j]).abs() < 1e-5);
            }
            assert!((head.b[t] - b_true[t]).abs() < 1e-5);
        }
    }

    #[test]
    fn zero_targets_give_zero_head_with_ridge() {
        let samples: Vec<(Vec<f32>, [f32; 7])> = (0..10)
            .map(|i| (vec![i as f32, 1.0 - i as f32], [0.0; 7]))
            .collect();
        let (head, rms) = calibrate_head(&samples, 1e-3).unwrap();
        assert!(head.w.iter().all(|v| *v == 0.0));
        assert!(head.b.iter().all(|v| *v == 0.0));
        assert_eq!(rms, 0.0);
    }

    #[test]
    fn duplicated_samples_do_not_change_the_fit() {
        let base: Vec<(Vec<f32>, [f32; 7])> = (0..8)
            .map(|i| {
                let z = vec![(i as f32 * 0.37).sin(), (i as f32 * 0.71).cos()];
                let y = [z[0] + 0.5 * z[1], z[1], 0.0, 0.0, 0.0, 0.0, z[0]];
                (z, y)
            })
            .collect();
        let mut doubled = base.clone();
        doubled.extend(base.clone());
        let (h1, _) = calibrate_head(&base, 0.0).unwrap();
        let (h2, _) = calibrate_head(&doubled, 0.0).unwrap();
        for (a, b) in h1.w.iter().zip(h2.w.iter()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn rank_deficient_without_ridge_errors() {
        // All features identical: X^T X singular.
        let samples: Vec<(Vec<f32>, [f32; 7])> =
            (0..10).map(|_| (vec![1.0f32, 1.0], [0.5; 7])).collect();
        assert!(matches!(
            calibrate_head(&samples, 0.0),
            Err(MotionError::RankDeficient)
        ));
        assert!(calibrate_head(&samples, 1e-4).is_ok());
    }
}
