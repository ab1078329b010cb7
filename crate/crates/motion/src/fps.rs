//! Greedy farthest point sampling over Gaussian centers.

use crate::{AnchorSet, MotionError};

/// Indices of `m` points chosen greedily: start at `seed_index`, then
/// repeatedly take the point maximizing the minimum distance to the chosen
/// set. Ties break toward the lowest index.
pub fn sample_anchor_indices(
    positions: &[f32],
    m: usize,
    seed_index: usize,
) -> Result<Vec<usize>, MotionError> {
    let n = positions.len() / 3;
    if positions.len() % 3 != 0 {
        return Err(MotionError::DimensionMismatch(
            "positions length must be a multiple of 3".to_string(),
        ));
    }
    if m < 1 {
        return Err(MotionError::BadConfig("anchor count must be >= 1".to_string()));
    }
    if m > n {
        return Err(MotionError::TooManyAnchors {
            requested: m,
            available: n,
        });
    }
    if seed_index >= n {
        return Err(MotionError::BadConfig(format!(
            "seed index {seed_index} out of range for {n} points"
        )));
    }

    let pt = |i: usize| -> [f64; 3] {
        [
            positions[3 * i] as f64,
            positions[3 * i + 1] as f64,
            positions[3 * i + 2] as f64,
        ]
    };
    let dist2 = |a: [f64; 3], b: [f64; 3]| -> f64 {
        let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
        d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
    };

    let mut chosen = Vec::with_capacity(m);
    let mut taken = vec![false; n];
    chosen.push(seed_index);
    taken[seed_index] = true;
    let mut min_d2 = vec![f64::INFINITY; n];
    let mut last = seed_index;
    for _ in 1..m {
        let lp = pt(last);
        let mut best = usize::MAX;
        let mut best_d2 = f64::NEG_INFINITY;
        for i in 0..n {
            let d2 = dist2(pt(i), lp);
            if d2 < min_d2[i] {
                min_d2[i] = d2;
            }
            // Strict comparison keeps the lowest index on ties; duplicated
            // points never select the same index twice.
            if !taken[i] && min_d2[i] > best_d2 {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        chosen.push(best);
        taken[best] = true;
        last = best;
    }
    Ok(chosen)
}

/// FPS producing an [`AnchorSet`] (positions only, no features yet).
pub fn sample_anchors_fps(
    positions: &[f32],
    m: usize,
    seed_index: usize,
) -> Result<AnchorSet, MotionError> {
    let indices = sample_anchor_indices(positions, m, seed_index)?;
    let mut anchor_positions = Vec::with_capacity(3 * m);
    for &i in &indices {
        anchor_positions.extend_from_slice(&positions[3 * i..3 * i + 3]);
    }
    AnchorSet::from_positions(anchor_positions, indices)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_equals_n_selects_everything() {
        let positions: Vec<f32> = (0..12).map(|i| i as f32).collect();
        let mut idx = sample_anchor_indices(&positions, 4, 1).unwrap();
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 1, 2, 3]);
    }

    #[test]
    fn line_example_picks_far_end() {
        // Points at x = 0, 1, 10 on a line; seed 0, m = 2 -> {0, 10}.
        let positions = vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 10.0, 0.0, 0.0];
        let idx = sample_anchor_indices(&positions, 2, 0).unwrap();
        assert_eq!(idx, vec![0, 2]);
    }

    #[test]
    fn m_one_returns_seed() {
        let positions = vec![0.0; 9];
        assert_eq!(sample_anchor_indices(&positions, 1, 2).unwrap(), vec![2]);
    }

    #[test]
    fn ties_break_to_lowest_index() {
        // Two candidates symmetric about the seed.
        let positions = vec![0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let idx = sample_anchor_indices(&positions, 2, 0).unwrap();
        assert_eq!(idx, vec![0, 1]);
    }

    #[test]
    fn rejects_m_greater_than_n() {
        let positions = vec![0.0; 6];
        assert!(matches!(
            sample_anchor_indices(&positions, 3, 0),
            Err(MotionError::TooManyAnchors { .. })
        ));
    }

    #[test]
    fn matches_brute_force_greedy_on_random_cloud() {
        // Independent oracle: recompute the greedy objective directly.
        let mut positions = Vec::new();
        let mut state = 0x2545F4914F6CDD1Du64;
        for _ in 0..60 {
            for _ in 0..3 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                positions.push(((state >> 33) as f32 / (1u64 << 31) as f32) - 0.5);
            }
        }
        let got = sample_anchor_indices(&positions, 12, 3).unwrap();

        let n = positions.len() / 3;
        let d2 = |a: usize, b: usize| -> f64 {
            let mut s = 0.0;
            for c in 0..3 {
                let d = positions[3 * a + c] as f64 - positions[3 * b + c] as f64;
                s += d * d;
            }
            s
        };
        let mut expect = vec![3usize];
        while expect.len() < 12 {
            let mut best = 0;
            let mut best_d = f64::NEG_INFINITY;
            for i in 0..n {
                let mind = expect.iter().map(|&j| d2(i, j)).fold(f64::INFINITY, f64::min);
                if mind > best_d {
                    best_d = mind;
                    best = i;
                }
            }
            expect.push(best);
        }
        assert_eq!(got, expect);
    }
}
