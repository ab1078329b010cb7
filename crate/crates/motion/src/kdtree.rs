//! Exact 3D k-d tree for nearest-anchor queries.
//!
//! Ordering is fully deterministic: neighbor ranking is by squared distance
//! with ties broken by the lower point index, and the tree layout itself is
//! a deterministic median split.

#[derive(Debug)]
struct Node {
    point: usize,
    axis: usize,
    left: Option<Box<Node>>,
    right: Option<Box<Node>>,
}

#[derive(Debug)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
    root: Option<Box<Node>>,
}

impl KdTree {
    /// Build from packed xyz positions.
    pub fn build(positions: &[f32]) -> Self {
        let points: Vec<[f64; 3]> = positions
            .chunks(3)
            .map(|p| [p[0] as f64, p[1] as f64, p[2] as f64])
            .collect();
        let mut indices: Vec<usize> = (0..points.len()).collect();
        let root = build_node(&points, &mut indices, 0);
        KdTree { points, root }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The `k` nearest points to `query`, sorted by (distance^2, index).
    pub fn nearest_k(&self, query: [f64; 3], k: usize) -> Vec<(f64, usize)> {
        let k = k.min(self.points.len());
        if k == 0 {
            return Vec::new();
        }
        // Small k: a sorted candidate list beats a heap and keeps the
        // tie-break rule explicit.
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        self.search(self.root.as_deref(), query, k, &mut best);
        best
    }

    fn search(
        &self,
        node: Option<&Node>,
        query: [f64; 3],
        k: usize,
        best: &mut Vec<(f64, usize)>,
    ) {
        let Some(node) = node else { return };
        let p = self.points[node.point];
        let d = [query[0] - p[0], query[1] - p[1], query[2] - p[2]];
        let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        consider(best, k, d2, node.point);

        let delta = query[node.axis] - p[node.axis];
        let (near, far) = if delta < 0.0 {
            (node.left.as_deref(), node.right.as_deref())
        } else {
            (node.right.as_deref(), node.left.as_deref())
        };
        self.search(near, query, k, best);
        // Visit the far side unless it provably cannot improve the result;
        // at exact distance ties a lower index might still win, so compare
        // with <=.
        if best.len() < k || delta * delta <= best.last().unwrap().0 {
            self.search(far, query, k, best);
        }
    }
}

fn consider(best: &mut Vec<(f64, usize)>, k: usize, d2: f64, idx: usize) {
    let key = (d2, idx);
    if best.len() == k {
        let worst = *best.last().unwrap();
        if key >= worst {
            return;
        }
        best.pop();
    }
    let pos = best.partition_point(|e| *e < key);
    best.insert(pos, key);
}

fn build_node(points: &[[f64; 3]], indices: &mut [usize], depth: usize) -> Option<Box<Node>> {
    if indices.is_empty() {
        return None;
    }
    let axis = depth % 3;
    let mid = indices.len() / 2;
    indices.sort_unstable_by(|&a, &b| {
        points[a][axis]
            .total_cmp(&points[b][axis])
            .then(a.cmp(&b))
    });
    let point = indices[mid];
    let (left, rest) = indices.split_at_mut(mid);
    let right = &mut rest[1..];
    Some(Box::new(Node {
        point,
        axis,
        left: build_node(points, left, depth + 1),
        right: build_node(points, right, depth + 1),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(positions: &[f32], query: [f64; 3], k: usize) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = positions
            .chunks(3)
            .enumerate()
            .map(|(i, p)| {
                let d = [
                    query[0] - p[0] as f64,
                    query[1] - p[1] as f64,
                    query[2] - p[2] as f64,
                ];
                (d[0] * d[0] + d[1] * d[1] + d[2] * d[2], i)
            })
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.truncate(k);
        all
    }

    #[test]
    fn matches_brute_force_on_random_points() {
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f32 / (1u64 << 31) as f32) - 0.5
        };
        let positions: Vec<f32> = (0..300).map(|_| next() * 4.0).collect();
        let tree = KdTree::build(&positions);
        for qi in 0..25 {
            let q = [
                (qi as f64 * 0.37).sin(),
                (qi as f64 * 0.71).cos(),
                (qi as f64 * 0.13).sin() * 2.0,
            ];
            for k in [1usize, 3, 8, 99] {
                assert_eq!(tree.nearest_k(q, k), brute_force(&positions, q, k), "k={k}");
            }
        }
    }

    #[test]
    fn duplicate_points_tie_break_by_index() {
        let positions = vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0];
        let tree = KdTree::build(&positions);
        let got = tree.nearest_k([0.0, 0.0, 0.0], 2);
        assert_eq!(got[0].1, 0);
        assert_eq!(got[1].1, 1);
    }

    #[test]
    fn k_larger_than_points_clamps() {
        let positions = vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let tree = KdTree::build(&positions);
        assert_eq!(tree.nearest_k([0.0; 3], 10).len(), 2);
    }
}
