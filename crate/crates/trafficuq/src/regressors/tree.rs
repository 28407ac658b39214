use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeding::rng_from_seed;

/// How internal split points are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMode {
    /// Greedy variance-reduction over all features (CART).
    Best,
    /// Uniform-random threshold on a random non-constant feature.
    RandomThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    /// Minimum (weighted) sample count per leaf.
    pub min_samples_leaf: usize,
    pub split_mode: SplitMode,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
            split_mode: SplitMode::Best,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf < 1 {
            return Err(Error::Config("min_samples_leaf must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// Flat binary tree. `feature < 0` marks a leaf; `value` is the (weighted)
/// mean of the training targets routed to that leaf.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Node {
    feature: i32,
    threshold: f64,
    left: u32,
    right: u32,
    value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl RegressionTree {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature < 0).count()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.nodes[self.leaf_index(row)].value
    }

    /// Index of the leaf node `row` routes to.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0usize;
        loop {
            let node = &self.nodes[i];
            if node.feature < 0 {
                return i;
            }
            i = if row[node.feature as usize] <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(Error::Shape(format!(
                "tree fitted on {} features, got {}",
                self.n_features,
                x.cols()
            )));
        }
        Ok(x.iter_rows().map(|r| self.predict_row(r)).collect())
    }

    /// Overwrites the value of leaf node `leaf`. Used by boosting stages
    /// that re-fit leaf constants after the structure is grown.
    pub(crate) fn set_leaf_value(&mut self, leaf: usize, value: f64) {
        debug_assert!(self.nodes[leaf].feature < 0);
        self.nodes[leaf].value = value;
    }
}

pub fn fit_tree(x: &Matrix, y: &[f64], config: &TreeConfig, seed: u64) -> Result<RegressionTree> {
    fit_tree_weighted(x, y, &vec![1.0; y.len()], config, seed)
}

/// Fits a tree on samples with non-negative weights; weight 0 excludes a
/// sample. Bootstrap resampling is expressed as integer count weights.
pub fn fit_tree_weighted(
    x: &Matrix,
    y: &[f64],
    weights: &[f64],
    config: &TreeConfig,
    seed: u64,
) -> Result<RegressionTree> {
    config.validate()?;
    if y.is_empty() || x.rows() == 0 {
        return Err(Error::Fit("cannot fit a tree on an empty dataset".to_string()));
    }
    if x.rows() != y.len() || weights.len() != y.len() {
        return Err(Error::Shape(format!(
            "inconsistent input sizes: x={} y={} w={}",
            x.rows(),
            y.len(),
            weights.len()
        )));
    }
    for row in x.iter_rows() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Fit("features must be finite".to_string()));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("targets must be finite".to_string()));
    }
    let active: Vec<u32> = (0..y.len() as u32)
        .filter(|&i| weights[i as usize] > 0.0)
        .collect();
    if active.is_empty() {
        return Err(Error::Fit("all sample weights are zero".to_string()));
    }

    let mut builder = Builder {
        x,
        y,
        w: weights,
        config,
        nodes: Vec::new(),
        side: vec![false; y.len()],
        scratch: Vec::with_capacity(active.len()),
    };
    match config.split_mode {
        SplitMode::Best => builder.build_best(active),
        SplitMode::RandomThreshold => builder.build_random(active, seed),
    }
    Ok(RegressionTree {
        nodes: builder.nodes,
        n_features: x.cols(),
    })
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    w: &'a [f64],
    config: &'a TreeConfig,
    nodes: Vec<Node>,
    /// Per-sample flag: routed left under the current split.
    side: Vec<bool>,
    scratch: Vec<u32>,
}

struct Frame {
    lo: usize,
    hi: usize,
    depth: usize,
    parent: usize,
    is_left: bool,
}

impl<'a> Builder<'a> {
    fn weighted_mean(&self, idx: &[u32]) -> (f64, f64) {
        let mut wsum = 0.0;
        let mut ysum = 0.0;
        for &i in idx {
            let wi = self.w[i as usize];
            wsum += wi;
            ysum += wi * self.y[i as usize];
        }
        (wsum, ysum / wsum)
    }

    fn push_node(&mut self, node: Node, parent: usize, is_left: bool) -> usize {
        let id = self.nodes.len();
        self.nodes.push(node);
        if parent != usize::MAX {
            if is_left {
                self.nodes[parent].left = id as u32;
            } else {
                self.nodes[parent].right = id as u32;
            }
        }
        id
    }

    fn leaf(&mut self, value: f64, parent: usize, is_left: bool) {
        self.push_node(
            Node {
                feature: -1,
                threshold: 0.0,
                left: 0,
                right: 0,
                value,
            },
            parent,
            is_left,
        );
    }

    fn depth_exceeded(&self, depth: usize) -> bool {
        matches!(self.config.max_depth, Some(d) if depth >= d)
    }

    fn y_constant(&self, idx: &[u32]) -> bool {
        let first = self.y[idx[0] as usize];
        idx.iter().all(|&i| (self.y[i as usize] - first).abs() <= 1e-12)
    }

    /// Greedy CART on per-feature presorted index lists. All feature lists
    /// of a node share the same contiguous range and are partitioned in
    /// lockstep when the node splits, keeping each list sorted.
    fn build_best(&mut self, active: Vec<u32>) {
        let d = self.x.cols();
        let mut sorted: Vec<Vec<u32>> = (0..d)
            .map(|f| {
                let mut idx = active.clone();
                idx.sort_unstable_by(|&a, &b| {
                    self.x
                        .get(a as usize, f)
                        .partial_cmp(&self.x.get(b as usize, f))
                        .unwrap()
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        if d == 0 {
            let (_, mean) = self.weighted_mean(&active);
            self.leaf(mean, usize::MAX, false);
            return;
        }

        let min_leaf = self.config.min_samples_leaf as f64;
        let mut stack = vec![Frame {
            lo: 0,
            hi: active.len(),
            depth: 0,
            parent: usize::MAX,
            is_left: false,
        }];
        while let Some(frame) = stack.pop() {
            let slice_ref = &sorted[0][frame.lo..frame.hi];
            let (wsum, mean) = self.weighted_mean(slice_ref);
            if self.depth_exceeded(frame.depth)
                || wsum < 2.0 * min_leaf
                || self.y_constant(slice_ref)
            {
                self.leaf(mean, frame.parent, frame.is_left);
                continue;
            }

            // Best split: maximize sum_L²/W_L + sum_R²/W_R.
            let total_sum = mean * wsum;
            let mut best: Option<(f64, usize, f64, usize)> = None; // score, feature, threshold, left count
            for f in 0..d {
                let idx = &sorted[f][frame.lo..frame.hi];
                let mut wl = 0.0;
                let mut sl = 0.0;
                for k in 0..idx.len() - 1 {
                    let i = idx[k] as usize;
                    wl += self.w[i];
                    sl += self.w[i] * self.y[i];
                    let v = self.x.get(i, f);
                    let v_next = self.x.get(idx[k + 1] as usize, f);
                    if v_next <= v {
                        continue;
                    }
                    let wr = wsum - wl;
                    if wl < min_leaf || wr < min_leaf {
                        continue;
                    }
                    let sr = total_sum - sl;
                    let score = sl * sl / wl + sr * sr / wr;
                    if best.map_or(true, |(s, _, _, _)| score > s) {
                        best = Some((score, f, 0.5 * (v + v_next), k + 1));
                    }
                }
            }
            let Some((_, feature, threshold, _)) = best else {
                self.leaf(mean, frame.parent, frame.is_left);
                continue;
            };

            for &i in &sorted[feature][frame.lo..frame.hi] {
                self.side[i as usize] = self.x.get(i as usize, feature) <= threshold;
            }
            let mut n_left = 0;
            for f in 0..d {
                n_left = self.partition(&mut sorted[f], frame.lo, frame.hi);
            }

            let node = self.push_node(
                Node {
                    feature: feature as i32,
                    threshold,
                    left: 0,
                    right: 0,
                    value: mean,
                },
                frame.parent,
                frame.is_left,
            );
            stack.push(Frame {
                lo: frame.lo + n_left,
                hi: frame.hi,
                depth: frame.depth + 1,
                parent: node,
                is_left: false,
            });
            stack.push(Frame {
                lo: frame.lo,
                hi: frame.lo + n_left,
                depth: frame.depth + 1,
                parent: node,
                is_left: true,
            });
        }
    }

    /// Stable partition of `idx[lo..hi]` by the `side` flags; returns the
    /// left-block length.
    fn partition(&mut self, idx: &mut [u32], lo: usize, hi: usize) -> usize {
        self.scratch.clear();
        let mut write = lo;
        for k in lo..hi {
            let i = idx[k];
            if self.side[i as usize] {
                idx[write] = i;
                write += 1;
            } else {
                self.scratch.push(i);
            }
        }
        idx[write..hi].copy_from_slice(&self.scratch);
        write - lo
    }

    /// Totally randomized splits: random non-constant feature, uniform
    /// threshold strictly inside its value range.
    fn build_random(&mut self, mut active: Vec<u32>, seed: u64) {
        let mut rng = rng_from_seed(seed);
        let d = self.x.cols();
        let min_leaf = self.config.min_samples_leaf as f64;
        let mut stack = vec![Frame {
            lo: 0,
            hi: active.len(),
            depth: 0,
            parent: usize::MAX,
            is_left: false,
        }];
        while let Some(frame) = stack.pop() {
            let slice_ref = &active[frame.lo..frame.hi];
            let (wsum, mean) = self.weighted_mean(slice_ref);
            let mut split = None;
            if !(self.depth_exceeded(frame.depth)
                || wsum < 2.0 * min_leaf
                || self.y_constant(slice_ref))
            {
                let candidates: Vec<usize> = (0..d)
                    .filter(|&f| {
                        let (lo_v, hi_v) = self.feature_range(slice_ref, f);
                        hi_v > lo_v
                    })
                    .collect();
                if !candidates.is_empty() {
                    let f = candidates[rng.gen_range(0..candidates.len())];
                    let (lo_v, hi_v) = self.feature_range(slice_ref, f);
                    let threshold = rng.gen_range(lo_v..hi_v);
                    split = Some((f, threshold));
                }
            }
            let Some((feature, threshold)) = split else {
                self.leaf(mean, frame.parent, frame.is_left);
                continue;
            };

            for &i in &active[frame.lo..frame.hi] {
                self.side[i as usize] = self.x.get(i as usize, feature) <= threshold;
            }
            let n_left = self.partition(&mut active, frame.lo, frame.hi);

            let node = self.push_node(
                Node {
                    feature: feature as i32,
                    threshold,
                    left: 0,
                    right: 0,
                    value: mean,
                },
                frame.parent,
                frame.is_left,
            );
            stack.push(Frame {
                lo: frame.lo + n_left,
                hi: frame.hi,
                depth: frame.depth + 1,
                parent: node,
                is_left: false,
            });
            stack.push(Frame {
                lo: frame.lo,
                hi: frame.lo + n_left,
                depth: frame.depth + 1,
                parent: node,
                is_left: true,
            });
        }
    }

    fn feature_range(&self, idx: &[u32], f: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in idx {
            let v = self.x.get(i as usize, f);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use rand::Rng;

    #[test]
    fn separable_pair_gets_two_exact_leaves() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]);
        let tree = fit_tree(&x, &[0.0, 10.0], &TreeConfig::default(), 1).unwrap();
        assert_eq!(tree.predict_row(&[0.0]), 0.0);
        assert_eq!(tree.predict_row(&[1.0]), 10.0);
    }

    #[test]
    fn constant_targets_give_a_single_leaf() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]);
        let tree = fit_tree(&x, &[7.0, 7.0, 7.0], &TreeConfig::default(), 1).unwrap();
        assert_eq!(tree.n_leaves(), 1);
        assert_eq!(tree.predict_row(&[99.0]), 7.0);
    }

    #[test]
    fn leaf_values_are_means_of_routed_targets() {
        let mut rng = crate::seeding::rng_from_seed(5);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)])
            .collect();
        let y: Vec<f64> = (0..50).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let x = Matrix::from_rows(&rows);
        let config = TreeConfig {
            max_depth: Some(2),
            ..TreeConfig::default()
        };
        let tree = fit_tree(&x, &y, &config, 3).unwrap();
        let mut by_leaf: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
        for (row, target) in rows.iter().zip(&y) {
            by_leaf.entry(tree.leaf_index(row)).or_default().push(*target);
        }
        for (leaf, targets) in by_leaf {
            let mean = targets.iter().sum::<f64>() / targets.len() as f64;
            assert!(
                (tree.predict_row(&x.row(rows_for_leaf(&tree, &rows, leaf))) - mean).abs() < 1e-9
            );
        }

        fn rows_for_leaf(tree: &RegressionTree, rows: &[Vec<f64>], leaf: usize) -> usize {
            rows.iter().position(|r| tree.leaf_index(r) == leaf).unwrap()
        }
    }

    #[test]
    fn unlimited_depth_fits_distinct_features_exactly() {
        let rows: Vec<Vec<f64>> = (0..40).map(|k| vec![k as f64]).collect();
        let mut rng = crate::seeding::rng_from_seed(8);
        let y: Vec<f64> = (0..40).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let x = Matrix::from_rows(&rows);
        let tree = fit_tree(&x, &y, &TreeConfig::default(), 2).unwrap();
        for (row, target) in rows.iter().zip(&y) {
            assert!((tree.predict_row(row) - target).abs() < 1e-12);
        }
    }

    #[test]
    fn fitting_is_deterministic_per_seed() {
        let mut rng = crate::seeding::rng_from_seed(6);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)])
            .collect();
        let y: Vec<f64> = (0..30).map(|_| rng.gen_range(0.0..1.0)).collect();
        let x = Matrix::from_rows(&rows);
        let config = TreeConfig {
            split_mode: SplitMode::RandomThreshold,
            ..TreeConfig::default()
        };
        let a = fit_tree(&x, &y, &config, 12).unwrap();
        let b = fit_tree(&x, &y, &config, 12).unwrap();
        for row in &rows {
            assert_eq!(a.predict_row(row), b.predict_row(row));
        }
    }

    #[test]
    fn empty_input_is_a_fit_error() {
        let x = Matrix::zeros(0, 1);
        assert!(fit_tree(&x, &[], &TreeConfig::default(), 1).is_err());
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let rows: Vec<Vec<f64>> = (0..20).map(|k| vec![k as f64]).collect();
        let y: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let x = Matrix::from_rows(&rows);
        let config = TreeConfig {
            min_samples_leaf: 5,
            ..TreeConfig::default()
        };
        let tree = fit_tree(&x, &y, &config, 1).unwrap();
        let mut counts: std::collections::BTreeMap<usize, usize> = Default::default();
        for row in &rows {
            *counts.entry(tree.leaf_index(row)).or_default() += 1;
        }
        assert!(counts.values().all(|&c| c >= 5));
    }

    #[test]
    fn wrong_column_count_is_a_shape_error() {
        let x = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let tree = fit_tree(&x, &[1.0, 2.0], &TreeConfig::default(), 1).unwrap();
        assert!(tree.predict(&Matrix::from_rows(&[vec![1.0]])).is_err());
    }
}
