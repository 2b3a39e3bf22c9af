//! Variance-reduction regression trees plus the two ensembles built on
//! them: bagged forests and least-squares gradient boosting.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{substream, Matrix, MlError, Scalar};

/// One node of a regression tree, stored in an arena.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub enum TreeNode<F> {
    Leaf {
        value: F,
    },
    Split {
        feature: usize,
        threshold: F,
        /// Arena index of the subtree for rows with `x[feature] <= threshold`.
        left: usize,
        /// Arena index of the subtree for rows with `x[feature] > threshold`.
        right: usize,
    },
}

/// A fitted regression tree (arena representation; index 0 is the root).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct RegressionTree<F> {
    nodes: Vec<TreeNode<F>>,
}

impl<F: Scalar> RegressionTree<F> {
    /// Grows a tree by greedy variance reduction.
    ///
    /// Candidate thresholds are midpoints between consecutive distinct
    /// sorted values of each feature. Among candidates with equal reduction
    /// the first examined wins (features in index order, thresholds in
    /// ascending order). Splits that would leave fewer than `min_leaf` rows
    /// on either side are not considered.
    ///
    /// Rows are sorted per feature once up front; recursion partitions the
    /// sorted lists stably, so every node sees its rows in sorted order
    /// without re-sorting (the classic presorted-CART layout).
    pub fn fit(
        x: &Matrix<F>,
        y: &[F],
        max_depth: Option<usize>,
        min_leaf: usize,
    ) -> Result<Self, MlError> {
        if x.n_rows() == 0 {
            return Err(MlError::EmptyData("tree fit requires at least one row".into()));
        }
        if x.n_rows() != y.len() {
            return Err(MlError::DimensionMismatch(format!(
                "{} feature rows but {} targets",
                x.n_rows(),
                y.len()
            )));
        }
        if min_leaf == 0 {
            return Err(MlError::InvalidSpec("min_leaf must be at least 1".into()));
        }
        if x.n_cols() == 0 {
            // Nothing to split on; the tree degenerates to the target mean.
            let all: Vec<usize> = (0..x.n_rows()).collect();
            return Ok(RegressionTree { nodes: vec![TreeNode::Leaf { value: mean(y, &all) }] });
        }
        let sorted: Vec<Vec<usize>> = (0..x.n_cols())
            .map(|f| {
                let mut idx: Vec<usize> = (0..x.n_rows()).collect();
                idx.sort_by(|&a, &b| {
                    x.get(a, f).partial_cmp(&x.get(b, f)).expect("finite feature values")
                });
                idx
            })
            .collect();
        let mut nodes = Vec::new();
        grow(&mut nodes, x, y, sorted, 0, max_depth, min_leaf);
        Ok(RegressionTree { nodes })
    }

    pub fn predict_row(&self, row: &[F]) -> F {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    #[cfg(test)]
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

fn mean<F: Scalar>(y: &[F], indices: &[usize]) -> F {
    let sum: F = indices.iter().map(|&i| y[i]).sum();
    sum / F::from_usize(indices.len()).expect("count fits in scalar")
}

/// Sum of squared deviations from the mean over the given rows.
fn sse<F: Scalar>(y: &[F], indices: &[usize]) -> F {
    let m = mean(y, indices);
    indices.iter().map(|&i| (y[i] - m) * (y[i] - m)).sum()
}

/// Recursively grows the subtree for the rows in `sorted` (one presorted
/// index list per feature, all holding the same row set); returns its arena
/// index.
fn grow<F: Scalar>(
    nodes: &mut Vec<TreeNode<F>>,
    x: &Matrix<F>,
    y: &[F],
    sorted: Vec<Vec<usize>>,
    depth: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
) -> usize {
    let leaf = |nodes: &mut Vec<TreeNode<F>>, value: F| {
        nodes.push(TreeNode::Leaf { value });
        nodes.len() - 1
    };

    let rows = &sorted[0];
    let n = rows.len();
    let node_mean = mean(y, rows);
    let depth_reached = max_depth.is_some_and(|d| depth >= d);
    if depth_reached || n < 2 * min_leaf {
        return leaf(nodes, node_mean);
    }

    let parent_sse = sse(y, rows);
    if parent_sse <= F::zero() {
        return leaf(nodes, node_mean);
    }

    let mut best: Option<(usize, F, F)> = None; // (feature, threshold, reduction)
    for (feature, order) in sorted.iter().enumerate() {
        // Walk split positions left-to-right keeping running sums so each
        // candidate costs O(1).
        let total_sum: F = order.iter().map(|&i| y[i]).sum();
        let total_sq: F = order.iter().map(|&i| y[i] * y[i]).sum();
        let mut left_sum = F::zero();
        let mut left_sq = F::zero();
        for pos in 0..n - 1 {
            let yi = y[order[pos]];
            left_sum += yi;
            left_sq += yi * yi;
            let a = x.get(order[pos], feature);
            let b = x.get(order[pos + 1], feature);
            if a == b {
                continue; // no boundary between equal values
            }
            let n_left = pos + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let two = F::from_f64(2.0).expect("constant fits in scalar");
            let threshold = (a + b) / two;
            let nl = F::from_usize(n_left).expect("count fits in scalar");
            let nr = F::from_usize(n_right).expect("count fits in scalar");
            let right_sum = total_sum - left_sum;
            let right_sq = total_sq - left_sq;
            let child_sse = (left_sq - left_sum * left_sum / nl)
                + (right_sq - right_sum * right_sum / nr);
            let reduction = parent_sse - child_sse;
            // Strictly-greater comparison makes the first candidate win ties.
            if best.is_none_or(|(_, _, r)| reduction > r) {
                best = Some((feature, threshold, reduction));
            }
        }
    }

    let Some((feature, threshold, reduction)) = best else {
        return leaf(nodes, node_mean);
    };
    if reduction <= F::zero() {
        return leaf(nodes, node_mean);
    }

    // Stable partition of every per-feature list, preserving sort order.
    let mut left_sorted = Vec::with_capacity(sorted.len());
    let mut right_sorted = Vec::with_capacity(sorted.len());
    for order in &sorted {
        let (l, r): (Vec<usize>, Vec<usize>) =
            order.iter().partition(|&&i| x.get(i, feature) <= threshold);
        left_sorted.push(l);
        right_sorted.push(r);
    }
    drop(sorted);

    // Reserve this node's slot before growing children so the root stays at 0.
    nodes.push(TreeNode::Leaf { value: node_mean });
    let slot = nodes.len() - 1;
    let left = grow(nodes, x, y, left_sorted, depth + 1, max_depth, min_leaf);
    let right = grow(nodes, x, y, right_sorted, depth + 1, max_depth, min_leaf);
    nodes[slot] = TreeNode::Split { feature, threshold, left, right };
    slot
}

/// Bagged ensemble of regression trees (no feature subsampling).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct Forest<F> {
    trees: Vec<RegressionTree<F>>,
}

impl<F: Scalar> Forest<F> {
    /// Fits `n_trees` trees, each on a bootstrap sample (with replacement,
    /// same size as the input) drawn from a per-tree substream of `seed`.
    pub fn fit(
        x: &Matrix<F>,
        y: &[F],
        n_trees: usize,
        max_depth: Option<usize>,
        min_leaf: usize,
        seed: u64,
    ) -> Result<Self, MlError> {
        if n_trees == 0 {
            return Err(MlError::InvalidSpec("forest needs at least one tree".into()));
        }
        let n = x.n_rows();
        if n == 0 {
            return Err(MlError::EmptyData("forest fit requires at least one row".into()));
        }
        let mut trees = Vec::with_capacity(n_trees);
        for t in 0..n_trees {
            let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, t as u64));
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let xb = x.select_rows(&sample);
            let yb: Vec<F> = sample.iter().map(|&i| y[i]).collect();
            trees.push(RegressionTree::fit(&xb, &yb, max_depth, min_leaf)?);
        }
        Ok(Forest { trees })
    }

    pub fn predict_row(&self, row: &[F]) -> F {
        let sum: F = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / F::from_usize(self.trees.len()).expect("count fits in scalar")
    }
}

/// Least-squares gradient boosting: constant initial prediction (the target
/// mean) plus `n_stages` shallow trees fitted to residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct Boosting<F> {
    init: F,
    learning_rate: F,
    trees: Vec<RegressionTree<F>>,
    /// Mean squared training error after the initial constant and after each
    /// stage; length `n_stages + 1`.
    staged_loss: Vec<F>,
}

impl<F: Scalar> Boosting<F> {
    pub fn fit(
        x: &Matrix<F>,
        y: &[F],
        n_stages: usize,
        learning_rate: F,
        max_depth: Option<usize>,
        min_leaf: usize,
    ) -> Result<Self, MlError> {
        if n_stages == 0 {
            return Err(MlError::InvalidSpec("boosting needs at least one stage".into()));
        }
        if learning_rate <= F::zero() {
            return Err(MlError::InvalidSpec("learning rate must be positive".into()));
        }
        let n = x.n_rows();
        if n == 0 {
            return Err(MlError::EmptyData("boosting fit requires at least one row".into()));
        }
        if n != y.len() {
            return Err(MlError::DimensionMismatch(format!(
                "{n} feature rows but {} targets",
                y.len()
            )));
        }
        let nf = F::from_usize(n).expect("count fits in scalar");
        let init = y.iter().copied().sum::<F>() / nf;
        let mut current: Vec<F> = vec![init; n];
        let mse = |current: &[F]| -> F {
            current
                .iter()
                .zip(y)
                .map(|(p, t)| (*t - *p) * (*t - *p))
                .sum::<F>()
                / nf
        };
        let mut staged_loss = vec![mse(&current)];
        let mut trees = Vec::with_capacity(n_stages);
        for _ in 0..n_stages {
            let residuals: Vec<F> = y.iter().zip(&current).map(|(t, p)| *t - *p).collect();
            let tree = RegressionTree::fit(x, &residuals, max_depth, min_leaf)?;
            for (i, c) in current.iter_mut().enumerate() {
                *c += learning_rate * tree.predict_row(x.row(i));
            }
            staged_loss.push(mse(&current));
            trees.push(tree);
        }
        Ok(Boosting { init, learning_rate, trees, staged_loss })
    }

    pub fn predict_row(&self, row: &[F]) -> F {
        let mut acc = self.init;
        for tree in &self.trees {
            acc += self.learning_rate * tree.predict_row(row);
        }
        acc
    }

    pub fn staged_loss(&self) -> &[F] {
        &self.staged_loss
    }
}
