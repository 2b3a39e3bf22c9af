//! Verifies the gradient-boosting operator against a deliberately naive,
//! independent re-implementation: an exhaustive-search regression tree and a
//! plain residual-boosting loop. The two must agree stage by stage.

use gqlcost_ml::{FittedOperator, Mat64, OperatorSpec};

// ---------------------------------------------------------------------------
// Oracle: brute-force CART + boosting, no shared code with the crate.
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum OracleNode {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: Box<OracleNode>, right: Box<OracleNode> },
}

fn oracle_mean(y: &[f64]) -> f64 {
    y.iter().sum::<f64>() / y.len() as f64
}

fn oracle_sse(y: &[f64]) -> f64 {
    let m = oracle_mean(y);
    y.iter().map(|v| (v - m) * (v - m)).sum()
}

/// Exhaustive split search: every feature in index order, every midpoint
/// between consecutive distinct sorted values in ascending order, naive SSE
/// recomputation per candidate, strictly-better-wins tie handling.
fn oracle_fit(x: &[Vec<f64>], y: &[f64], depth: usize, max_depth: usize) -> OracleNode {
    let leaf = OracleNode::Leaf(oracle_mean(y));
    if depth >= max_depth || y.len() < 2 || oracle_sse(y) <= 0.0 {
        return leaf;
    }
    let n_features = x[0].len();
    let mut best: Option<(usize, f64, f64)> = None;
    let parent = oracle_sse(y);
    for feature in 0..n_features {
        let mut values: Vec<f64> = x.iter().map(|r| r[feature]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for w in values.windows(2) {
            let threshold = (w[0] + w[1]) / 2.0;
            let (mut ly, mut ry) = (Vec::new(), Vec::new());
            for (row, &t) in x.iter().zip(y) {
                if row[feature] <= threshold {
                    ly.push(t);
                } else {
                    ry.push(t);
                }
            }
            if ly.is_empty() || ry.is_empty() {
                continue;
            }
            let reduction = parent - oracle_sse(&ly) - oracle_sse(&ry);
            if best.is_none_or(|(_, _, r)| reduction > r) {
                best = Some((feature, threshold, reduction));
            }
        }
    }
    let Some((feature, threshold, reduction)) = best else { return leaf };
    if reduction <= 0.0 {
        return leaf;
    }
    let (mut lx, mut ly, mut rx, mut ry) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (row, &t) in x.iter().zip(y) {
        if row[feature] <= threshold {
            lx.push(row.clone());
            ly.push(t);
        } else {
            rx.push(row.clone());
            ry.push(t);
        }
    }
    OracleNode::Split {
        feature,
        threshold,
        left: Box::new(oracle_fit(&lx, &ly, depth + 1, max_depth)),
        right: Box::new(oracle_fit(&rx, &ry, depth + 1, max_depth)),
    }
}

fn oracle_predict(node: &OracleNode, row: &[f64]) -> f64 {
    match node {
        OracleNode::Leaf(v) => *v,
        OracleNode::Split { feature, threshold, left, right } => {
            if row[*feature] <= *threshold {
                oracle_predict(left, row)
            } else {
                oracle_predict(right, row)
            }
        }
    }
}

struct OracleBoosting {
    init: f64,
    lr: f64,
    trees: Vec<OracleNode>,
    staged_loss: Vec<f64>,
}

fn oracle_boost(
    x: &[Vec<f64>],
    y: &[f64],
    n_stages: usize,
    lr: f64,
    max_depth: usize,
) -> OracleBoosting {
    let init = oracle_mean(y);
    let mut current = vec![init; y.len()];
    let mse = |cur: &[f64]| {
        cur.iter().zip(y).map(|(p, t)| (t - p) * (t - p)).sum::<f64>() / y.len() as f64
    };
    let mut staged_loss = vec![mse(&current)];
    let mut trees = Vec::new();
    for _ in 0..n_stages {
        let residuals: Vec<f64> = y.iter().zip(&current).map(|(t, p)| t - p).collect();
        let tree = oracle_fit(x, &residuals, 0, max_depth);
        for (c, row) in current.iter_mut().zip(x) {
            *c += lr * oracle_predict(&tree, row);
        }
        staged_loss.push(mse(&current));
        trees.push(tree);
    }
    OracleBoosting { init, lr, trees, staged_loss }
}

fn oracle_boost_predict(model: &OracleBoosting, row: &[f64]) -> f64 {
    model.init
        + model
            .trees
            .iter()
            .map(|t| model.lr * oracle_predict(t, row))
            .sum::<f64>()
}

// ---------------------------------------------------------------------------
// Comparisons
// ---------------------------------------------------------------------------

fn quadratic_data() -> (Vec<Vec<f64>>, Vec<f64>) {
    let xs: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 / 99.0]).collect();
    let y: Vec<f64> = xs.iter().map(|r| r[0] * r[0]).collect();
    (xs, y)
}

#[test]
fn boosting_matches_the_brute_force_oracle() {
    let (rows, y) = quadratic_data();
    let x = Mat64::from_rows(rows.clone()).unwrap();
    let spec = OperatorSpec::GradientBoosting {
        n_stages: 50,
        learning_rate: 0.1,
        max_depth: Some(3),
        seed: 0,
    };
    let op = FittedOperator::fit(&spec, &x, &y).unwrap();
    let oracle = oracle_boost(&rows, &y, 50, 0.1, 3);

    let preds = op.predict(&x).unwrap();
    for (i, (p, row)) in preds.iter().zip(&rows).enumerate() {
        let expected = oracle_boost_predict(&oracle, row);
        assert!(
            (p - expected).abs() < 1e-9,
            "row {i}: operator {p} vs oracle {expected}"
        );
    }

    let staged = op.staged_loss().expect("boosting records staged loss");
    assert_eq!(staged.len(), oracle.staged_loss.len());
    for (a, b) in staged.iter().zip(&oracle.staged_loss) {
        assert!((a - b).abs() < 1e-9, "staged loss {a} vs oracle {b}");
    }
}

#[test]
fn boosting_training_mae_on_quadratic_is_small() {
    let (rows, y) = quadratic_data();
    let x = Mat64::from_rows(rows).unwrap();
    let spec = OperatorSpec::GradientBoosting {
        n_stages: 50,
        learning_rate: 0.1,
        max_depth: Some(3),
        seed: 0,
    };
    let op = FittedOperator::fit(&spec, &x, &y).unwrap();
    let preds = op.predict(&x).unwrap();
    let mae: f64 = preds.iter().zip(&y).map(|(p, t)| (p - t).abs()).sum::<f64>() / y.len() as f64;
    assert!(mae < 0.01, "training MAE {mae}");
}

#[test]
fn staged_loss_is_nonincreasing_against_oracle_data() {
    let (rows, y) = quadratic_data();
    let oracle = oracle_boost(&rows, &y, 50, 0.1, 3);
    for w in oracle.staged_loss.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
}
