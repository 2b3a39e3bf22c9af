//! The operator catalog: preprocessing transformers and regressors, each
//! described by an [`OperatorSpec`] and trained into a [`FittedOperator`].

use serde::{Deserialize, Serialize};

use crate::linear::{fit_ridge, LinearModel};
use crate::tree::{Boosting, Forest, RegressionTree};
use crate::{Matrix, MlError, Scalar};

/// Number of neighbors used by the knn regressor; fixed by design.
pub const KNN_K: usize = 3;

/// Declarative description of one operator, hyperparameters included.
///
/// Hyperparameters are plain `f64`/`usize` regardless of the scalar type the
/// operator is later fitted with, so specs compare, hash into search
/// deduplication, and serialize identically across scalar instantiations.
///
/// Serialized externally tagged (`{"ridge": {"alpha": 0.5}}`): internal
/// tagging buffers values through serde's content machinery, which cannot
/// round-trip floats when arbitrary-precision JSON numbers are enabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorSpec {
    StandardScaler,
    NoOp,
    Polynomial {
        degree: usize,
    },
    LinearRegression,
    Ridge {
        alpha: f64,
    },
    DecisionTree {
        max_depth: Option<usize>,
        min_leaf: usize,
    },
    RandomForest {
        n_trees: usize,
        max_depth: Option<usize>,
        min_leaf: usize,
        seed: u64,
    },
    Knn {
        k: usize,
    },
    /// Least-squares gradient boosting. The fit itself is deterministic; the
    /// seed is carried for catalog parity with the seeded ensembles and
    /// reserved for subsampled variants.
    GradientBoosting {
        n_stages: usize,
        learning_rate: f64,
        max_depth: Option<usize>,
        seed: u64,
    },
}

impl OperatorSpec {
    /// Builds the one admissible knn spec (`k` is fixed at [`KNN_K`]).
    pub fn knn() -> Self {
        OperatorSpec::Knn { k: KNN_K }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            OperatorSpec::StandardScaler => "standard_scaler",
            OperatorSpec::NoOp => "no_op",
            OperatorSpec::Polynomial { .. } => "polynomial",
            OperatorSpec::LinearRegression => "linear_regression",
            OperatorSpec::Ridge { .. } => "ridge",
            OperatorSpec::DecisionTree { .. } => "decision_tree",
            OperatorSpec::RandomForest { .. } => "random_forest",
            OperatorSpec::Knn { .. } => "knn",
            OperatorSpec::GradientBoosting { .. } => "gradient_boosting",
        }
    }

    /// True for operators used as preprocessing steps (they implement
    /// `transform`); false for regressors (they implement `predict`).
    pub fn is_transformer(&self) -> bool {
        matches!(
            self,
            OperatorSpec::StandardScaler | OperatorSpec::NoOp | OperatorSpec::Polynomial { .. }
        )
    }

    pub fn validate(&self) -> Result<(), MlError> {
        let invalid = |msg: String| Err(MlError::InvalidSpec(msg));
        match *self {
            OperatorSpec::Polynomial { degree } if degree < 1 => {
                invalid("polynomial degree must be at least 1".into())
            }
            OperatorSpec::Ridge { alpha } if !(alpha >= 0.0 && alpha.is_finite()) => {
                invalid("ridge alpha must be finite and non-negative".into())
            }
            OperatorSpec::DecisionTree { min_leaf, .. } if min_leaf < 1 => {
                invalid("decision_tree min_leaf must be at least 1".into())
            }
            OperatorSpec::RandomForest { n_trees, min_leaf, .. }
                if n_trees < 1 || min_leaf < 1 =>
            {
                invalid("random_forest needs n_trees >= 1 and min_leaf >= 1".into())
            }
            OperatorSpec::Knn { k } if k != KNN_K => {
                invalid(format!("knn k is fixed at {KNN_K}, got {k}"))
            }
            OperatorSpec::GradientBoosting { n_stages, learning_rate, .. }
                if n_stages < 1 || !(learning_rate > 0.0 && learning_rate <= 1.0) =>
            {
                invalid(
                    "gradient_boosting needs n_stages >= 1 and learning_rate in (0, 1]".into(),
                )
            }
            _ => Ok(()),
        }
    }
}

/// Learned state of a fitted operator (externally tagged; see
/// [`OperatorSpec`] for why).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
#[serde(rename_all = "snake_case")]
enum FittedState<F> {
    Scaler { means: Vec<F>, scales: Vec<F> },
    NoOp,
    Polynomial,
    Linear { model: LinearModel<F> },
    Tree { tree: RegressionTree<F> },
    Forest { forest: Forest<F> },
    Knn { exemplars: Matrix<F>, targets: Vec<F> },
    Boosting { model: Boosting<F> },
}

/// A trained operator: the spec it was built from, the input dimension it
/// accepts, and the learned state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct FittedOperator<F> {
    spec: OperatorSpec,
    input_dim: usize,
    state: FittedState<F>,
}

impl<F: Scalar> FittedOperator<F> {
    /// Fits `spec` on `x`/`y`. Transformers ignore `y` but the length
    /// contract is enforced uniformly.
    pub fn fit(spec: &OperatorSpec, x: &Matrix<F>, y: &[F]) -> Result<Self, MlError> {
        spec.validate()?;
        if x.n_rows() == 0 {
            return Err(MlError::EmptyData("fit requires at least one row".into()));
        }
        if x.n_rows() != y.len() {
            return Err(MlError::DimensionMismatch(format!(
                "{} feature rows but {} targets",
                x.n_rows(),
                y.len()
            )));
        }
        if !x.is_finite() {
            return Err(MlError::NonFinite("features contain non-finite values".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(MlError::NonFinite("targets contain non-finite values".into()));
        }

        let input_dim = x.n_cols();
        let state = match *spec {
            OperatorSpec::StandardScaler => fit_scaler(x),
            OperatorSpec::NoOp => FittedState::NoOp,
            OperatorSpec::Polynomial { .. } => FittedState::Polynomial,
            OperatorSpec::LinearRegression => {
                FittedState::Linear { model: fit_ridge(x, y, F::zero())? }
            }
            OperatorSpec::Ridge { alpha } => {
                let alpha = F::from_f64(alpha).expect("alpha fits in scalar");
                FittedState::Linear { model: fit_ridge(x, y, alpha)? }
            }
            OperatorSpec::DecisionTree { max_depth, min_leaf } => {
                FittedState::Tree { tree: RegressionTree::fit(x, y, max_depth, min_leaf)? }
            }
            OperatorSpec::RandomForest { n_trees, max_depth, min_leaf, seed } => {
                FittedState::Forest {
                    forest: Forest::fit(x, y, n_trees, max_depth, min_leaf, seed)?,
                }
            }
            OperatorSpec::Knn { .. } => {
                FittedState::Knn { exemplars: x.clone(), targets: y.to_vec() }
            }
            OperatorSpec::GradientBoosting { n_stages, learning_rate, max_depth, .. } => {
                let lr = F::from_f64(learning_rate).expect("learning rate fits in scalar");
                FittedState::Boosting {
                    model: Boosting::fit(x, y, n_stages, lr, max_depth, 1)?,
                }
            }
        };
        Ok(FittedOperator { spec: spec.clone(), input_dim, state })
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn check_input(&self, x: &Matrix<F>) -> Result<(), MlError> {
        if x.n_cols() != self.input_dim {
            return Err(MlError::DimensionMismatch(format!(
                "operator {} was fitted on {} columns, got {}",
                self.spec.kind_name(),
                self.input_dim,
                x.n_cols()
            )));
        }
        Ok(())
    }

    /// Applies a fitted transformer. Calling this on a regressor is an error.
    pub fn transform(&self, x: &Matrix<F>) -> Result<Matrix<F>, MlError> {
        self.check_input(x)?;
        match &self.state {
            FittedState::Scaler { means, scales } => {
                let mut out = x.clone();
                for i in 0..out.n_rows() {
                    let row = out.row_mut(i);
                    for ((v, m), s) in row.iter_mut().zip(means).zip(scales) {
                        *v = (*v - *m) / *s;
                    }
                }
                Ok(out)
            }
            FittedState::NoOp => Ok(x.clone()),
            FittedState::Polynomial => {
                let OperatorSpec::Polynomial { degree } = self.spec else {
                    unreachable!("polynomial state always pairs with a polynomial spec");
                };
                Ok(expand_polynomial(x, degree))
            }
            _ => Err(MlError::WrongKind {
                expected: "transformer",
                actual: self.spec.kind_name(),
            }),
        }
    }

    /// Applies a fitted regressor. Calling this on a transformer is an error.
    pub fn predict(&self, x: &Matrix<F>) -> Result<Vec<F>, MlError> {
        self.check_input(x)?;
        let preds: Vec<F> = match &self.state {
            FittedState::Linear { model } => x.rows_iter().map(|r| model.predict_row(r)).collect(),
            FittedState::Tree { tree } => x.rows_iter().map(|r| tree.predict_row(r)).collect(),
            FittedState::Forest { forest } => {
                x.rows_iter().map(|r| forest.predict_row(r)).collect()
            }
            FittedState::Boosting { model } => {
                x.rows_iter().map(|r| model.predict_row(r)).collect()
            }
            FittedState::Knn { exemplars, targets } => x
                .rows_iter()
                .map(|r| knn_predict_row(exemplars, targets, r))
                .collect(),
            _ => {
                return Err(MlError::WrongKind {
                    expected: "regressor",
                    actual: self.spec.kind_name(),
                })
            }
        };
        if preds.iter().any(|p| !p.is_finite()) {
            return Err(MlError::NonFinite(format!(
                "{} produced non-finite predictions",
                self.spec.kind_name()
            )));
        }
        Ok(preds)
    }

    /// Training loss per boosting stage; only gradient boosting records one.
    pub fn staged_loss(&self) -> Option<&[F]> {
        match &self.state {
            FittedState::Boosting { model } => Some(model.staged_loss()),
            _ => None,
        }
    }
}

fn fit_scaler<F: Scalar>(x: &Matrix<F>) -> FittedState<F> {
    let n = F::from_usize(x.n_rows()).expect("row count fits in scalar");
    let d = x.n_cols();
    let mut means = vec![F::zero(); d];
    for row in x.rows_iter() {
        for (m, v) in means.iter_mut().zip(row) {
            *m += *v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    // Population standard deviation; constant columns get scale 1 so the
    // transform maps them to exactly 0 instead of dividing by 0.
    let mut scales = vec![F::zero(); d];
    for row in x.rows_iter() {
        for ((s, v), m) in scales.iter_mut().zip(row).zip(&means) {
            let c = *v - *m;
            *s += c * c;
        }
    }
    for s in &mut scales {
        *s = (*s / n).sqrt();
        if *s == F::zero() {
            *s = F::one();
        }
    }
    FittedState::Scaler { means, scales }
}

/// All monomials of the input features with total degree 1..=`degree`
/// (interactions included, no constant column). Columns are ordered by
/// degree, then lexicographically by the non-decreasing index tuple, so the
/// expansion is stable across runs: for two features and degree 2 the output
/// is `x0, x1, x0², x0·x1, x1²`.
fn expand_polynomial<F: Scalar>(x: &Matrix<F>, degree: usize) -> Matrix<F> {
    let tuples = monomial_tuples(x.n_cols(), degree);
    let mut out = Matrix::zeros(x.n_rows(), tuples.len());
    for i in 0..x.n_rows() {
        let row = x.row(i);
        for (j, tuple) in tuples.iter().enumerate() {
            let mut v = F::one();
            for &f in tuple {
                v *= row[f];
            }
            out.set(i, j, v);
        }
    }
    out
}

/// Non-decreasing index tuples of length 1..=`degree` over `dim` features.
fn monomial_tuples(dim: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut tuples = Vec::new();
    let mut current: Vec<Vec<usize>> = (0..dim).map(|i| vec![i]).collect();
    for _ in 0..degree {
        tuples.extend(current.iter().cloned());
        let mut next = Vec::new();
        for t in &current {
            let last = *t.last().expect("tuples are non-empty");
            for i in last..dim {
                let mut ext = t.clone();
                ext.push(i);
                next.push(ext);
            }
        }
        current = next;
    }
    // Regenerated breadth-first above gives degree-major order already, but
    // tuples of each degree were appended before extension, so sort by
    // (length, tuple) to pin the documented order.
    tuples.sort();
    tuples.sort_by_key(Vec::len);
    tuples
}

/// Mean target of the `KNN_K` nearest exemplars by Euclidean distance;
/// distance ties are broken by lower exemplar row index.
fn knn_predict_row<F: Scalar>(exemplars: &Matrix<F>, targets: &[F], row: &[F]) -> F {
    let mut scored: Vec<(F, usize)> = exemplars
        .rows_iter()
        .enumerate()
        .map(|(i, ex)| {
            let d2: F = ex
                .iter()
                .zip(row)
                .map(|(a, b)| (*a - *b) * (*a - *b))
                .sum();
            (d2, i)
        })
        .collect();
    scored.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite distances")
            .then(a.1.cmp(&b.1))
    });
    let k = KNN_K.min(scored.len());
    let sum: F = scored[..k].iter().map(|&(_, i)| targets[i]).sum();
    sum / F::from_usize(k).expect("count fits in scalar")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn scaler_centers_and_scales_its_training_data() {
        let x = matrix(&[&[1.0, 7.0], &[2.0, 7.0], &[3.0, 7.0], &[4.0, 7.0]]);
        let y = vec![0.0; 4];
        let op = FittedOperator::fit(&OperatorSpec::StandardScaler, &x, &y).unwrap();
        let t = op.transform(&x).unwrap();
        for j in 0..2 {
            let col = t.column(j);
            let mean: f64 = col.iter().sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-9, "column {j} mean {mean}");
        }
        // Nonconstant column has unit population std.
        let col = t.column(0);
        let var: f64 = col.iter().map(|v| v * v).sum::<f64>() / col.len() as f64;
        assert!((var.sqrt() - 1.0).abs() < 1e-9);
        // Constant column maps to exactly zero (scale forced to 1).
        assert!(t.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn polynomial_degree_two_column_order() {
        let x = matrix(&[&[2.0, 3.0]]);
        let op = FittedOperator::fit(&OperatorSpec::Polynomial { degree: 2 }, &x, &[0.0]).unwrap();
        let t = op.transform(&x).unwrap();
        // x0, x1, x0^2, x0*x1, x1^2
        assert_eq!(t.row(0), &[2.0, 3.0, 4.0, 6.0, 9.0]);
    }

    #[test]
    fn polynomial_degree_one_is_identity() {
        let x = matrix(&[&[2.0, 3.0], &[-1.0, 0.5]]);
        let op = FittedOperator::fit(&OperatorSpec::Polynomial { degree: 1 }, &x, &[0.0, 0.0])
            .unwrap();
        assert_eq!(op.transform(&x).unwrap(), x);
    }

    #[test]
    fn knn_averages_three_nearest_with_index_tiebreak() {
        // Training set: the query row twice plus one other row.
        let x = matrix(&[&[1.0, 1.0], &[1.0, 1.0], &[5.0, 5.0]]);
        let y = vec![10.0, 20.0, 60.0];
        let op = FittedOperator::fit(&OperatorSpec::knn(), &x, &y).unwrap();
        let pred = op.predict(&matrix(&[&[1.0, 1.0]])).unwrap();
        assert_eq!(pred, vec![30.0]); // mean of all three targets
    }

    #[test]
    fn ridge_alpha_zero_matches_linear_regression() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![i as f64, (i * i % 17) as f64])
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| 1.5 * r[0] - 0.25 * r[1] + 4.0).collect();
        let x = Matrix::from_rows(rows).unwrap();
        let linear = FittedOperator::fit(&OperatorSpec::LinearRegression, &x, &y).unwrap();
        let ridge = FittedOperator::fit(&OperatorSpec::Ridge { alpha: 0.0 }, &x, &y).unwrap();
        let pa = linear.predict(&x).unwrap();
        let pb = ridge.predict(&x).unwrap();
        for (a, b) in pa.iter().zip(&pb) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn tree_predictions_are_piecewise_constant() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let x = Matrix::from_rows(xs.iter().map(|&v| vec![v]).collect()).unwrap();
        let y: Vec<f64> = xs.iter().map(|v| if *v < 15.0 { 1.0 } else { 9.0 }).collect();
        let spec = OperatorSpec::DecisionTree { max_depth: Some(4), min_leaf: 1 };
        let op = FittedOperator::fit(&spec, &x, &y).unwrap();
        // Perturbing inside a cell (between training points, away from any
        // midpoint threshold) leaves the prediction unchanged.
        for base in [3.0_f64, 20.0] {
            let p0 = op.predict(&matrix(&[&[base]])).unwrap()[0];
            for eps in [0.01, 0.1, 0.2] {
                let p = op.predict(&matrix(&[&[base + eps]])).unwrap()[0];
                assert_eq!(p0, p);
            }
        }
    }

    #[test]
    fn wrong_kind_calls_are_rejected() {
        let x = matrix(&[&[1.0], &[2.0]]);
        let y = vec![1.0, 2.0];
        let scaler = FittedOperator::fit(&OperatorSpec::StandardScaler, &x, &y).unwrap();
        assert!(matches!(scaler.predict(&x), Err(MlError::WrongKind { .. })));
        let tree =
            FittedOperator::fit(&OperatorSpec::DecisionTree { max_depth: None, min_leaf: 1 }, &x, &y)
                .unwrap();
        assert!(matches!(tree.transform(&x), Err(MlError::WrongKind { .. })));
    }

    #[test]
    fn input_dimension_is_enforced_at_predict_time() {
        let x = matrix(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let op = FittedOperator::fit(&OperatorSpec::LinearRegression, &x, &[1.0, 2.0]).unwrap();
        let narrow = matrix(&[&[1.0]]);
        assert!(matches!(op.predict(&narrow), Err(MlError::DimensionMismatch(_))));
    }

    #[test]
    fn non_finite_inputs_are_rejected_at_fit_time() {
        let x = matrix(&[&[f64::NAN], &[1.0]]);
        let err = FittedOperator::fit(&OperatorSpec::LinearRegression, &x, &[1.0, 2.0]);
        assert!(matches!(err, Err(MlError::NonFinite(_))));
        let x = matrix(&[&[0.0], &[1.0]]);
        let err = FittedOperator::fit(&OperatorSpec::LinearRegression, &x, &[1.0, f64::INFINITY]);
        assert!(matches!(err, Err(MlError::NonFinite(_))));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        for spec in [
            OperatorSpec::Polynomial { degree: 0 },
            OperatorSpec::Ridge { alpha: -1.0 },
            OperatorSpec::Knn { k: 5 },
            OperatorSpec::DecisionTree { max_depth: None, min_leaf: 0 },
            OperatorSpec::GradientBoosting {
                n_stages: 10,
                learning_rate: 1.5,
                max_depth: Some(3),
                seed: 0,
            },
            OperatorSpec::GradientBoosting {
                n_stages: 0,
                learning_rate: 0.1,
                max_depth: Some(3),
                seed: 0,
            },
        ] {
            assert!(matches!(spec.validate(), Err(MlError::InvalidSpec(_))), "{spec:?}");
        }
        assert!(OperatorSpec::knn().validate().is_ok());
    }

    #[test]
    fn serialization_round_trips_to_identical_predictions() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] * 2.0 + r[1]).collect();
        let x = Matrix::from_rows(rows).unwrap();
        let spec = OperatorSpec::RandomForest {
            n_trees: 5,
            max_depth: Some(4),
            min_leaf: 1,
            seed: 42,
        };
        let op = FittedOperator::fit(&spec, &x, &y).unwrap();
        let json = serde_json::to_string(&op).unwrap();
        let back: FittedOperator<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(op.predict(&x).unwrap(), back.predict(&x).unwrap());
    }

    #[test]
    fn spec_json_uses_snake_case_tags() {
        let json = serde_json::to_string(&OperatorSpec::Ridge { alpha: 0.5 }).unwrap();
        assert_eq!(json, r#"{"ridge":{"alpha":0.5}}"#);
        let back: OperatorSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, OperatorSpec::Ridge { alpha: 0.5 });
        assert_eq!(
            serde_json::to_string(&OperatorSpec::StandardScaler).unwrap(),
            r#""standard_scaler""#
        );
    }
}
