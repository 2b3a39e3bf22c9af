//! Stacked ensembles: per-feature-space base pipelines selected by search,
//! a combiner trained on their out-of-fold predictions, and base refits on
//! the full data.

use serde::{Deserialize, Serialize};

use crate::pipeline::{
    kfold_indices, search, FittedPipeline, SearchResult, SearchSpace, CV_FOLDS,
};
use crate::{substream, Matrix, MlError, Scalar};

/// A trained stacked ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct StackedFit<F> {
    /// Base pipelines, one per feature space, refit on all rows.
    pub bases: Vec<FittedPipeline<F>>,
    /// The search outcome that selected each base spec.
    pub base_results: Vec<SearchResult<F>>,
    /// Combiner pipeline over the bases' prediction columns.
    pub combiner: FittedPipeline<F>,
    pub combiner_result: SearchResult<F>,
    /// Out-of-fold base predictions the combiner was trained on
    /// (rows × bases). Kept for inspection; never contains in-fold values.
    pub oof: Matrix<F>,
}

/// Trains a stacked ensemble.
///
/// For each `(features, space)` pair, a seeded random search selects the
/// best pipeline by cross-validated MAE. The combiner is then selected by
/// the same kind of search over the out-of-fold base predictions — each
/// base's prediction for a row comes from a fit that never saw that row —
/// and finally the bases are refit on all rows. Seeds are derived from
/// `seed` per role, so the whole procedure is reproducible.
pub fn train_stacked<F: Scalar>(
    feature_sets: &[(Matrix<F>, SearchSpace)],
    combiner_space: &SearchSpace,
    y: &[F],
    budget: usize,
    seed: u64,
) -> Result<StackedFit<F>, MlError> {
    if feature_sets.is_empty() {
        return Err(MlError::EmptyData("stacking requires at least one feature space".into()));
    }
    let n = y.len();
    for (i, (x, _)) in feature_sets.iter().enumerate() {
        if x.n_rows() != n {
            return Err(MlError::DimensionMismatch(format!(
                "feature space {i} has {} rows but {n} targets",
                x.n_rows()
            )));
        }
    }
    let nb = feature_sets.len() as u64;

    let mut base_results = Vec::with_capacity(feature_sets.len());
    for (i, (x, space)) in feature_sets.iter().enumerate() {
        base_results.push(search(space, x, y, budget, substream(seed, i as u64 + 1))?);
    }

    // Out-of-fold predictions: for every fold, fit each selected base spec on
    // the other folds and predict the held-out rows.
    let folds = kfold_indices(n, CV_FOLDS, substream(seed, nb + 1))?;
    let all: Vec<usize> = (0..n).collect();
    let mut oof = Matrix::zeros(n, feature_sets.len());
    for fold in &folds {
        let held: std::collections::HashSet<usize> = fold.iter().copied().collect();
        let train_idx: Vec<usize> = all.iter().copied().filter(|i| !held.contains(i)).collect();
        let y_train: Vec<F> = train_idx.iter().map(|&i| y[i]).collect();
        for (b, (x, _)) in feature_sets.iter().enumerate() {
            let fitted =
                FittedPipeline::fit(&base_results[b].best, &x.select_rows(&train_idx), &y_train)?;
            let preds = fitted.predict(&x.select_rows(fold))?;
            for (&row, p) in fold.iter().zip(preds) {
                oof.set(row, b, p);
            }
        }
    }

    let combiner_result = search(combiner_space, &oof, y, budget, substream(seed, nb + 2))?;
    let combiner = FittedPipeline::fit(&combiner_result.best, &oof, y)?;

    let mut bases = Vec::with_capacity(feature_sets.len());
    for (b, (x, _)) in feature_sets.iter().enumerate() {
        bases.push(FittedPipeline::fit(&base_results[b].best, x, y)?);
    }

    Ok(StackedFit { bases, base_results, combiner, combiner_result, oof })
}

impl<F: Scalar> StackedFit<F> {
    /// Predicts from one feature matrix per base (all with the same rows):
    /// base predictions are stacked into columns and fed to the combiner.
    pub fn predict(&self, feature_sets: &[&Matrix<F>]) -> Result<Vec<F>, MlError> {
        if feature_sets.len() != self.bases.len() {
            return Err(MlError::DimensionMismatch(format!(
                "model has {} base pipelines but {} feature matrices were given",
                self.bases.len(),
                feature_sets.len()
            )));
        }
        let n = feature_sets.first().map_or(0, |x| x.n_rows());
        if feature_sets.iter().any(|x| x.n_rows() != n) {
            return Err(MlError::DimensionMismatch(
                "feature matrices have unequal row counts".into(),
            ));
        }
        let mut cols = Vec::with_capacity(self.bases.len());
        for (base, x) in self.bases.iter().zip(feature_sets) {
            cols.push(base.predict(x)?);
        }
        self.combiner.predict(&Matrix::from_columns(&cols)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::OperatorSpec;
    use crate::pipeline::{mean_absolute_error, PipelineSpec};

    /// Three views of the same 1-D signal: the raw value, its square, and a
    /// coarse bucket. Together they describe y = x + 0.5·x² exactly.
    fn three_views(n: usize) -> (Vec<(Matrix<f64>, SearchSpace)>, Vec<f64>) {
        let xs: Vec<f64> = (0..n).map(|i| (i as f64) / (n as f64) * 10.0).collect();
        let y: Vec<f64> = xs.iter().map(|x| x + 0.5 * x * x).collect();
        let v1 = Matrix::from_rows(xs.iter().map(|&x| vec![x]).collect()).unwrap();
        let v2 = Matrix::from_rows(xs.iter().map(|&x| vec![x * x]).collect()).unwrap();
        let v3 = Matrix::from_rows(xs.iter().map(|&x| vec![(x as usize / 2) as f64]).collect())
            .unwrap();
        let space = SearchSpace {
            transforms: vec![OperatorSpec::NoOp, OperatorSpec::Polynomial { degree: 2 }],
            transform_weights: vec![1, 1],
            regressors: vec![
                OperatorSpec::LinearRegression,
                OperatorSpec::knn(),
                OperatorSpec::DecisionTree { max_depth: Some(4), min_leaf: 1 },
            ],
        };
        let sets = vec![
            (v1, space.clone()),
            (v2, space.clone()),
            (v3, space),
        ];
        (sets, y)
    }

    fn combiner_space() -> SearchSpace {
        SearchSpace {
            transforms: vec![OperatorSpec::NoOp],
            transform_weights: vec![1],
            regressors: vec![OperatorSpec::LinearRegression, OperatorSpec::knn()],
        }
    }

    #[test]
    fn zero_target_gives_zero_predictions_everywhere() {
        let (mut sets, _) = three_views(40);
        let y = vec![0.0; 40];
        // Narrow the regressor pool for speed; behavior is what's under test.
        for (_, space) in &mut sets {
            space.regressors = vec![OperatorSpec::LinearRegression, OperatorSpec::knn()];
        }
        let model = train_stacked(&sets, &combiner_space(), &y, 4, 11).unwrap();
        let mats: Vec<&Matrix<f64>> = sets.iter().map(|(x, _)| x).collect();
        let preds = model.predict(&mats).unwrap();
        assert!(preds.iter().all(|p| p.abs() < 1e-9), "{preds:?}");
        for (base, (x, _)) in model.bases.iter().zip(&sets) {
            let base_preds = base.predict(x).unwrap();
            assert!(base_preds.iter().all(|p| p.abs() < 1e-9));
        }
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let (sets, y) = three_views(35);
        let a = train_stacked(&sets, &combiner_space(), &y, 5, 21).unwrap();
        let b = train_stacked(&sets, &combiner_space(), &y, 5, 21).unwrap();
        assert_eq!(a, b);
        let ja = serde_json::to_vec(&a).unwrap();
        let jb = serde_json::to_vec(&b).unwrap();
        assert_eq!(ja, jb, "serialized models must be byte-identical");
        let c = train_stacked(&sets, &combiner_space(), &y, 5, 22).unwrap();
        assert!(a != c || a.combiner_result == c.combiner_result);
    }

    #[test]
    fn oof_predictions_are_held_out_even_for_memorizing_bases() {
        // A depth-unlimited tree memorizes its training rows exactly, so any
        // gap between the oof column and the labels proves those predictions
        // came from fits that excluded the row.
        let n = 30;
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y: Vec<f64> = xs.iter().map(|x| x * 7.0 + 3.0).collect();
        let x = Matrix::from_rows(xs.iter().map(|&v| vec![v]).collect()).unwrap();
        let space = SearchSpace {
            transforms: vec![OperatorSpec::NoOp],
            transform_weights: vec![1],
            regressors: vec![OperatorSpec::DecisionTree { max_depth: None, min_leaf: 1 }],
        };
        let model =
            train_stacked(&[(x.clone(), space)], &combiner_space(), &y, 2, 5).unwrap();
        // Refit base memorizes the training data...
        let refit_preds = model.bases[0].predict(&x).unwrap();
        assert_eq!(refit_preds, y);
        // ...but the combiner's training column was out-of-fold, so it cannot
        // match the labels everywhere.
        let oof_col = model.oof.column(0);
        assert!(oof_col.iter().zip(&y).any(|(p, t)| (p - t).abs() > 1e-9));
    }

    #[test]
    fn stacked_test_mae_tracks_the_best_base() {
        let (sets, y) = three_views(100);
        // Deterministic 80/20 split: every fifth row is held out.
        let test_idx: Vec<usize> = (0..100).filter(|i| i % 5 == 4).collect();
        let train_idx: Vec<usize> = (0..100).filter(|i| i % 5 != 4).collect();
        let train_sets: Vec<(Matrix<f64>, SearchSpace)> = sets
            .iter()
            .map(|(x, s)| (x.select_rows(&train_idx), s.clone()))
            .collect();
        let y_train: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
        let y_test: Vec<f64> = test_idx.iter().map(|&i| y[i]).collect();
        let model = train_stacked(&train_sets, &combiner_space(), &y_train, 8, 13).unwrap();

        let test_mats: Vec<Matrix<f64>> =
            sets.iter().map(|(x, _)| x.select_rows(&test_idx)).collect();
        let stacked_preds = model.predict(&test_mats.iter().collect::<Vec<_>>()).unwrap();
        let stacked_mae = mean_absolute_error(&stacked_preds, &y_test);
        let mut best_base = f64::INFINITY;
        for (b, m) in test_mats.iter().enumerate() {
            let preds = model.bases[b].predict(m).unwrap();
            best_base = best_base.min(mean_absolute_error(&preds, &y_test));
        }
        assert!(
            stacked_mae <= 1.05 * best_base + 1e-9,
            "stacked {stacked_mae} vs best base {best_base}"
        );
    }

    #[test]
    fn mismatched_rows_are_rejected() {
        let (sets, y) = three_views(30);
        let mut bad = sets.clone();
        bad[1].0 = bad[1].0.select_rows(&(0..20).collect::<Vec<_>>());
        assert!(matches!(
            train_stacked(&bad, &combiner_space(), &y, 3, 1),
            Err(MlError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn overfit_single_tree_memorizes_a_training_row() {
        // One-query dataset duplicated enough to survive 5-fold CV: a
        // depth-unlimited tree pipeline reproduces the exact label.
        let x = Matrix::from_rows(vec![vec![4.0, 2.0]; 10]).unwrap();
        let y = vec![23.0; 10];
        let spec = PipelineSpec::new(
            OperatorSpec::NoOp,
            OperatorSpec::DecisionTree { max_depth: None, min_leaf: 1 },
        );
        let fitted = FittedPipeline::fit(&spec, &x, &y).unwrap();
        let pred = fitted.predict(&x).unwrap();
        assert_eq!(pred[0], 23.0);
    }
}
