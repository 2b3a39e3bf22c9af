//! Three-step prediction pipelines (scaler → transform → regressor),
//! cross-validated scoring, and seeded random search over a spec space.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::operator::{FittedOperator, OperatorSpec};
use crate::{substream, Matrix, MlError, Scalar};

/// Fold count used by all cross-validated selection in this crate.
pub const CV_FOLDS: usize = 5;

/// A pipeline description: always a standard scaler, then one transform
/// (no-op or polynomial expansion), then one regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub scaler: OperatorSpec,
    pub transform: OperatorSpec,
    pub regressor: OperatorSpec,
}

impl PipelineSpec {
    /// Builds a spec with the fixed standard-scaler first step.
    pub fn new(transform: OperatorSpec, regressor: OperatorSpec) -> Self {
        PipelineSpec { scaler: OperatorSpec::StandardScaler, transform, regressor }
    }

    pub fn validate(&self) -> Result<(), MlError> {
        if self.scaler != OperatorSpec::StandardScaler {
            return Err(MlError::InvalidSpec(format!(
                "pipeline scaler step must be standard_scaler, got {}",
                self.scaler.kind_name()
            )));
        }
        if !matches!(self.transform, OperatorSpec::NoOp | OperatorSpec::Polynomial { .. }) {
            return Err(MlError::InvalidSpec(format!(
                "pipeline transform step must be no_op or polynomial, got {}",
                self.transform.kind_name()
            )));
        }
        if self.regressor.is_transformer() {
            return Err(MlError::InvalidSpec(format!(
                "pipeline regressor step must be a regressor, got {}",
                self.regressor.kind_name()
            )));
        }
        self.scaler.validate()?;
        self.transform.validate()?;
        self.regressor.validate()
    }
}

/// A fully fitted pipeline ready to predict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct FittedPipeline<F> {
    spec: PipelineSpec,
    scaler: FittedOperator<F>,
    transform: FittedOperator<F>,
    regressor: FittedOperator<F>,
}

impl<F: Scalar> FittedPipeline<F> {
    pub fn fit(spec: &PipelineSpec, x: &Matrix<F>, y: &[F]) -> Result<Self, MlError> {
        spec.validate()?;
        let scaler = FittedOperator::fit(&spec.scaler, x, y)?;
        let scaled = scaler.transform(x)?;
        let transform = FittedOperator::fit(&spec.transform, &scaled, y)?;
        let transformed = transform.transform(&scaled)?;
        let regressor = FittedOperator::fit(&spec.regressor, &transformed, y)?;
        Ok(FittedPipeline { spec: spec.clone(), scaler, transform, regressor })
    }

    pub fn predict(&self, x: &Matrix<F>) -> Result<Vec<F>, MlError> {
        let scaled = self.scaler.transform(x)?;
        let transformed = self.transform.transform(&scaled)?;
        self.regressor.predict(&transformed)
    }

    pub fn spec(&self) -> &PipelineSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.scaler.input_dim()
    }
}

/// Shuffled k-fold assignment: returns `k` disjoint index sets covering
/// `0..rows`, sizes differing by at most one, shuffled by `seed`.
pub fn kfold_indices(rows: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, MlError> {
    if k < 2 || rows < k {
        return Err(MlError::BadFolds { k, rows });
    }
    let mut order: Vec<usize> = (0..rows).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fisher-Yates so the permutation depends only on the seed.
    for i in (1..rows).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let base = rows / k;
    let extra = rows % k;
    let mut folds = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(order[at..at + size].to_vec());
        at += size;
    }
    Ok(folds)
}

/// Mean absolute error between predictions and targets.
pub fn mean_absolute_error<F: Scalar>(pred: &[F], truth: &[F]) -> F {
    let n = F::from_usize(truth.len()).expect("count fits in scalar");
    pred.iter()
        .zip(truth)
        .map(|(p, t)| (*p - *t).abs())
        .sum::<F>()
        / n
}

/// Mean over `k` shuffled folds of the held-out MAE of `spec` fitted on the
/// remaining rows. The split depends only on `seed`, so scoring different
/// specs with the same seed compares them on identical folds.
pub fn cross_validate<F: Scalar>(
    spec: &PipelineSpec,
    x: &Matrix<F>,
    y: &[F],
    k: usize,
    seed: u64,
) -> Result<F, MlError> {
    spec.validate()?;
    if x.n_rows() != y.len() {
        return Err(MlError::DimensionMismatch(format!(
            "{} feature rows but {} targets",
            x.n_rows(),
            y.len()
        )));
    }
    let folds = kfold_indices(x.n_rows(), k, seed)?;
    let all: Vec<usize> = (0..x.n_rows()).collect();
    let mut total = F::zero();
    for fold in &folds {
        let held: std::collections::HashSet<usize> = fold.iter().copied().collect();
        let train_idx: Vec<usize> = all.iter().copied().filter(|i| !held.contains(i)).collect();
        let x_train = x.select_rows(&train_idx);
        let y_train: Vec<F> = train_idx.iter().map(|&i| y[i]).collect();
        let x_test = x.select_rows(fold);
        let y_test: Vec<F> = fold.iter().map(|&i| y[i]).collect();
        let fitted = FittedPipeline::fit(spec, &x_train, &y_train)?;
        let pred = fitted.predict(&x_test)?;
        total += mean_absolute_error(&pred, &y_test);
    }
    Ok(total / F::from_usize(k).expect("count fits in scalar"))
}

/// The candidate pool random search samples from: transform options with
/// sampling weights, crossed with regressor options (sampled uniformly).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub transforms: Vec<OperatorSpec>,
    /// Relative sampling weight per transform; same length as `transforms`.
    pub transform_weights: Vec<u32>,
    pub regressors: Vec<OperatorSpec>,
}

impl SearchSpace {
    /// The default catalog grid: transforms {no_op, polynomial(1),
    /// polynomial(2)} sampled uniformly, and every regressor kind with its
    /// default hyperparameter grid. Seeds embedded in the ensemble specs are
    /// derived from `seed` so the whole space is reproducible.
    pub fn default_space(seed: u64) -> Self {
        let transforms = vec![
            OperatorSpec::NoOp,
            OperatorSpec::Polynomial { degree: 1 },
            OperatorSpec::Polynomial { degree: 2 },
        ];
        let transform_weights = vec![1, 1, 1];
        let mut regressors = vec![OperatorSpec::LinearRegression, OperatorSpec::knn()];
        for alpha in [0.1, 1.0, 10.0] {
            regressors.push(OperatorSpec::Ridge { alpha });
        }
        for max_depth in [Some(3), Some(6), None] {
            for min_leaf in [1, 5] {
                regressors.push(OperatorSpec::DecisionTree { max_depth, min_leaf });
            }
        }
        for n_trees in [50, 100] {
            regressors.push(OperatorSpec::RandomForest {
                n_trees,
                max_depth: Some(6),
                min_leaf: 1,
                seed: substream(seed, 101),
            });
        }
        for n_stages in [50, 200] {
            for learning_rate in [0.05, 0.1] {
                regressors.push(OperatorSpec::GradientBoosting {
                    n_stages,
                    learning_rate,
                    max_depth: Some(3),
                    seed: substream(seed, 102),
                });
            }
        }
        SearchSpace { transforms, transform_weights, regressors }
    }

    /// Same grid, but with the no-op transform weighted `weight`× relative
    /// to each polynomial option. Used to bias spaces whose features are
    /// already high-dimensional towards the identity transform.
    pub fn default_space_favoring_no_op(seed: u64, weight: u32) -> Self {
        let mut space = Self::default_space(seed);
        space.transform_weights = vec![weight, 1, 1];
        space
    }

    fn validate(&self) -> Result<(), MlError> {
        if self.transforms.is_empty() || self.regressors.is_empty() {
            return Err(MlError::EmptySearchSpace);
        }
        if self.transforms.len() != self.transform_weights.len()
            || self.transform_weights.iter().sum::<u32>() == 0
        {
            return Err(MlError::InvalidSpec(
                "transform weights must match transforms and sum to a positive value".into(),
            ));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> PipelineSpec {
        let total: u32 = self.transform_weights.iter().sum();
        let mut pick = rng.random_range(0..total);
        let mut transform = self.transforms.last().expect("validated non-empty").clone();
        for (t, &w) in self.transforms.iter().zip(&self.transform_weights) {
            if pick < w {
                transform = t.clone();
                break;
            }
            pick -= w;
        }
        let regressor = self.regressors[rng.random_range(0..self.regressors.len())].clone();
        PipelineSpec::new(transform, regressor)
    }
}

/// Outcome of one random search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct SearchResult<F> {
    pub best: PipelineSpec,
    pub best_mae: F,
    /// Every distinct spec that was scored, in sample order, with its CV MAE.
    pub evaluated: Vec<(PipelineSpec, F)>,
}

/// Seeded random search: draws `budget` specs from `space`, deduplicates
/// them preserving first-seen order, scores each with [`cross_validate`] on
/// folds shared across all evaluations, and returns the argmin MAE (ties go
/// to the earlier sample). Evaluations that fail numerically are skipped.
pub fn search<F: Scalar>(
    space: &SearchSpace,
    x: &Matrix<F>,
    y: &[F],
    budget: usize,
    seed: u64,
) -> Result<SearchResult<F>, MlError> {
    space.validate()?;
    if budget == 0 {
        return Err(MlError::InvalidSpec("search budget must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, 0));
    let fold_seed = substream(seed, 1);

    let mut candidates: Vec<PipelineSpec> = Vec::new();
    for _ in 0..budget {
        let spec = space.sample(&mut rng);
        if !candidates.contains(&spec) {
            candidates.push(spec);
        }
    }

    let mut evaluated: Vec<(PipelineSpec, F)> = Vec::new();
    let mut best: Option<(usize, F)> = None;
    for spec in candidates {
        let mae = match cross_validate(&spec, x, y, CV_FOLDS, fold_seed) {
            Ok(m) if m.is_finite() => m,
            // Numerical failure in one candidate disqualifies it, nothing more.
            Ok(_) | Err(MlError::NonFinite(_)) | Err(MlError::SolveFailed(_)) => continue,
            Err(e) => return Err(e),
        };
        evaluated.push((spec, mae));
        let idx = evaluated.len() - 1;
        // Strict comparison keeps the earlier sample on ties.
        if best.is_none_or(|(_, b)| mae < b) {
            best = Some((idx, mae));
        }
    }
    let (best_idx, best_mae) =
        best.ok_or_else(|| MlError::SolveFailed("no candidate produced a finite score".into()))?;
    Ok(SearchResult { best: evaluated[best_idx].0.clone(), best_mae, evaluated })
}
