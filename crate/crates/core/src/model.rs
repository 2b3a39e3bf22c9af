//! The trained cost estimator: a stacked ensemble over the three feature
//! spaces, plus persistence with schema/config compatibility hashes.
//!
//! Training runs one seeded pipeline search per feature space (field bag,
//! graph embedding, summary scalars), trains the selected bases, and fits a
//! combiner on out-of-fold base predictions. The saved artifact carries
//! hashes of the schema and cost configuration it was trained against, and
//! refuses to load against different ones unless forced.

use std::path::Path;

use gqlcost_ml::{substream, train_stacked, Mat64, OperatorSpec, SearchSpace, StackedFit};
use serde::{Deserialize, Serialize};

use crate::ast::Schema;
use crate::cost::CostConfig;
use crate::dataset::{featurize_records, DatasetRecord, FeatureTables};
use crate::error::{Error, Result};
use crate::evaluation::{compare, CompareReport};
use crate::features::{
    field_features, graph_features, summary_features, FieldFeatureSpace, GraphFeatureParams,
};
use crate::parser::parse_query;
use crate::util::sha256_hex;
use crate::validate::validate;

pub const MODEL_VERSION: u32 = 1;
pub const DEFAULT_SEARCH_BUDGET: usize = 60;

/// Polynomial expansions are dropped from a search space when they would
/// exceed this many columns (quadratic expansion of the 64-bucket graph
/// space would otherwise dominate the training budget).
const MAX_EXPANDED_COLUMNS: usize = 512;

/// Canonical hash of a schema (JSON serialization is deterministic: sorted
/// maps, ordered fields).
pub fn schema_hash(schema: &Schema) -> String {
    sha256_hex(
        serde_json::to_string(schema)
            .expect("schema serializes")
            .as_bytes(),
    )
}

/// Canonical hash of a cost configuration.
pub fn config_hash(config: &CostConfig) -> String {
    sha256_hex(
        serde_json::to_string(config)
            .expect("config serializes")
            .as_bytes(),
    )
}

/// Number of monomial columns a polynomial expansion of `degree` produces
/// on `dim` inputs: C(dim + degree, degree) − 1, saturating.
fn expanded_cols(dim: usize, degree: usize) -> usize {
    let mut count: u128 = 1;
    for i in 1..=degree as u128 {
        count = count.saturating_mul(dim as u128 + i) / i;
        if count > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    (count - 1).min(usize::MAX as u128) as usize
}

/// The default operator grid for one feature space, with polynomial
/// transforms pruned when their expansion would blow past the column cap.
fn space_for_dim(seed: u64, dim: usize, no_op_weight: Option<u32>) -> SearchSpace {
    let mut space = match no_op_weight {
        Some(w) => SearchSpace::default_space_favoring_no_op(seed, w),
        None => SearchSpace::default_space(seed),
    };
    let keep: Vec<bool> = space
        .transforms
        .iter()
        .map(|t| match t {
            OperatorSpec::Polynomial { degree } => {
                expanded_cols(dim, *degree) <= MAX_EXPANDED_COLUMNS
            }
            _ => true,
        })
        .collect();
    if keep.iter().any(|k| !k) {
        let transforms = space
            .transforms
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(t, _)| t.clone())
            .collect();
        let weights = space
            .transform_weights
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(w, _)| *w)
            .collect();
        space.transforms = transforms;
        space.transform_weights = weights;
    }
    space
}

/// Training knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub seed: u64,
    pub search_budget: usize,
    pub graph_params: GraphFeatureParams,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            seed: 0,
            search_budget: DEFAULT_SEARCH_BUDGET,
            graph_params: GraphFeatureParams::default(),
        }
    }
}

/// A trained stacked cost model with the settings it was trained under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StackedModel {
    pub version: u32,
    pub schema_hash: String,
    pub config_hash: String,
    pub seed: u64,
    pub search_budget: usize,
    pub graph_params: GraphFeatureParams,
    pub field_space: FieldFeatureSpace,
    pub fit: StackedFit<f64>,
}

/// Trains the stacked model on a labeled corpus.
pub fn train(
    schema: &Schema,
    config: &CostConfig,
    records: &[DatasetRecord],
    opts: &TrainOptions,
) -> Result<StackedModel> {
    config.check_against(schema)?;
    let field_space = FieldFeatureSpace::from_schema(schema);
    let tables = featurize_records(schema, config, &field_space, &opts.graph_params, records)?;
    let y = tables.require_labels()?;
    let seed = opts.seed;
    // Count features fit linear models well; nudge the field-space search
    // toward untransformed pipelines.
    let spaces = [
        (
            tables.field.clone(),
            space_for_dim(substream(seed, 10), tables.field.n_cols(), Some(3)),
        ),
        (
            tables.graph.clone(),
            space_for_dim(substream(seed, 11), tables.graph.n_cols(), None),
        ),
        (
            tables.summary.clone(),
            space_for_dim(substream(seed, 12), tables.summary.n_cols(), None),
        ),
    ];
    let combiner_space = space_for_dim(substream(seed, 13), spaces.len(), None);
    let fit = train_stacked(&spaces, &combiner_space, &y, opts.search_budget, seed)?;
    Ok(StackedModel {
        version: MODEL_VERSION,
        schema_hash: schema_hash(schema),
        config_hash: config_hash(config),
        seed,
        search_budget: opts.search_budget,
        graph_params: opts.graph_params.clone(),
        field_space,
        fit,
    })
}

impl StackedModel {
    /// Feature rows (field, graph, summary) for one query text, computed
    /// with this model's own space and parameters.
    pub fn features_for_query(
        &self,
        schema: &Schema,
        config: &CostConfig,
        query_text: &str,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let typed = validate(schema, &parse_query(query_text)?)?;
        Ok((
            field_features(&typed, &self.field_space)?.to_f64s(),
            graph_features(&typed, &self.graph_params)?.to_f64s(),
            summary_features(&typed, config)?.to_f64s(),
        ))
    }

    /// Stacked estimate from raw feature rows, clamped to be nonnegative
    /// (costs cannot be negative).
    pub fn estimate_features(&self, field: &[f64], graph: &[f64], summary: &[f64]) -> Result<f64> {
        let xf = Mat64::from_rows(vec![field.to_vec()])?;
        let xg = Mat64::from_rows(vec![graph.to_vec()])?;
        let xs = Mat64::from_rows(vec![summary.to_vec()])?;
        let raw = self.fit.predict(&[&xf, &xg, &xs])?;
        Ok(raw[0].max(0.0))
    }

    /// End-to-end estimate for one query text.
    pub fn estimate(&self, schema: &Schema, config: &CostConfig, query_text: &str) -> Result<f64> {
        let (f, g, s) = self.features_for_query(schema, config, query_text)?;
        self.estimate_features(&f, &g, &s)
    }

    /// Clamped predictions for pre-extracted feature tables.
    pub fn predict_tables(&self, tables: &FeatureTables) -> Result<Vec<f64>> {
        let raw = self
            .fit
            .predict(&[&tables.field, &tables.graph, &tables.summary])?;
        Ok(raw.into_iter().map(|v| v.max(0.0)).collect())
    }

    /// Featurizes `records` with the model's space/params and predicts.
    pub fn predict_records(
        &self,
        schema: &Schema,
        config: &CostConfig,
        records: &[DatasetRecord],
    ) -> Result<Vec<f64>> {
        let tables = featurize_records(
            schema,
            config,
            &self.field_space,
            &self.graph_params,
            records,
        )?;
        self.predict_tables(&tables)
    }

    /// Serializes the model to canonical JSON (byte-stable across runs).
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Model(format!("serialize model: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Loads a model and checks it was trained against this schema and
    /// config (by hash). `force` skips the hash check, not the version
    /// check.
    pub fn load(
        path: &Path,
        schema: &Schema,
        config: &CostConfig,
        force: bool,
    ) -> Result<StackedModel> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let model: StackedModel = serde_json::from_str(&text)
            .map_err(|e| Error::Model(format!("parse model file: {e}")))?;
        if model.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "model version {} is not supported (expected {MODEL_VERSION})",
                model.version
            )));
        }
        if !force {
            if model.schema_hash != schema_hash(schema) {
                return Err(Error::HashMismatch(
                    "model was trained against a different schema (use --force to override)"
                        .to_string(),
                ));
            }
            if model.config_hash != config_hash(config) {
                return Err(Error::HashMismatch(
                    "model was trained against a different cost config (use --force to override)"
                        .to_string(),
                ));
            }
        }
        Ok(model)
    }
}

/// Scores the model and the static bound on the same labeled records.
pub fn compare_on_records(
    model: &StackedModel,
    schema: &Schema,
    config: &CostConfig,
    records: &[DatasetRecord],
) -> Result<CompareReport> {
    let tables = featurize_records(
        schema,
        config,
        &model.field_space,
        &model.graph_params,
        records,
    )?;
    let labels = tables.require_labels()?;
    let ml = model.predict_tables(&tables)?;
    compare(&labels, &tables.static_bounds, &ml)
}
