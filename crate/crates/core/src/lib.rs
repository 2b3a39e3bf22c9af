//! GraphQL query cost estimation toolkit.
//!
//! The crate parses a GraphQL schema subset and query documents, computes
//! exact response complexities and static upper-bound costs, extracts
//! feature embeddings (field bag, Weisfeiler–Lehman graph hashes, summary
//! scalars), trains a stacked regression ensemble on labeled corpora, and
//! evaluates both estimators offline and inside a simulated rate-limit
//! gateway.
//!
//! Numeric policy: exact costs are arbitrary-precision rationals
//! ([`Complexity`]); learned estimation and evaluation run on `f64`
//! (the model stack is generic over [`Scalar`], re-exported from the
//! `gqlcost-ml` crate together with the [`Mat64`] alias).

pub mod ast;
pub mod cost;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod lex;
pub mod model;
pub mod parser;
pub mod rational;
pub mod simulator;
pub mod util;
pub mod validate;

#[cfg(test)]
pub(crate) mod testutil;

pub use ast::{
    print_query, ArgDef, ArgValue, FieldDef, FieldNode, QueryDocument, ResponseTree, Schema,
    SelectionSet, TypeDef, TypeKind, TypeRef, DEFAULT_QUERY_ROOT,
};
pub use cost::{
    list_limits, resolve_list_limit, response_complexity, static_bound, CostConfig,
    OBJECT_DEFAULT_KEY, SCALAR_DEFAULT_KEY,
};
pub use dataset::{
    featurize_records, generate_synthetic, label_records, load_jsonl, read_jsonl, split,
    write_jsonl, DatasetRecord, FeatureTables, GeneratorConfig, LabelDiagnostic, ListFill,
};
pub use error::{Error, Pos, Result};
pub use evaluation::{
    compare, error_percent, eval_report, mae, mi_ranking, mutual_information, triples_csv,
    CompareReport, EvalReport, RecordTriple, ERROR_QUANTILES, MI_BINS,
};
pub use features::{
    field_features, graph_features, summary_features, FeatureVector, FieldFeatureSpace,
    GraphFeatureParams, SpaceTag, SummaryFeatures,
};
pub use model::{
    compare_on_records, config_hash, schema_hash, train, StackedModel, TrainOptions,
    DEFAULT_SEARCH_BUDGET, MODEL_VERSION,
};
pub use parser::{parse_query, parse_schema};
pub use rational::Complexity;
pub use simulator::{
    default_thresholds, robustness_csv, robustness_sweep, score_records, simulate, spearman,
    sweep_csv, threshold_sweep, EstimatorKind, RecordScore, RobustnessPoint, SimConfig, SimReport,
    SweepPoint, DEFAULT_MULTIPLIERS, DEFAULT_N_SIMS, DEFAULT_SAMPLE_SIZE,
};
pub use validate::{validate, TypedField, TypedQuery};

pub use gqlcost_ml::{Mat64, Scalar};
