//! Query feature extraction: three embeddings of a validated query.
//!
//! * **Field features** — a bag-of-words count over `(type, field)` pairs,
//!   one column per field of every object type in the schema.
//! * **Graph features** — a Weisfeiler-Lehman subtree feature map of the
//!   selection tree, hashed into a fixed number of buckets. A deterministic,
//!   training-free stand-in for learned graph embeddings built on the same
//!   substructure family.
//! * **Summary features** — six scalars: static bound, query size, width,
//!   nesting, list count, and the sum of resolved list limits.
//!
//! All extractors are pure and deterministic; argument *values* never affect
//! any embedding.

use serde::{Deserialize, Serialize};

use crate::ast::Schema;
use crate::cost::{list_limits, static_bound, CostConfig};
use crate::error::{Error, Result};
use crate::rational::Complexity;
use crate::util::fnv1a64;
use crate::validate::{TypedField, TypedQuery};

/// Which embedding a vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceTag {
    Field,
    Graph,
    Summary,
    Stacked,
}

/// A dense vector of exact rationals tagged with its space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<Complexity>,
    pub space_tag: SpaceTag,
}

impl FeatureVector {
    pub fn to_f64s(&self) -> Vec<f64> {
        self.values.iter().map(Complexity::to_f64).collect()
    }
}

/// Column layout of the field bag-of-words: one column per `(type, field)`
/// pair across all object types, in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldFeatureSpace {
    /// Sorted `"Type.field"` column names.
    columns: Vec<String>,
}

impl FieldFeatureSpace {
    pub fn from_schema(schema: &Schema) -> Self {
        let mut columns: Vec<String> = schema
            .object_types()
            .flat_map(|t| t.fields.iter().map(move |f| format!("{}.{}", t.name, f.name)))
            .collect();
        columns.sort();
        FieldFeatureSpace { columns }
    }

    pub fn dimension(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.columns
    }

    pub fn index_of(&self, qualified: &str) -> Option<usize> {
        self.columns
            .binary_search_by(|c| c.as_str().cmp(qualified))
            .ok()
    }
}

/// Counts each `(type, field)` occurrence of the query into the space's
/// columns. Errors if the query mentions a pair the space lacks.
pub fn field_features(query: &TypedQuery, space: &FieldFeatureSpace) -> Result<FeatureVector> {
    let mut counts = vec![0u64; space.dimension()];
    for field in query.walk() {
        let qualified = field.qualified_name();
        let idx = space.index_of(&qualified).ok_or_else(|| {
            Error::Feature(format!(
                "field `{qualified}` is not in the feature space (schema mismatch)"
            ))
        })?;
        counts[idx] += 1;
    }
    Ok(FeatureVector {
        values: counts.into_iter().map(Complexity::from_integer).collect(),
        space_tag: SpaceTag::Field,
    })
}

/// Parameters of the hashed Weisfeiler-Lehman embedding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphFeatureParams {
    /// Number of hash buckets (vector dimension).
    pub dimension: usize,
    /// Label refinement rounds; 0 keeps only the initial labels.
    pub wl_iterations: usize,
    /// Seed mixed into the bucket hash.
    pub hash_seed: u64,
}

impl Default for GraphFeatureParams {
    fn default() -> Self {
        GraphFeatureParams {
            dimension: 64,
            wl_iterations: 3,
            hash_seed: 0,
        }
    }
}

fn hash_u64s(parts: &[u64]) -> u64 {
    let mut bytes = Vec::with_capacity(parts.len() * 8);
    for p in parts {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    fnv1a64(&bytes)
}

fn initial_label(field: &TypedField) -> u64 {
    let mut bytes = Vec::with_capacity(field.parent_type.len() + field.name.len() + 1);
    bytes.extend_from_slice(field.parent_type.as_bytes());
    bytes.push(0x1f);
    bytes.extend_from_slice(field.name.as_bytes());
    fnv1a64(&bytes)
}

/// Weisfeiler-Lehman subtree embedding of the selection tree.
///
/// Node labels start as hashes of `(type, field)`; each refinement round
/// rehashes a node's label with the sorted multiset of its children's
/// labels. Every label occurrence from every round (the initial one
/// included) is hashed with the seed into one of `dimension` buckets, and
/// the bucket counts are scaled by `1/query_size`. Sibling order never
/// matters; argument values never participate.
pub fn graph_features(query: &TypedQuery, params: &GraphFeatureParams) -> Result<FeatureVector> {
    if params.dimension == 0 {
        return Err(Error::Feature(
            "graph feature dimension must be at least 1".to_string(),
        ));
    }
    // One pass per node computes its labels for rounds 0..=rounds bottom-up,
    // recording every label occurrence into a bucket as it appears.
    fn refine(
        field: &TypedField,
        rounds: usize,
        out: &mut Vec<u64>,
        record: &mut dyn FnMut(u64),
    ) {
        let mut child_labels: Vec<Vec<u64>> = Vec::with_capacity(field.children.len());
        for child in &field.children {
            let mut labels = Vec::with_capacity(rounds + 1);
            refine(child, rounds, &mut labels, record);
            child_labels.push(labels);
        }
        let mut own = initial_label(field);
        record(own);
        out.push(own);
        for round in 0..rounds {
            let mut members: Vec<u64> =
                child_labels.iter().map(|labels| labels[round]).collect();
            members.sort_unstable();
            let mut parts = Vec::with_capacity(members.len() + 1);
            parts.push(own);
            parts.extend_from_slice(&members);
            own = hash_u64s(&parts);
            record(own);
            out.push(own);
        }
    }

    let mut counts = vec![0u64; params.dimension];
    let dim = params.dimension as u64;
    let seed = params.hash_seed;
    let mut record = |label: u64| {
        let h = hash_u64s(&[seed, label]);
        counts[(h % dim) as usize] += 1;
    };
    for field in &query.fields {
        let mut labels = Vec::new();
        refine(field, params.wl_iterations, &mut labels, &mut record);
    }

    let size = query_size(query);
    Ok(FeatureVector {
        values: counts
            .into_iter()
            .map(|c| Complexity::from_ratio(c, size))
            .collect(),
        space_tag: SpaceTag::Graph,
    })
}

/// The six summary scalars, serialized in exactly this field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFeatures {
    pub static_bound: Complexity,
    pub query_size: u64,
    pub width: u64,
    pub nesting: u64,
    pub lists: u64,
    pub sum_of_limits: u64,
}

impl SummaryFeatures {
    pub fn to_feature_vector(&self) -> FeatureVector {
        FeatureVector {
            values: vec![
                self.static_bound.clone(),
                Complexity::from_integer(self.query_size),
                Complexity::from_integer(self.width),
                Complexity::from_integer(self.nesting),
                Complexity::from_integer(self.lists),
                Complexity::from_integer(self.sum_of_limits),
            ],
            space_tag: SpaceTag::Summary,
        }
    }

    pub fn to_f64s(&self) -> Vec<f64> {
        self.to_feature_vector().to_f64s()
    }

    /// Column names in serialization order.
    pub fn names() -> [&'static str; 6] {
        [
            "static_bound",
            "query_size",
            "width",
            "nesting",
            "lists",
            "sum_of_limits",
        ]
    }
}

/// Size of the selection tree: field nodes plus the selection-set nodes
/// linking them (a query with F fields has 2F − 1 tree nodes).
pub fn query_size(query: &TypedQuery) -> u64 {
    2 * query.field_count() as u64 - 1
}

/// Computes the six summary features. Needs the config to resolve the
/// static bound and list limits.
pub fn summary_features(query: &TypedQuery, config: &CostConfig) -> Result<SummaryFeatures> {
    let bound = static_bound(config, query)?;
    let limits = list_limits(config, query)?;

    fn width(fields: &[TypedField]) -> u64 {
        let here = fields.len() as u64;
        fields
            .iter()
            .map(|f| width(&f.children))
            .fold(here, u64::max)
    }
    fn depth(fields: &[TypedField]) -> u64 {
        fields
            .iter()
            .map(|f| 1 + depth(&f.children))
            .max()
            .unwrap_or(0)
    }

    Ok(SummaryFeatures {
        static_bound: bound,
        query_size: query_size(query),
        width: width(&query.fields),
        // Every field sits inside at least the root selection set; the
        // deepest field is enclosed by `depth` sets. Report depth − 1.
        nesting: depth(&query.fields) - 1,
        lists: limits.len() as u64,
        sum_of_limits: limits.iter().map(|(_, n)| n).sum(),
    })
}

/// CSV header names for the field space (`f:Type.field`).
pub fn field_headers(space: &FieldFeatureSpace) -> Vec<String> {
    space.columns.iter().map(|c| format!("f:{c}")).collect()
}

/// CSV header names for the graph space (`g:bucket_i`).
pub fn graph_headers(params: &GraphFeatureParams) -> Vec<String> {
    (0..params.dimension).map(|i| format!("g:bucket_{i}")).collect()
}

/// CSV header names for the summary space (`s:name`).
pub fn summary_headers() -> Vec<String> {
    SummaryFeatures::names()
        .iter()
        .map(|n| format!("s:{n}"))
        .collect()
}
