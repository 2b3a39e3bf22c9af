//! Corpus handling: JSONL ingestion, ground-truth labeling, synthetic
//! workload generation, splitting, and feature-matrix assembly.
//!
//! Corpora are JSONL files, one record per line with keys `query` and
//! `response`; labeled corpora add `label` and `staticBound`. Generation is
//! seeded with one RNG substream per record, so serial and parallel
//! producers agree and the same seed always yields the same corpus.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use gqlcost_ml::{substream, Mat64};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ast::{
    print_query, ArgDef, ArgValue, FieldDef, FieldNode, QueryDocument, ResponseTree, Schema,
    SelectionSet, TypeDef, TypeKind,
};
use crate::cost::{resolve_list_limit, response_complexity, static_bound, CostConfig};
use crate::error::{Error, Result};
use crate::features::{
    field_features, graph_features, summary_features, FieldFeatureSpace, GraphFeatureParams,
};
use crate::parser::parse_query;
use crate::rational::Complexity;
use crate::validate::{validate, TypedField, TypedQuery};

/// One query-response pair, optionally labeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DatasetRecord {
    pub query: String,
    pub response: ResponseTree,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Complexity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_bound: Option<Complexity>,
}

/// Reads a JSONL corpus. Blank lines are skipped; a malformed line is a
/// fatal error naming its 1-based line number.
pub fn read_jsonl(reader: impl BufRead) -> Result<Vec<DatasetRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::DataLine {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord =
            serde_json::from_str(&line).map_err(|e| Error::DataLine {
                line: i + 1,
                message: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

pub fn load_jsonl(path: &Path) -> Result<Vec<DatasetRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    read_jsonl(std::io::BufReader::new(file))
}

/// Writes records as JSONL, one canonical JSON object per line.
pub fn write_jsonl(mut writer: impl Write, records: &[DatasetRecord]) -> Result<()> {
    for record in records {
        let line = serde_json::to_string(record)
            .map_err(|e| Error::Data(format!("serialize record: {e}")))?;
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .map_err(|e| Error::Data(format!("write record: {e}")))?;
    }
    Ok(())
}

/// A record that failed labeling, with why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDiagnostic {
    /// 0-based index into the input record list.
    pub index: usize,
    pub class: String,
    pub message: String,
}

/// Labels every record with its exact response complexity and static bound.
/// Records that fail parsing, validation, or shape checks are diverted to
/// the diagnostics list instead of being silently dropped.
pub fn label_records(
    schema: &Schema,
    config: &CostConfig,
    records: &[DatasetRecord],
) -> (Vec<DatasetRecord>, Vec<LabelDiagnostic>) {
    let mut labeled = Vec::with_capacity(records.len());
    let mut diagnostics = Vec::new();
    for (index, record) in records.iter().enumerate() {
        match label_one(schema, config, record) {
            Ok(done) => labeled.push(done),
            Err(e) => diagnostics.push(LabelDiagnostic {
                index,
                class: e.class().to_string(),
                message: e.to_string(),
            }),
        }
    }
    (labeled, diagnostics)
}

fn label_one(schema: &Schema, config: &CostConfig, record: &DatasetRecord) -> Result<DatasetRecord> {
    let typed = validate(schema, &parse_query(&record.query)?)?;
    let label = response_complexity(config, &typed, &record.response)?;
    let bound = static_bound(config, &typed)?;
    Ok(DatasetRecord {
        query: record.query.clone(),
        response: record.response.clone(),
        label: Some(label),
        static_bound: Some(bound),
    })
}

/// How fabricated list lengths relate to their resolved limits.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ListFill {
    /// Length drawn uniformly from `[0, limit]`.
    #[default]
    Uniform,
    /// Length always equals the limit, making the static bound tight.
    Full,
}

impl std::str::FromStr for ListFill {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(ListFill::Uniform),
            "full" => Ok(ListFill::Full),
            other => Err(Error::Data(format!(
                "unknown list fill `{other}` (expected `uniform` or `full`)"
            ))),
        }
    }
}

/// Knobs of the synthetic workload generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Maximum selection nesting depth (levels of fields). Must be ≥ 1.
    pub max_depth: usize,
    /// Maximum fields chosen per selection set. Must be ≥ 1.
    pub max_fields_per_level: usize,
    /// Inclusive range limit arguments are drawn from.
    pub list_limit_range: (u64, u64),
    #[serde(default)]
    pub list_fill: ListFill,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            max_depth: 5,
            max_fields_per_level: 3,
            list_limit_range: (0, 30),
            list_fill: ListFill::Uniform,
            seed: 0,
        }
    }
}

struct Generator<'a> {
    schema: &'a Schema,
    config: &'a CostConfig,
    gen: &'a GeneratorConfig,
    /// Minimum selection depth needed to close a selection on each object
    /// type; absent means no scalar-terminating path exists.
    depth_needed: BTreeMap<String, usize>,
}

/// An argument can be auto-supplied when its base type admits a literal in
/// the query subset: Int, String, Boolean, ID, or an enum — never Float or
/// a list.
fn arg_suppliable(schema: &Schema, arg: &ArgDef) -> bool {
    if arg.ty.list_depth > 0 {
        return false;
    }
    match schema.type_def(&arg.ty.base) {
        Some(def) => match def.kind {
            TypeKind::Enum => true,
            TypeKind::Scalar => arg.ty.base != "Float",
            TypeKind::Object => false,
        },
        None => false,
    }
}

fn field_usable(schema: &Schema, field: &FieldDef) -> bool {
    field
        .args
        .iter()
        .all(|a| !a.required() || arg_suppliable(schema, a))
}

fn is_limit_arg(config: &CostConfig, arg: &ArgDef) -> bool {
    config.limit_arg_names.iter().any(|n| n == &arg.name)
        && arg.ty.base == "Int"
        && arg.ty.list_depth == 0
}

impl<'a> Generator<'a> {
    fn new(schema: &'a Schema, config: &'a CostConfig, gen: &'a GeneratorConfig) -> Result<Self> {
        if gen.max_depth == 0 || gen.max_fields_per_level == 0 {
            return Err(Error::Data(
                "generator needs max_depth ≥ 1 and max_fields_per_level ≥ 1".to_string(),
            ));
        }
        if gen.list_limit_range.0 > gen.list_limit_range.1 {
            return Err(Error::Data(format!(
                "empty list limit range {:?}",
                gen.list_limit_range
            )));
        }
        let depth_needed = compute_depth_needed(schema);
        let root = &schema.query_root;
        match depth_needed.get(root) {
            Some(&d) if d <= gen.max_depth => Ok(Generator {
                schema,
                config,
                gen,
                depth_needed,
            }),
            Some(&d) => Err(Error::Data(format!(
                "schema needs nesting depth {d} to reach a leaf from `{root}`, but max_depth is {}",
                gen.max_depth
            ))),
            None => Err(Error::Data(format!(
                "no scalar-terminating path exists from root type `{root}`"
            ))),
        }
    }

    fn check_depth(&self, field: &FieldDef, remaining: usize) -> bool {
        let base = self
            .schema
            .type_def(&field.ty.base)
            .expect("parser checked references");
        match base.kind {
            TypeKind::Object => match self.depth_needed.get(&base.name) {
                Some(&d) => remaining > d,
                None => false,
            },
            _ => remaining >= 1,
        }
    }

    fn gen_selection(
        &self,
        parent: &TypeDef,
        parent_qualifier: &str,
        remaining: usize,
        limit_in_scope: bool,
        rng: &mut ChaCha8Rng,
    ) -> Option<SelectionSet> {
        let candidates: Vec<&FieldDef> = parent
            .fields
            .iter()
            .filter(|f| {
                field_usable(self.schema, f)
                    && self.check_depth(f, remaining)
                    && self.list_boundable(parent_qualifier, f, limit_in_scope)
            })
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let k = rng.random_range(1..=candidates.len().min(self.gen.max_fields_per_level));
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        for i in 0..k {
            let j = rng.random_range(i..order.len());
            order.swap(i, j);
        }
        let mut fields = Vec::with_capacity(k);
        for &idx in order.iter().take(k) {
            let def = candidates[idx];
            let mut supplied_limit = false;
            let mut args = Vec::new();
            for arg in &def.args {
                if is_limit_arg(self.config, arg) {
                    let (lo, hi) = self.gen.list_limit_range;
                    args.push((arg.name.clone(), ArgValue::Int(rng.random_range(lo..=hi) as i64)));
                    supplied_limit = true;
                } else if arg.required() {
                    args.push((arg.name.clone(), self.arg_value(arg, rng)));
                }
            }
            let base = self
                .schema
                .type_def(&def.ty.base)
                .expect("parser checked references");
            let selection = if base.kind == TypeKind::Object {
                match self.gen_selection(
                    base,
                    &base.name,
                    remaining - 1,
                    limit_in_scope || supplied_limit,
                    rng,
                ) {
                    Some(sel) => Some(sel),
                    None => continue, // no viable children; drop this field
                }
            } else {
                None
            };
            fields.push(FieldNode {
                name: def.name.clone(),
                args,
                selection,
            });
        }
        if fields.is_empty() {
            None
        } else {
            Some(SelectionSet { fields })
        }
    }

    /// A list field is usable when its length can be bounded: a limit
    /// argument of its own (declared limit args are always supplied), one
    /// inherited from an enclosing field, or a configured default size.
    fn list_boundable(&self, parent_name: &str, field: &FieldDef, limit_in_scope: bool) -> bool {
        if field.ty.list_depth == 0 {
            return true;
        }
        if limit_in_scope || field.args.iter().any(|a| is_limit_arg(self.config, a)) {
            return true;
        }
        self.config
            .default_list_sizes
            .contains_key(&format!("{parent_name}.{}", field.name))
    }

    fn arg_value(&self, arg: &ArgDef, rng: &mut ChaCha8Rng) -> ArgValue {
        let def = self
            .schema
            .type_def(&arg.ty.base)
            .expect("parser checked references");
        match def.kind {
            TypeKind::Enum => {
                let i = rng.random_range(0..def.values.len());
                ArgValue::Enum(def.values[i].clone())
            }
            _ => match arg.ty.base.as_str() {
                "Int" => ArgValue::Int(rng.random_range(0..=9)),
                "Boolean" => ArgValue::Bool(rng.random_range(0..2) == 1),
                "ID" => ArgValue::Str(format!("id{}", rng.random_range(0..1000))),
                // String and custom scalars.
                _ => ArgValue::Str(format!("v{}", rng.random_range(0..1000))),
            },
        }
    }

    fn fabricate_response(&self, query: &TypedQuery, rng: &mut ChaCha8Rng) -> Result<ResponseTree> {
        let mut ancestors: Vec<&TypedField> = Vec::new();
        let mut map = serde_json::Map::new();
        for field in &query.fields {
            map.insert(
                field.name.clone(),
                self.value_for(field, field.returns.list_depth, &mut ancestors, rng)?,
            );
        }
        Ok(serde_json::Value::Object(map))
    }

    fn value_for<'q>(
        &self,
        field: &'q TypedField,
        list_depth: usize,
        ancestors: &mut Vec<&'q TypedField>,
        rng: &mut ChaCha8Rng,
    ) -> Result<serde_json::Value> {
        if list_depth > 0 {
            let limit = resolve_list_limit(self.config, field, ancestors)?;
            let len = match self.gen.list_fill {
                ListFill::Full => limit,
                ListFill::Uniform => rng.random_range(0..=limit),
            };
            let mut items = Vec::with_capacity(len as usize);
            for _ in 0..len {
                items.push(self.value_for(field, list_depth - 1, ancestors, rng)?);
            }
            return Ok(serde_json::Value::Array(items));
        }
        if field.is_composite() {
            ancestors.push(field);
            let mut map = serde_json::Map::new();
            for child in &field.children {
                map.insert(
                    child.name.clone(),
                    self.value_for(child, child.returns.list_depth, ancestors, rng)?,
                );
            }
            ancestors.pop();
            Ok(serde_json::Value::Object(map))
        } else {
            Ok(scalar_dummy(&field.returns.base))
        }
    }
}

fn scalar_dummy(base: &str) -> serde_json::Value {
    match base {
        "Int" => serde_json::json!(7),
        "Float" => serde_json::json!(0.5),
        "Boolean" => serde_json::json!(true),
        "ID" => serde_json::json!("id"),
        "String" => serde_json::json!("s"),
        // Enum values and custom scalars.
        _ => serde_json::json!("VALUE"),
    }
}

/// Minimum nesting depth each object type needs before a selection on it
/// can terminate in a leaf, via fixpoint relaxation.
fn compute_depth_needed(schema: &Schema) -> BTreeMap<String, usize> {
    let mut need: BTreeMap<String, usize> = BTreeMap::new();
    loop {
        let mut changed = false;
        for def in schema.object_types() {
            let mut best = usize::MAX;
            for field in &def.fields {
                if !field_usable(schema, field) {
                    continue;
                }
                let base = schema.type_def(&field.ty.base).expect("checked");
                let cost = match base.kind {
                    TypeKind::Object => match need.get(&base.name) {
                        Some(&d) => d.saturating_add(1),
                        None => continue,
                    },
                    _ => 1,
                };
                best = best.min(cost);
            }
            if best < usize::MAX && need.get(&def.name).is_none_or(|&d| best < d) {
                need.insert(def.name.clone(), best);
                changed = true;
            }
        }
        if !changed {
            return need;
        }
    }
}

/// Generates `n` labeled records: random valid queries (seeded, one RNG
/// substream per record), responses fabricated by walking the typed query
/// and drawing each list's length from `list_fill` over `[0, limit]`.
/// Soundness (label ≤ static bound) holds by construction and is asserted.
pub fn generate_synthetic(
    schema: &Schema,
    config: &CostConfig,
    gen: &GeneratorConfig,
    n: usize,
) -> Result<Vec<DatasetRecord>> {
    config.check_against(schema)?;
    let generator = Generator::new(schema, config, gen)?;
    let root = schema.root_type();
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(substream(gen.seed, i as u64));
        let selection = generator
            .gen_selection(root, &root.name, gen.max_depth, false, &mut rng)
            .ok_or_else(|| {
                Error::Data(format!(
                    "root type `{}` has no generatable fields under this configuration",
                    root.name
                ))
            })?;
        let doc = QueryDocument {
            name: None,
            root: selection,
        };
        let text = print_query(&doc);
        // Round-trip through the real pipeline so every generated record is
        // exactly what a consumer of the corpus would see.
        let typed = validate(schema, &parse_query(&text)?)?;
        let response = generator.fabricate_response(&typed, &mut rng)?;
        let label = response_complexity(config, &typed, &response)?;
        let bound = static_bound(config, &typed)?;
        assert!(
            label <= bound,
            "soundness violated by construction: label {label} > bound {bound} for {text}"
        );
        records.push(DatasetRecord {
            query: text,
            response,
            label: Some(label),
            static_bound: Some(bound),
        });
    }
    Ok(records)
}

/// Seeded shuffle-then-partition split. The test part gets
/// `round(n × test_fraction)` records, clamped to `[1, n − 1]`.
pub fn split(
    records: &[DatasetRecord],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<DatasetRecord>, Vec<DatasetRecord>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Data(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    if records.len() < 2 {
        return Err(Error::Data(format!(
            "need at least 2 records to split, got {}",
            records.len()
        )));
    }
    let n = records.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let test_count = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let test = order[..test_count]
        .iter()
        .map(|&i| records[i].clone())
        .collect();
    let train = order[test_count..]
        .iter()
        .map(|&i| records[i].clone())
        .collect();
    Ok((train, test))
}

/// Feature matrices plus targets for a corpus.
pub struct FeatureTables {
    pub field: Mat64,
    pub graph: Mat64,
    pub summary: Mat64,
    /// Exact labels as f64; `None` where a record is unlabeled.
    pub labels: Vec<Option<f64>>,
    /// Static bounds recomputed from each query.
    pub static_bounds: Vec<f64>,
}

impl FeatureTables {
    pub fn require_labels(&self) -> Result<Vec<f64>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                l.ok_or_else(|| Error::Data(format!("record {i} has no label")))
            })
            .collect()
    }
}

/// Extracts all three feature matrices (and targets) for `records`.
/// Labels stored on records are trusted; otherwise they are computed from
/// the response on the fly.
pub fn featurize_records(
    schema: &Schema,
    config: &CostConfig,
    space: &FieldFeatureSpace,
    params: &GraphFeatureParams,
    records: &[DatasetRecord],
) -> Result<FeatureTables> {
    let mut field_rows = Vec::with_capacity(records.len());
    let mut graph_rows = Vec::with_capacity(records.len());
    let mut summary_rows = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    let mut bounds = Vec::with_capacity(records.len());
    for record in records {
        let typed = validate(schema, &parse_query(&record.query)?)?;
        field_rows.push(field_features(&typed, space)?.to_f64s());
        graph_rows.push(graph_features(&typed, params)?.to_f64s());
        let summary = summary_features(&typed, config)?;
        bounds.push(summary.static_bound.to_f64());
        summary_rows.push(summary.to_f64s());
        let label = match &record.label {
            Some(l) => Some(l.to_f64()),
            None => Some(response_complexity(config, &typed, &record.response)?.to_f64()),
        };
        labels.push(label);
    }
    Ok(FeatureTables {
        field: Mat64::from_rows(field_rows)?,
        graph: Mat64::from_rows(graph_rows)?,
        summary: Mat64::from_rows(summary_rows)?,
        labels,
        static_bounds: bounds,
    })
}
