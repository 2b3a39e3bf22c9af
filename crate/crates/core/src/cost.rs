//! Cost configuration, exact response complexity, and static upper bounds.
//!
//! Response complexity charges each produced value by the configured weight
//! of its type: a list charges the sum over its elements, an object charges
//! its own type weight plus its members, a scalar or enum charges its type
//! weight, and `null` charges nothing. The root response object is a
//! protocol envelope and contributes only its fields.
//!
//! The static bound replays the same recursion over the query alone,
//! replacing every list by its resolved slicing limit raised to the list
//! nesting depth. It is sound (never below the realized complexity of any
//! conforming response) and monotone in weights and limits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ast::{ArgValue, ResponseTree, Schema, TypeKind};
use crate::error::{Error, Result};
use crate::rational::Complexity;
use crate::validate::{TypedField, TypedQuery};

/// Wildcard weight key applied to scalar and enum types without a named entry.
pub const SCALAR_DEFAULT_KEY: &str = "*scalarDefault";
/// Wildcard weight key applied to object types without a named entry.
pub const OBJECT_DEFAULT_KEY: &str = "*objectDefault";

/// Cost model configuration, loaded from JSON.
///
/// ```json
/// {
///   "typeWeights": { "*scalarDefault": 0, "*objectDefault": 1, "License": 2 },
///   "defaultListSizes": { "Query.licenses": 13 },
///   "limitArgNames": ["first", "last"]
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CostConfig {
    /// Per-type weights; `*scalarDefault` / `*objectDefault` are fallbacks.
    pub type_weights: BTreeMap<String, Complexity>,
    /// Assumed lengths for list fields with no limit argument in scope,
    /// keyed `"Type.field"`.
    #[serde(default)]
    pub default_list_sizes: BTreeMap<String, u64>,
    /// Argument names recognized as list-slicing limits, in lookup order.
    #[serde(default)]
    pub limit_arg_names: Vec<String>,
}

impl CostConfig {
    /// Weight of a type, falling back to the kind's wildcard entry.
    pub fn weight(&self, type_name: &str, kind: &TypeKind) -> Result<Complexity> {
        if let Some(w) = self.type_weights.get(type_name) {
            return Ok(w.clone());
        }
        let wildcard = match kind {
            TypeKind::Object => OBJECT_DEFAULT_KEY,
            TypeKind::Scalar | TypeKind::Enum => SCALAR_DEFAULT_KEY,
        };
        self.type_weights.get(wildcard).cloned().ok_or_else(|| {
            Error::Config(format!(
                "no weight for type `{type_name}` and no `{wildcard}` fallback"
            ))
        })
    }

    /// Checks every key against the schema.
    pub fn check_against(&self, schema: &Schema) -> Result<()> {
        for key in self.type_weights.keys() {
            if key.starts_with('*') {
                if key != SCALAR_DEFAULT_KEY && key != OBJECT_DEFAULT_KEY {
                    return Err(Error::Config(format!(
                        "unknown wildcard weight key `{key}`"
                    )));
                }
            } else if !schema.types.contains_key(key) {
                return Err(Error::Config(format!(
                    "weight key `{key}` does not name a schema type"
                )));
            }
        }
        for key in self.default_list_sizes.keys() {
            let Some((ty, field)) = key.split_once('.') else {
                return Err(Error::Config(format!(
                    "default list size key `{key}` must look like `Type.field`"
                )));
            };
            let Some(def) = schema.type_def(ty) else {
                return Err(Error::Config(format!(
                    "default list size key `{key}` names unknown type `{ty}`"
                )));
            };
            let Some(field_def) = def.fields.iter().find(|f| f.name == field) else {
                return Err(Error::Config(format!(
                    "default list size key `{key}` names unknown field `{field}` on `{ty}`"
                )));
            };
            if field_def.ty.list_depth == 0 {
                return Err(Error::Config(format!(
                    "default list size key `{key}` targets non-list field of type `{}`",
                    field_def.ty.display()
                )));
            }
        }
        Ok(())
    }
}

/// The limit argument supplied on this field itself, if any, scanned in
/// `limit_arg_names` order.
fn own_limit(config: &CostConfig, field: &TypedField) -> Result<Option<u64>> {
    for name in &config.limit_arg_names {
        if let Some((_, ArgValue::Int(n))) = field.args.iter().find(|(a, _)| a == name) {
            if *n < 0 {
                return Err(Error::NegativeLimit {
                    field: field.qualified_name(),
                    limit: *n,
                });
            }
            return Ok(Some(*n as u64));
        }
    }
    Ok(None)
}

/// Resolves the assumed length of a list field.
///
/// Precedence: a limit argument on the field itself, then the nearest
/// enclosing field carrying one (the connection pattern: `issues(first: 2)
/// { nodes { ... } }` slices `nodes`), then the configured default for
/// `"Type.field"`. A list with none of these cannot be bounded.
pub fn resolve_list_limit(
    config: &CostConfig,
    field: &TypedField,
    ancestors: &[&TypedField],
) -> Result<u64> {
    if let Some(n) = own_limit(config, field)? {
        return Ok(n);
    }
    for ancestor in ancestors.iter().rev() {
        if let Some(n) = own_limit(config, ancestor)? {
            return Ok(n);
        }
    }
    if let Some(n) = config.default_list_sizes.get(&field.qualified_name()) {
        return Ok(*n);
    }
    Err(Error::UnboundedList(format!(
        "list field `{}` has no limit argument in scope and no configured default size",
        field.qualified_name()
    )))
}

/// Exact complexity of `response` as an answer to `query`.
///
/// The response drives the recursion: every response key must match a
/// selected field (first match by name); fields the response omits count as
/// `null`, i.e. zero.
pub fn response_complexity(
    config: &CostConfig,
    query: &TypedQuery,
    response: &ResponseTree,
) -> Result<Complexity> {
    let serde_json::Value::Object(entries) = response else {
        return Err(Error::Shape(format!(
            "response root must be an object, got {}",
            json_kind(response)
        )));
    };
    let mut total = Complexity::zero();
    for (key, value) in entries {
        let field = query
            .fields
            .iter()
            .find(|f| &f.name == key)
            .ok_or_else(|| {
                Error::Shape(format!(
                    "response key `{key}` does not match any selected field on `{}`",
                    query.root_type
                ))
            })?;
        total += &value_complexity(config, field, field.returns.list_depth, value)?;
    }
    Ok(total)
}

fn value_complexity(
    config: &CostConfig,
    field: &TypedField,
    list_depth: usize,
    value: &serde_json::Value,
) -> Result<Complexity> {
    if value.is_null() {
        return Ok(Complexity::zero());
    }
    if list_depth > 0 {
        let serde_json::Value::Array(items) = value else {
            return Err(Error::Shape(format!(
                "field `{}` expects a list at depth {list_depth}, got {}",
                field.qualified_name(),
                json_kind(value)
            )));
        };
        let mut total = Complexity::zero();
        for item in items {
            total += &value_complexity(config, field, list_depth - 1, item)?;
        }
        return Ok(total);
    }
    if field.is_composite() {
        let serde_json::Value::Object(entries) = value else {
            return Err(Error::Shape(format!(
                "field `{}` of object type `{}` expects an object, got {}",
                field.qualified_name(),
                field.returns.base,
                json_kind(value)
            )));
        };
        let mut total = config.weight(&field.returns.base, &field.base_kind)?;
        for (key, child_value) in entries {
            let child = field
                .children
                .iter()
                .find(|c| &c.name == key)
                .ok_or_else(|| {
                    Error::Shape(format!(
                        "response key `{key}` under `{}` does not match any selected field",
                        field.qualified_name()
                    ))
                })?;
            total += &value_complexity(config, child, child.returns.list_depth, child_value)?;
        }
        Ok(total)
    } else {
        if value.is_object() || value.is_array() {
            return Err(Error::Shape(format!(
                "field `{}` of leaf type `{}` expects a scalar, got {}",
                field.qualified_name(),
                field.returns.base,
                json_kind(value)
            )));
        }
        config.weight(&field.returns.base, &field.base_kind)
    }
}

fn json_kind(v: &serde_json::Value) -> &'static str {
    match v {
        serde_json::Value::Null => "null",
        serde_json::Value::Bool(_) => "a boolean",
        serde_json::Value::Number(_) => "a number",
        serde_json::Value::String(_) => "a string",
        serde_json::Value::Array(_) => "an array",
        serde_json::Value::Object(_) => "an object",
    }
}

/// Static upper bound on the complexity of any response to `query`.
///
/// Each field contributes its resolved limit raised to its list nesting
/// depth (1 for non-lists) times its base type weight plus its children's
/// bounds. The root object, like in the exact measure, adds nothing itself.
pub fn static_bound(config: &CostConfig, query: &TypedQuery) -> Result<Complexity> {
    let mut ancestors: Vec<&TypedField> = Vec::new();
    let mut total = Complexity::zero();
    for field in &query.fields {
        total += &field_bound(config, field, &mut ancestors)?;
    }
    Ok(total)
}

fn field_bound<'q>(
    config: &CostConfig,
    field: &'q TypedField,
    ancestors: &mut Vec<&'q TypedField>,
) -> Result<Complexity> {
    let mut inner = config.weight(&field.returns.base, &field.base_kind)?;
    ancestors.push(field);
    let children: Result<Vec<Complexity>> = field
        .children
        .iter()
        .map(|c| field_bound(config, c, ancestors))
        .collect();
    ancestors.pop();
    let children = children?;
    for c in &children {
        inner += c;
    }
    let depth = field.returns.list_depth;
    if depth == 0 {
        Ok(inner)
    } else {
        let limit = resolve_list_limit(config, field, ancestors)?;
        let mut multiplier = 1u64;
        let mut result = inner;
        for _ in 0..depth {
            multiplier = multiplier.saturating_mul(limit);
        }
        result = result.times(multiplier);
        Ok(result)
    }
}

/// All list fields in the query with their resolved limits, in pre-order.
/// Feeds the `lists` / `sum_of_limits` summary features.
pub fn list_limits(config: &CostConfig, query: &TypedQuery) -> Result<Vec<(String, u64)>> {
    fn walk<'q>(
        config: &CostConfig,
        fields: &'q [TypedField],
        ancestors: &mut Vec<&'q TypedField>,
        out: &mut Vec<(String, u64)>,
    ) -> Result<()> {
        for field in fields {
            if field.returns.list_depth > 0 {
                let limit = resolve_list_limit(config, field, ancestors)?;
                out.push((field.qualified_name(), limit));
            }
            ancestors.push(field);
            walk(config, &field.children, ancestors, out)?;
            ancestors.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(config, &query.fields, &mut Vec::new(), &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{
        github_config as config, github_schema as schema, reference_response, typed,
        REFERENCE_QUERY,
    };
    use serde_json::json;

    #[test]
    fn reference_response_complexity_is_23() {
        let got = response_complexity(&config(), &typed(REFERENCE_QUERY), &reference_response())
            .unwrap();
        assert_eq!(got, Complexity::from_integer(23));
    }

    #[test]
    fn reference_static_bound_is_118() {
        let got = static_bound(&config(), &typed(REFERENCE_QUERY)).unwrap();
        assert_eq!(got, Complexity::from_integer(118));
    }

    #[test]
    fn static_bound_dominates_reference_response() {
        let cfg = config();
        let q = typed(REFERENCE_QUERY);
        let exact = response_complexity(&cfg, &q, &reference_response()).unwrap();
        let bound = static_bound(&cfg, &q).unwrap();
        assert!(exact <= bound);
    }

    #[test]
    fn single_object_field_costs_its_weight() {
        let q = typed("{ viewer { id } }");
        let got =
            response_complexity(&config(), &q, &json!({ "viewer": { "id": "u1" } })).unwrap();
        assert_eq!(got, Complexity::from_integer(1));
        assert_eq!(static_bound(&config(), &q).unwrap(), Complexity::from_integer(1));
    }

    #[test]
    fn zero_weights_collapse_to_zero() {
        let cfg: CostConfig = serde_json::from_value(json!({
            "typeWeights": { "*scalarDefault": 0, "*objectDefault": 0 },
            "defaultListSizes": { "Query.licenses": 13 },
            "limitArgNames": ["first"]
        }))
        .unwrap();
        let q = typed(REFERENCE_QUERY);
        assert!(response_complexity(&cfg, &q, &reference_response())
            .unwrap()
            .is_zero());
        assert!(static_bound(&cfg, &q).unwrap().is_zero());
    }

    #[test]
    fn missing_response_fields_cost_nothing() {
        let got = response_complexity(
            &config(),
            &typed(REFERENCE_QUERY),
            &json!({ "licenses": [ { "name": "mit" } ] }),
        )
        .unwrap();
        assert_eq!(got, Complexity::from_integer(1));
        // Nulls behave like omissions.
        let got = response_complexity(
            &config(),
            &typed(REFERENCE_QUERY),
            &json!({ "licenses": null, "repository": null }),
        )
        .unwrap();
        assert!(got.is_zero());
    }

    #[test]
    fn unexpected_response_keys_are_shape_errors() {
        let err = response_complexity(
            &config(),
            &typed("{ viewer { id } }"),
            &json!({ "viewer": { "id": "u1", "login": "x" } }),
        )
        .unwrap_err();
        assert_eq!(err.class(), "cost.shape");
        let err = response_complexity(
            &config(),
            &typed("{ viewer { id } }"),
            &json!({ "stargazer": 1 }),
        )
        .unwrap_err();
        assert_eq!(err.class(), "cost.shape");
    }

    #[test]
    fn wrong_json_kinds_are_shape_errors() {
        let err = response_complexity(
            &config(),
            &typed("{ licenses { name } }"),
            &json!({ "licenses": { "name": "mit" } }),
        )
        .unwrap_err();
        assert_eq!(err.class(), "cost.shape");
        let err = response_complexity(
            &config(),
            &typed("{ viewer { id } }"),
            &json!({ "viewer": { "id": { "x": 1 } } }),
        )
        .unwrap_err();
        assert_eq!(err.class(), "cost.shape");
    }

    #[test]
    fn limit_resolution_precedence() {
        let cfg = config();
        let q = typed(REFERENCE_QUERY);
        let limits = list_limits(&cfg, &q).unwrap();
        assert_eq!(
            limits,
            vec![
                ("Query.licenses".to_string(), 13),
                ("IssueConnection.nodes".to_string(), 2),
                ("LanguageConnection.nodes".to_string(), 100),
            ]
        );
        let total: u64 = limits.iter().map(|(_, n)| n).sum();
        assert_eq!(total, 115);
    }

    #[test]
    fn unbounded_list_without_default_is_an_error() {
        let cfg: CostConfig = serde_json::from_value(json!({
            "typeWeights": { "*scalarDefault": 0, "*objectDefault": 1 },
            "limitArgNames": ["first"]
        }))
        .unwrap();
        let err = static_bound(&cfg, &typed("{ licenses { name } }")).unwrap_err();
        assert_eq!(err.class(), "cost.unbounded_list");
        assert!(err.to_string().contains("Query.licenses"));
    }

    #[test]
    fn negative_limit_is_an_error() {
        let q = typed(
            "{ repository(owner: \"o\", name: \"n\") { issues(first: -2) { nodes { id } } } }",
        );
        let err = static_bound(&config(), &q).unwrap_err();
        assert_eq!(err.class(), "cost.negative_limit");
    }

    #[test]
    fn static_bound_is_monotone_in_weights_and_limits() {
        let base = static_bound(&config(), &typed(REFERENCE_QUERY)).unwrap();
        let heavier: CostConfig = serde_json::from_value(json!({
            "typeWeights": { "*scalarDefault": 1, "*objectDefault": 2 },
            "defaultListSizes": { "Query.licenses": 13 },
            "limitArgNames": ["first", "last"]
        }))
        .unwrap();
        assert!(static_bound(&heavier, &typed(REFERENCE_QUERY)).unwrap() > base);
        let larger_lists: CostConfig = serde_json::from_value(json!({
            "typeWeights": { "*scalarDefault": 0, "*objectDefault": 1 },
            "defaultListSizes": { "Query.licenses": 14 },
            "limitArgNames": ["first", "last"]
        }))
        .unwrap();
        assert!(static_bound(&larger_lists, &typed(REFERENCE_QUERY)).unwrap() > base);
    }

    #[test]
    fn weight_lookup_prefers_named_entries() {
        let cfg: CostConfig = serde_json::from_value(json!({
            "typeWeights": { "*scalarDefault": 0, "*objectDefault": 1, "License": 3 },
            "defaultListSizes": { "Query.licenses": 13 },
            "limitArgNames": ["first"]
        }))
        .unwrap();
        let got = response_complexity(
            &cfg,
            &typed("{ licenses { name } }"),
            &json!({ "licenses": [ { "name": "mit" }, { "name": "wtfpl" } ] }),
        )
        .unwrap();
        assert_eq!(got, Complexity::from_integer(6));
    }

    #[test]
    fn fractional_weights_stay_exact() {
        let cfg: CostConfig = serde_json::from_value(json!({
            "typeWeights": { "*scalarDefault": 0.1, "*objectDefault": 1 },
            "defaultListSizes": { "Query.licenses": 13 },
            "limitArgNames": ["first"]
        }))
        .unwrap();
        let got = response_complexity(
            &cfg,
            &typed("{ licenses { name } }"),
            &json!({ "licenses": [ { "name": "mit" } ] }),
        )
        .unwrap();
        assert_eq!(got, "11/10".parse().unwrap());
    }

    #[test]
    fn config_check_catches_bad_keys() {
        let schema = schema();
        let bad_type: CostConfig = serde_json::from_value(json!({
            "typeWeights": { "*scalarDefault": 0, "*objectDefault": 1, "Nope": 2 },
        }))
        .unwrap();
        assert_eq!(bad_type.check_against(&schema).unwrap_err().class(), "config.invalid");
        let bad_wildcard: CostConfig = serde_json::from_value(json!({
            "typeWeights": { "*everything": 1 },
        }))
        .unwrap();
        assert_eq!(bad_wildcard.check_against(&schema).unwrap_err().class(), "config.invalid");
        let bad_list_key: CostConfig = serde_json::from_value(json!({
            "typeWeights": { "*scalarDefault": 0, "*objectDefault": 1 },
            "defaultListSizes": { "Query.viewer": 5 },
        }))
        .unwrap();
        assert_eq!(bad_list_key.check_against(&schema).unwrap_err().class(), "config.invalid");
        assert!(config().check_against(&schema).is_ok());
    }

    #[test]
    fn config_rejects_unknown_json_fields() {
        let parsed: std::result::Result<CostConfig, _> = serde_json::from_value(json!({
            "typeWeights": { "*scalarDefault": 0 },
            "weights": {}
        }));
        assert!(parsed.is_err());
    }
}
