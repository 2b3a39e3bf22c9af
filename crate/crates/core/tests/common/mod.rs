//! Shared fixtures and the independent brute-force complexity oracle used
//! by the integration suites.

use gqlcost::{
    parse_schema, Complexity, CostConfig, FieldNode, QueryDocument, Schema, SelectionSet, TypeDef,
    TypeKind, TypeRef,
};

pub const SCHEMA_SDL: &str = include_str!("../data/github.graphql");
pub const REFERENCE_QUERY: &str = include_str!("../data/reference_query.graphql");
pub const CONFIG_JSON: &str = include_str!("../data/weights.json");
pub const RESPONSE_JSON: &str = include_str!("../data/reference_response.json");

pub fn schema() -> Schema {
    parse_schema(SCHEMA_SDL).expect("fixture schema parses")
}

pub fn config() -> CostConfig {
    serde_json::from_str(CONFIG_JSON).expect("fixture config parses")
}

pub fn reference_response() -> serde_json::Value {
    serde_json::from_str(RESPONSE_JSON).expect("fixture response parses")
}

/// Brute-force response-complexity oracle. Deliberately written as a
/// direct JSON walk over the raw (schema, query, response) triple with its
/// own weight lookup, sharing none of the library's cost code: every typed
/// value in the response contributes its type weight, lists contribute the
/// sum of their elements, and the root object contributes only its fields.
pub fn oracle_complexity(
    schema: &Schema,
    weights_json: &serde_json::Value,
    doc: &QueryDocument,
    response: &serde_json::Value,
) -> Complexity {
    let root = schema
        .types
        .get(&schema.query_root)
        .expect("root type exists");
    let object = response.as_object().expect("root response is an object");
    let mut total = Complexity::zero();
    for field in &doc.root.fields {
        if let Some(value) = object.get(&field.name) {
            total = total + oracle_field(schema, weights_json, root, field, value);
        }
    }
    total
}

fn oracle_field(
    schema: &Schema,
    weights_json: &serde_json::Value,
    parent: &TypeDef,
    field: &FieldNode,
    value: &serde_json::Value,
) -> Complexity {
    let def = parent
        .fields
        .iter()
        .find(|d| d.name == field.name)
        .expect("selected field is declared");
    oracle_walk(
        schema,
        weights_json,
        &def.ty,
        def.ty.list_depth,
        field.selection.as_ref(),
        value,
    )
}

fn oracle_walk(
    schema: &Schema,
    weights_json: &serde_json::Value,
    ty: &TypeRef,
    depth: usize,
    selection: Option<&SelectionSet>,
    value: &serde_json::Value,
) -> Complexity {
    if value.is_null() {
        return Complexity::zero();
    }
    if depth > 0 {
        let mut sum = Complexity::zero();
        for element in value.as_array().expect("list value is an array") {
            sum = sum + oracle_walk(schema, weights_json, ty, depth - 1, selection, element);
        }
        return sum;
    }
    let base = schema.types.get(&ty.base).expect("base type exists");
    let mut cost = oracle_weight(weights_json, base);
    if let Some(selection) = selection {
        let object = value.as_object().expect("composite value is an object");
        for child in &selection.fields {
            if let Some(v) = object.get(&child.name) {
                cost = cost + oracle_field(schema, weights_json, base, child, v);
            }
        }
    }
    cost
}

fn oracle_weight(weights_json: &serde_json::Value, type_def: &TypeDef) -> Complexity {
    let table = &weights_json["typeWeights"];
    let entry = table.get(&type_def.name).unwrap_or_else(|| {
        let key = if type_def.kind == TypeKind::Object {
            "*objectDefault"
        } else {
            "*scalarDefault"
        };
        &table[key]
    });
    let raw = entry.as_i64().expect("oracle supports integer weights");
    Complexity::from_integer(u64::try_from(raw).expect("oracle weights are nonnegative"))
}
