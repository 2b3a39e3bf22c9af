//! Schema and query data model.
//!
//! The SDL subset covers object types with arguments, enums, non-null and
//! list wrappers, and an optional `schema { query: ... }` block naming the
//! root. Queries are plain selection trees: named or anonymous operations,
//! fields with literal arguments, nested selection sets.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Scalar names every schema understands without declaring them.
pub const BUILTIN_SCALARS: [&str; 5] = ["Int", "Float", "String", "Boolean", "ID"];

/// Root type name used when the SDL has no `schema` block.
pub const DEFAULT_QUERY_ROOT: &str = "Query";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TypeKind {
    Object,
    Scalar,
    Enum,
}

/// A named type: object with fields, built-in scalar, or enum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDef {
    pub name: String,
    pub kind: TypeKind,
    /// Object fields in declaration order; empty for scalars and enums.
    pub fields: Vec<FieldDef>,
    /// Enum values in declaration order; empty otherwise.
    pub values: Vec<String>,
}

/// A type reference like `[Issue!]!`: base name, list nesting depth, and a
/// non-null flag per wrapper level. `non_null[0]` is the innermost (base)
/// level, `non_null[list_depth]` the outermost; length is `list_depth + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeRef {
    pub base: String,
    pub list_depth: usize,
    pub non_null: Vec<bool>,
}

impl TypeRef {
    pub fn named(base: &str) -> Self {
        TypeRef {
            base: base.to_string(),
            list_depth: 0,
            non_null: vec![false],
        }
    }

    /// True when the outermost wrapper is non-null.
    pub fn required(&self) -> bool {
        *self.non_null.last().expect("non_null is never empty")
    }

    pub fn display(&self) -> String {
        let mut s = self.base.clone();
        if self.non_null[0] {
            s.push('!');
        }
        for level in 1..=self.list_depth {
            s = format!("[{s}]");
            if self.non_null[level] {
                s.push('!');
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgDef {
    pub name: String,
    pub ty: TypeRef,
}

impl ArgDef {
    /// Arguments declared non-null at the outermost level must be supplied.
    pub fn required(&self) -> bool {
        self.ty.required()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDef {
    pub name: String,
    pub args: Vec<ArgDef>,
    pub ty: TypeRef,
}

/// A parsed SDL document: every named type (built-ins included) plus the
/// query root's type name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub types: BTreeMap<String, TypeDef>,
    pub query_root: String,
}

impl Schema {
    pub fn type_def(&self, name: &str) -> Option<&TypeDef> {
        self.types.get(name)
    }

    pub fn root_type(&self) -> &TypeDef {
        self.types
            .get(&self.query_root)
            .expect("parser guarantees the root type exists")
    }

    /// Object type definitions in name order.
    pub fn object_types(&self) -> impl Iterator<Item = &TypeDef> {
        self.types.values().filter(|t| t.kind == TypeKind::Object)
    }
}

/// A literal argument value. The subset allows integers, strings, booleans,
/// and enum values (bare names).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArgValue {
    Int(i64),
    Str(String),
    Bool(bool),
    Enum(String),
}

impl ArgValue {
    pub fn display(&self) -> String {
        match self {
            ArgValue::Int(n) => n.to_string(),
            ArgValue::Str(s) => format!("{s:?}"),
            ArgValue::Bool(b) => b.to_string(),
            ArgValue::Enum(name) => name.clone(),
        }
    }
}

/// One field in a selection set: name, literal arguments in source order,
/// and an optional nested selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldNode {
    pub name: String,
    pub args: Vec<(String, ArgValue)>,
    pub selection: Option<SelectionSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionSet {
    pub fields: Vec<FieldNode>,
}

/// A parsed query operation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryDocument {
    /// Operation name, if the source had one.
    pub name: Option<String>,
    pub root: SelectionSet,
}

impl QueryDocument {
    /// Total number of field nodes in the selection tree.
    pub fn field_count(&self) -> usize {
        fn count(set: &SelectionSet) -> usize {
            set.fields
                .iter()
                .map(|f| 1 + f.selection.as_ref().map_or(0, count))
                .sum()
        }
        count(&self.root)
    }

    /// Total number of selection sets, the root included.
    pub fn selection_set_count(&self) -> usize {
        fn count(set: &SelectionSet) -> usize {
            1 + set
                .fields
                .iter()
                .filter_map(|f| f.selection.as_ref())
                .map(count)
                .sum::<usize>()
        }
        count(&self.root)
    }
}

/// A query response body. Shapes are checked against the query at use sites.
pub type ResponseTree = serde_json::Value;

/// Prints a query in compact one-line form: named operations as
/// `query Name { ... }`, anonymous ones as `{ ... }`.
pub fn print_query(doc: &QueryDocument) -> String {
    let mut out = String::new();
    if let Some(name) = &doc.name {
        write!(out, "query {name} ").unwrap();
    }
    print_selection(&mut out, &doc.root);
    out
}

fn print_selection(out: &mut String, set: &SelectionSet) {
    out.push('{');
    for field in &set.fields {
        out.push(' ');
        out.push_str(&field.name);
        if !field.args.is_empty() {
            out.push('(');
            for (j, (name, value)) in field.args.iter().enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                write!(out, "{name}: {}", value.display()).unwrap();
            }
            out.push(')');
        }
        if let Some(sel) = &field.selection {
            out.push(' ');
            print_selection(out, sel);
        }
    }
    out.push_str(" }");
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(name: &str) -> FieldNode {
        FieldNode {
            name: name.to_string(),
            args: vec![],
            selection: None,
        }
    }

    #[test]
    fn type_ref_display_reconstructs_wrappers() {
        let t = TypeRef {
            base: "Issue".to_string(),
            list_depth: 1,
            non_null: vec![true, false],
        };
        assert_eq!(t.display(), "[Issue!]");
        let t = TypeRef {
            base: "License".to_string(),
            list_depth: 1,
            non_null: vec![false, true],
        };
        assert_eq!(t.display(), "[License]!");
        assert!(t.required());
    }

    #[test]
    fn counts_walk_the_tree() {
        let doc = QueryDocument {
            name: None,
            root: SelectionSet {
                fields: vec![FieldNode {
                    name: "viewer".to_string(),
                    args: vec![],
                    selection: Some(SelectionSet {
                        fields: vec![leaf("id")],
                    }),
                }],
            },
        };
        assert_eq!(doc.field_count(), 2);
        assert_eq!(doc.selection_set_count(), 2);
    }

    #[test]
    fn printer_produces_compact_form() {
        let doc = QueryDocument {
            name: Some("Q".to_string()),
            root: SelectionSet {
                fields: vec![FieldNode {
                    name: "repository".to_string(),
                    args: vec![
                        ("owner".to_string(), ArgValue::Str("graphql".to_string())),
                        ("name".to_string(), ArgValue::Str("graphiql".to_string())),
                    ],
                    selection: Some(SelectionSet {
                        fields: vec![leaf("id")],
                    }),
                }],
            },
        };
        assert_eq!(
            print_query(&doc),
            "query Q { repository(owner: \"graphql\", name: \"graphiql\") { id } }"
        );
        let anon = QueryDocument {
            name: None,
            root: SelectionSet {
                fields: vec![leaf("a"), leaf("b")],
            },
        };
        assert_eq!(print_query(&anon), "{ a b }");
    }
}
