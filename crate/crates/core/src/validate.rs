//! Schema validation: binds a parsed query to schema types.
//!
//! Produces a [`TypedQuery`] in which every field knows its parent type, its
//! return type, and the kind of its base type, so downstream cost and
//! feature passes never consult the schema again.

use serde::Serialize;

use crate::ast::{ArgValue, FieldNode, QueryDocument, Schema, SelectionSet, TypeKind, TypeRef};
use crate::error::{Error, Result};

/// One validated field selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypedField {
    /// Name of the object type this field was selected on.
    pub parent_type: String,
    pub name: String,
    /// Supplied arguments in source order.
    pub args: Vec<(String, ArgValue)>,
    /// Declared return type (base, list depth, non-null wrappers).
    pub returns: TypeRef,
    /// Kind of the base return type.
    pub base_kind: TypeKind,
    pub children: Vec<TypedField>,
}

impl TypedField {
    pub fn is_composite(&self) -> bool {
        self.base_kind == TypeKind::Object
    }

    /// `"Parent.field"`, the key format used by configuration tables.
    pub fn qualified_name(&self) -> String {
        format!("{}.{}", self.parent_type, self.name)
    }
}

/// A query validated against a schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypedQuery {
    /// Name of the root object type the top-level fields select on.
    pub root_type: String,
    pub fields: Vec<TypedField>,
}

impl TypedQuery {
    pub fn field_count(&self) -> usize {
        fn count(fields: &[TypedField]) -> usize {
            fields.iter().map(|f| 1 + count(&f.children)).sum()
        }
        count(&self.fields)
    }

    /// Depth-first iterator over all fields (pre-order).
    pub fn walk(&self) -> impl Iterator<Item = &TypedField> {
        let mut stack: Vec<&TypedField> = self.fields.iter().rev().collect();
        std::iter::from_fn(move || {
            let next = stack.pop()?;
            stack.extend(next.children.iter().rev());
            Some(next)
        })
    }
}

/// Validates `doc` against `schema`.
pub fn validate(schema: &Schema, doc: &QueryDocument) -> Result<TypedQuery> {
    let root = schema.root_type();
    Ok(TypedQuery {
        root_type: root.name.clone(),
        fields: validate_set(schema, &root.name, &doc.root)?,
    })
}

fn validate_set(schema: &Schema, parent: &str, set: &SelectionSet) -> Result<Vec<TypedField>> {
    set.fields
        .iter()
        .map(|f| validate_field(schema, parent, f))
        .collect()
}

fn validate_field(schema: &Schema, parent: &str, node: &FieldNode) -> Result<TypedField> {
    let parent_def = schema
        .type_def(parent)
        .expect("parent type came from the schema");
    let field_def = parent_def
        .fields
        .iter()
        .find(|f| f.name == node.name)
        .ok_or_else(|| Error::UnknownField {
            parent: parent.to_string(),
            field: node.name.clone(),
        })?;
    let qualified = format!("{parent}.{}", node.name);

    // Every supplied argument must be declared and type-compatible.
    for (arg_name, value) in &node.args {
        let Some(arg_def) = field_def.args.iter().find(|a| &a.name == arg_name) else {
            return Err(Error::ArgumentMismatch {
                field: qualified.clone(),
                arg: arg_name.clone(),
                message: "argument is not declared".to_string(),
            });
        };
        check_arg_value(schema, &qualified, arg_name, &arg_def.ty, value)?;
    }
    // Every required argument must be supplied.
    for arg_def in &field_def.args {
        if arg_def.required() && !node.args.iter().any(|(n, _)| n == &arg_def.name) {
            return Err(Error::MissingArgument {
                field: qualified.clone(),
                arg: arg_def.name.clone(),
            });
        }
    }

    let base_def = schema
        .type_def(&field_def.ty.base)
        .expect("parser checked type references");
    let children = match (&node.selection, base_def.kind == TypeKind::Object) {
        (Some(sel), true) => validate_set(schema, &base_def.name, sel)?,
        (None, true) => {
            return Err(Error::MissingSelection(format!(
                "field `{qualified}` of composite type `{}` requires a selection set",
                base_def.name
            )));
        }
        (Some(_), false) => {
            return Err(Error::SelectionOnScalar(format!(
                "field `{qualified}` of {} type `{}` cannot have a selection set",
                match base_def.kind {
                    TypeKind::Enum => "enum",
                    _ => "scalar",
                },
                base_def.name
            )));
        }
        (None, false) => vec![],
    };

    Ok(TypedField {
        parent_type: parent.to_string(),
        name: node.name.clone(),
        args: node.args.clone(),
        returns: field_def.ty.clone(),
        base_kind: base_def.kind.clone(),
        children,
    })
}

fn check_arg_value(
    schema: &Schema,
    field: &str,
    arg: &str,
    declared: &TypeRef,
    value: &ArgValue,
) -> Result<()> {
    let mismatch = |message: String| Error::ArgumentMismatch {
        field: field.to_string(),
        arg: arg.to_string(),
        message,
    };
    if declared.list_depth > 0 {
        return Err(mismatch(format!(
            "list-typed argument `{}` cannot be supplied in this subset",
            declared.display()
        )));
    }
    let decl = schema
        .type_def(&declared.base)
        .expect("parser checked argument types");
    let ok = match (decl.name.as_str(), value) {
        ("Int", ArgValue::Int(_)) => true,
        ("Float", ArgValue::Int(_)) => true, // ints coerce to Float
        ("String", ArgValue::Str(_)) => true,
        ("Boolean", ArgValue::Bool(_)) => true,
        ("ID", ArgValue::Str(_) | ArgValue::Int(_)) => true,
        _ if decl.kind == TypeKind::Enum => match value {
            ArgValue::Enum(v) if decl.values.iter().any(|d| d == v) => true,
            ArgValue::Enum(v) => {
                return Err(mismatch(format!(
                    "`{v}` is not a value of enum `{}`",
                    decl.name
                )));
            }
            other => {
                return Err(mismatch(format!(
                    "enum `{}` expects a bare enum value, got {}",
                    decl.name,
                    other.display()
                )));
            }
        },
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(mismatch(format!(
            "expected `{}`, got {}",
            declared.display(),
            value.display()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_query, parse_schema};

    fn schema() -> Schema {
        parse_schema(
            "type Query {
               viewer: User!
               licenses: [License]!
               repository(owner: String!, name: String!): Repository
               flag(on: Boolean): Boolean
               node(id: ID!): User
               issues(state: State): [Issue]
             }
             type User { id: ID! name: String }
             type License { name: String! }
             type Repository { issues(first: Int): [Issue] }
             type Issue { id: ID! }
             enum State { OPEN CLOSED }",
        )
        .unwrap()
    }

    fn check(src: &str) -> Result<TypedQuery> {
        validate(&schema(), &parse_query(src).unwrap())
    }

    #[test]
    fn binds_types_through_the_tree() {
        let tq = check("{ repository(owner: \"o\", name: \"n\") { issues(first: 2) { id } } }")
            .unwrap();
        assert_eq!(tq.root_type, "Query");
        let repo = &tq.fields[0];
        assert_eq!(repo.qualified_name(), "Query.repository");
        assert!(repo.is_composite());
        let issues = &repo.children[0];
        assert_eq!(issues.parent_type, "Repository");
        assert_eq!(issues.returns.list_depth, 1);
        let id = &issues.children[0];
        assert_eq!(id.parent_type, "Issue");
        assert_eq!(id.base_kind, TypeKind::Scalar);
        assert_eq!(tq.field_count(), 3);
        let names: Vec<_> = tq.walk().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["repository", "issues", "id"]);
    }

    #[test]
    fn unknown_field_is_reported_with_parent() {
        let err = check("{ viewer { email } }").unwrap_err();
        assert_eq!(err.class(), "validate.unknown_field");
        assert!(err.to_string().contains("User"));
        assert!(err.to_string().contains("email"));
    }

    #[test]
    fn composite_field_requires_selection() {
        let err = check("{ viewer }").unwrap_err();
        assert_eq!(err.class(), "validate.missing_selection");
    }

    #[test]
    fn scalar_field_rejects_selection() {
        let err = check("{ viewer { id { x } } }").unwrap_err();
        assert_eq!(err.class(), "validate.selection_on_scalar");
    }

    #[test]
    fn missing_required_argument() {
        let err = check("{ repository(owner: \"graphql\") { issues { id } } }").unwrap_err();
        assert_eq!(err.class(), "validate.missing_arg");
        assert!(err.to_string().contains("name"));
    }

    #[test]
    fn argument_type_checks() {
        assert!(check("{ flag(on: true) }").is_ok());
        assert!(check("{ node(id: \"abc\") { id } }").is_ok());
        assert!(check("{ node(id: 7) { id } }").is_ok());
        assert!(check("{ issues(state: OPEN) { id } }").is_ok());

        let err = check("{ flag(on: 1) }").unwrap_err();
        assert_eq!(err.class(), "validate.arg_mismatch");
        let err = check("{ issues(state: MERGED) { id } }").unwrap_err();
        assert_eq!(err.class(), "validate.arg_mismatch");
        assert!(err.to_string().contains("MERGED"));
        let err = check("{ issues(state: \"OPEN\") { id } }").unwrap_err();
        assert_eq!(err.class(), "validate.arg_mismatch");
        let err = check("{ flag(off: true) }").unwrap_err();
        assert_eq!(err.class(), "validate.arg_mismatch");
        assert!(err.to_string().contains("not declared"));
    }
}
