//! Recursive-descent parsers for the SDL subset and for query documents.
//!
//! Supported SDL: `type` and `enum` declarations, field arguments, non-null
//! (`!`) and list (`[...]`) wrappers, an optional `schema { query: X }`
//! block, and `#` comments. Built-in scalars are injected automatically.
//! Queries are single operations: an optional `query` keyword and name, then
//! a selection tree with literal arguments (int, string, boolean, enum).
//!
//! Out-of-scope constructs fail loudly rather than parse wrong: variables,
//! fragments, aliases, directives, mutations/subscriptions, float/list/object
//! literals, and interface/union/input/scalar declarations.

use std::collections::BTreeMap;

use crate::ast::{
    ArgDef, ArgValue, FieldDef, FieldNode, QueryDocument, Schema, SelectionSet, TypeDef, TypeKind,
    TypeRef, BUILTIN_SCALARS, DEFAULT_QUERY_ROOT,
};
use crate::error::{Error, Pos, Result};
use crate::lex::{Lexer, Token, TokenKind};

struct Parser {
    tokens: Vec<Token>,
    i: usize,
}

impl Parser {
    fn new(source: &str) -> Result<Self> {
        Ok(Parser {
            tokens: Lexer::tokenize(source)?,
            i: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.i.min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.i < self.tokens.len() - 1 {
            self.i += 1;
        }
        t
    }

    fn at_punct(&self, c: char) -> bool {
        self.peek().kind == TokenKind::Punct(c)
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.at_punct(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<Pos> {
        let t = self.bump();
        if t.kind == TokenKind::Punct(c) {
            Ok(t.pos)
        } else {
            Err(Error::Syntax {
                pos: t.pos,
                message: format!("expected `{c}`, found {}", t.describe()),
            })
        }
    }

    fn expect_name(&mut self, what: &str) -> Result<(String, Pos)> {
        let t = self.bump();
        match t.kind {
            TokenKind::Name(n) => Ok((n, t.pos)),
            _ => Err(Error::Syntax {
                pos: t.pos,
                message: format!("expected {what}, found {}", t.describe()),
            }),
        }
    }

    fn expect_eof(&mut self) -> Result<()> {
        let t = self.peek();
        if t.kind == TokenKind::Eof {
            Ok(())
        } else {
            Err(Error::Syntax {
                pos: t.pos,
                message: format!("expected end of input, found {}", t.describe()),
            })
        }
    }
}

/// Parses SDL text into a [`Schema`]. Built-in scalars are added; the query
/// root defaults to `Query` when no `schema` block names one.
pub fn parse_schema(source: &str) -> Result<Schema> {
    let mut p = Parser::new(source)?;
    let mut types: BTreeMap<String, TypeDef> = BTreeMap::new();
    for name in BUILTIN_SCALARS {
        types.insert(
            name.to_string(),
            TypeDef {
                name: name.to_string(),
                kind: TypeKind::Scalar,
                fields: vec![],
                values: vec![],
            },
        );
    }
    let mut query_root: Option<(String, Pos)> = None;

    loop {
        let t = p.peek().clone();
        let (keyword, pos) = match &t.kind {
            TokenKind::Eof => break,
            TokenKind::Name(n) => (n.clone(), t.pos),
            _ => {
                return Err(Error::Syntax {
                    pos: t.pos,
                    message: format!("expected a type definition, found {}", t.describe()),
                });
            }
        };
        match keyword.as_str() {
            "type" => {
                p.bump();
                let def = parse_type_def(&mut p)?;
                insert_type(&mut types, def, pos)?;
            }
            "enum" => {
                p.bump();
                let def = parse_enum_def(&mut p)?;
                insert_type(&mut types, def, pos)?;
            }
            "schema" => {
                p.bump();
                let (root, root_pos) = parse_schema_block(&mut p)?;
                if query_root.is_some() {
                    return Err(Error::Schema(format!(
                        "duplicate schema block at {root_pos}"
                    )));
                }
                query_root = Some((root, root_pos));
            }
            "interface" | "union" | "input" | "scalar" | "directive" | "extend" => {
                return Err(Error::Unsupported {
                    pos,
                    message: format!("`{keyword}` definitions are not supported"),
                });
            }
            other => {
                return Err(Error::Syntax {
                    pos,
                    message: format!("expected a type definition, found name `{other}`"),
                });
            }
        }
    }

    let (root_name, root_pos) = query_root.unwrap_or((
        DEFAULT_QUERY_ROOT.to_string(),
        Pos { line: 1, col: 1 },
    ));
    let schema = Schema {
        types,
        query_root: root_name.clone(),
    };
    check_references(&schema)?;
    match schema.types.get(&root_name) {
        None => Err(Error::Schema(format!(
            "query root type `{root_name}` is not defined (at {root_pos})"
        ))),
        Some(def) if def.kind != TypeKind::Object => Err(Error::Schema(format!(
            "query root type `{root_name}` must be an object type"
        ))),
        Some(_) => Ok(schema),
    }
}

fn insert_type(types: &mut BTreeMap<String, TypeDef>, def: TypeDef, pos: Pos) -> Result<()> {
    if types.contains_key(&def.name) {
        return Err(Error::Duplicate(format!(
            "type `{}` defined more than once (at {pos})",
            def.name
        )));
    }
    types.insert(def.name.clone(), def);
    Ok(())
}

fn parse_schema_block(p: &mut Parser) -> Result<(String, Pos)> {
    p.expect_punct('{')?;
    let (kw, kw_pos) = p.expect_name("`query`")?;
    if kw != "query" {
        return Err(Error::Unsupported {
            pos: kw_pos,
            message: format!("schema operation `{kw}` is not supported; only `query`"),
        });
    }
    p.expect_punct(':')?;
    let (root, pos) = p.expect_name("root type name")?;
    p.expect_punct('}')?;
    Ok((root, pos))
}

fn parse_type_def(p: &mut Parser) -> Result<TypeDef> {
    let (name, _) = p.expect_name("type name")?;
    p.expect_punct('{')?;
    let mut fields = Vec::new();
    while !p.eat_punct('}') {
        fields.push(parse_field_def(p)?);
    }
    if fields.is_empty() {
        return Err(Error::Schema(format!("type `{name}` declares no fields")));
    }
    Ok(TypeDef {
        name,
        kind: TypeKind::Object,
        fields,
        values: vec![],
    })
}

fn parse_enum_def(p: &mut Parser) -> Result<TypeDef> {
    let (name, _) = p.expect_name("enum name")?;
    p.expect_punct('{')?;
    let mut values = Vec::new();
    while !p.eat_punct('}') {
        let (value, _) = p.expect_name("enum value")?;
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::Schema(format!("enum `{name}` declares no values")));
    }
    Ok(TypeDef {
        name,
        kind: TypeKind::Enum,
        fields: vec![],
        values,
    })
}

fn parse_field_def(p: &mut Parser) -> Result<FieldDef> {
    let (name, _) = p.expect_name("field name")?;
    let mut args = Vec::new();
    if p.eat_punct('(') {
        while !p.eat_punct(')') {
            let (arg_name, _) = p.expect_name("argument name")?;
            p.expect_punct(':')?;
            let ty = parse_type_ref(p)?;
            if p.at_punct('=') {
                let pos = p.peek().pos;
                return Err(Error::Unsupported {
                    pos,
                    message: "argument default values are not supported".to_string(),
                });
            }
            args.push(ArgDef { name: arg_name, ty });
        }
    }
    p.expect_punct(':')?;
    let ty = parse_type_ref(p)?;
    Ok(FieldDef { name, args, ty })
}

/// Parses `Name`, `Name!`, `[T]`, `[T]!`, and nested lists into a TypeRef.
fn parse_type_ref(p: &mut Parser) -> Result<TypeRef> {
    if p.eat_punct('[') {
        let inner = parse_type_ref(p)?;
        p.expect_punct(']')?;
        let mut non_null = inner.non_null;
        non_null.push(p.eat_punct('!'));
        Ok(TypeRef {
            base: inner.base,
            list_depth: non_null.len() - 1,
            non_null,
        })
    } else {
        let (base, _) = p.expect_name("type name")?;
        let non_null = vec![p.eat_punct('!')];
        Ok(TypeRef {
            base,
            list_depth: 0,
            non_null,
        })
    }
}

/// Every type referenced by a field or argument must be defined.
fn check_references(schema: &Schema) -> Result<()> {
    for def in schema.types.values() {
        for field in &def.fields {
            if !schema.types.contains_key(&field.ty.base) {
                return Err(Error::UnknownType(format!(
                    "field `{}.{}` references undefined type `{}`",
                    def.name, field.name, field.ty.base
                )));
            }
            for arg in &field.args {
                let arg_ty = schema.types.get(&arg.ty.base);
                match arg_ty {
                    None => {
                        return Err(Error::UnknownType(format!(
                            "argument `{}` of `{}.{}` references undefined type `{}`",
                            arg.name, def.name, field.name, arg.ty.base
                        )));
                    }
                    Some(t) if t.kind == TypeKind::Object => {
                        return Err(Error::Schema(format!(
                            "argument `{}` of `{}.{}` has object type `{}`; only scalar and enum arguments are supported",
                            arg.name, def.name, field.name, arg.ty.base
                        )));
                    }
                    Some(_) => {}
                }
            }
        }
    }
    Ok(())
}

/// Parses one query operation. Mutations, subscriptions, variables,
/// fragments, aliases, and directives are rejected as unsupported.
pub fn parse_query(source: &str) -> Result<QueryDocument> {
    let mut p = Parser::new(source)?;
    let mut name = None;
    let t = p.peek().clone();
    match &t.kind {
        TokenKind::Name(kw) if kw == "query" => {
            p.bump();
            if let TokenKind::Name(op_name) = &p.peek().kind {
                name = Some(op_name.clone());
                p.bump();
            }
            if p.at_punct('(') {
                return Err(Error::Unsupported {
                    pos: p.peek().pos,
                    message: "variable definitions are not supported".to_string(),
                });
            }
        }
        TokenKind::Name(kw) if kw == "mutation" || kw == "subscription" => {
            return Err(Error::Unsupported {
                pos: t.pos,
                message: format!("`{kw}` operations are not supported; only queries"),
            });
        }
        TokenKind::Name(kw) if kw == "fragment" => {
            return Err(Error::Unsupported {
                pos: t.pos,
                message: "fragments are not supported".to_string(),
            });
        }
        _ => {}
    }
    let root = parse_selection_set(&mut p)?;
    p.expect_eof()?;
    Ok(QueryDocument { name, root })
}

fn parse_selection_set(p: &mut Parser) -> Result<SelectionSet> {
    let open = p.expect_punct('{')?;
    let mut fields = Vec::new();
    while !p.eat_punct('}') {
        fields.push(parse_field_node(p)?);
    }
    if fields.is_empty() {
        return Err(Error::Syntax {
            pos: open,
            message: "empty selection set".to_string(),
        });
    }
    Ok(SelectionSet { fields })
}

fn parse_field_node(p: &mut Parser) -> Result<FieldNode> {
    let t = p.peek().clone();
    if t.kind == TokenKind::Punct('.') {
        return Err(Error::Unsupported {
            pos: t.pos,
            message: "fragment spreads are not supported".to_string(),
        });
    }
    let (name, _) = p.expect_name("field name")?;
    if p.at_punct(':') {
        return Err(Error::Unsupported {
            pos: p.peek().pos,
            message: format!("alias `{name}:` is not supported"),
        });
    }
    let mut args = Vec::new();
    if p.eat_punct('(') {
        while !p.eat_punct(')') {
            let (arg_name, _) = p.expect_name("argument name")?;
            p.expect_punct(':')?;
            args.push((arg_name, parse_arg_value(p)?));
        }
    }
    if p.at_punct('@') {
        return Err(Error::Unsupported {
            pos: p.peek().pos,
            message: "directives are not supported".to_string(),
        });
    }
    let selection = if p.at_punct('{') {
        Some(parse_selection_set(p)?)
    } else {
        None
    };
    Ok(FieldNode {
        name,
        args,
        selection,
    })
}

fn parse_arg_value(p: &mut Parser) -> Result<ArgValue> {
    let t = p.bump();
    match t.kind {
        TokenKind::Int(n) => Ok(ArgValue::Int(n)),
        TokenKind::Str(s) => Ok(ArgValue::Str(s)),
        TokenKind::Name(n) if n == "true" => Ok(ArgValue::Bool(true)),
        TokenKind::Name(n) if n == "false" => Ok(ArgValue::Bool(false)),
        TokenKind::Name(n) if n == "null" => Err(Error::Unsupported {
            pos: t.pos,
            message: "null argument values are not supported".to_string(),
        }),
        TokenKind::Name(n) => Ok(ArgValue::Enum(n)),
        TokenKind::Float(x) => Err(Error::Unsupported {
            pos: t.pos,
            message: format!("float argument value `{x}` is not supported"),
        }),
        TokenKind::Punct('$') => Err(Error::Unsupported {
            pos: t.pos,
            message: "variables are not supported".to_string(),
        }),
        TokenKind::Punct('[') => Err(Error::Unsupported {
            pos: t.pos,
            message: "list argument values are not supported".to_string(),
        }),
        TokenKind::Punct('{') => Err(Error::Unsupported {
            pos: t.pos,
            message: "object argument values are not supported".to_string(),
        }),
        other => Err(Error::Syntax {
            pos: t.pos,
            message: format!(
                "expected an argument value, found {}",
                Token {
                    kind: other,
                    pos: t.pos
                }
                .describe()
            ),
        }),
    }
}
