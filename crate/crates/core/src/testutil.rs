//! Shared fixtures for unit tests: the GitHub-style schema, its cost
//! configuration, and the worked reference query/response pair.

use serde_json::json;

use crate::ast::{ResponseTree, Schema};
use crate::cost::CostConfig;
use crate::parser::{parse_query, parse_schema};
use crate::validate::{validate, TypedQuery};

pub const GITHUB_SDL: &str = "\
type Query {
  viewer: User!
  licenses: [License]!
  repository(owner: String!, name: String!): Repository
}
type License { name: String! body: String! }
type Repository {
  issues(first: Int): IssueConnection!
  languages(first: Int): LanguageConnection
}
type IssueConnection { nodes: [Issue] }
type LanguageConnection { nodes: [Language] }
type User { id: ID! name: String bio: String }
type Issue { id: ID! }
type Language { name: String! }
";

pub const REFERENCE_QUERY: &str = "query { licenses { name } \
    repository(owner: \"graphql\", name: \"graphiql\") { \
    issues(first: 2) { nodes { id } } languages(first: 100) { nodes {name} } } }";

pub fn github_schema() -> Schema {
    parse_schema(GITHUB_SDL).unwrap()
}

pub fn github_config() -> CostConfig {
    serde_json::from_value(json!({
        "typeWeights": { "*scalarDefault": 0, "*objectDefault": 1 },
        "defaultListSizes": { "Query.licenses": 13 },
        "limitArgNames": ["first", "last"]
    }))
    .unwrap()
}

/// A response to [`REFERENCE_QUERY`]: 13 licenses, 2 issues, 5 languages.
pub fn reference_response() -> ResponseTree {
    let names = [
        "agpl-3.0",
        "apache-2.0",
        "bsd-2-clause",
        "bsd-3-clause",
        "cc0-1.0",
        "epl-2.0",
        "gpl-2.0",
        "gpl-3.0",
        "lgpl-2.1",
        "mit",
        "mpl-2.0",
        "unlicense",
        "wtfpl",
    ];
    let licenses: Vec<_> = names.iter().map(|n| json!({ "name": n })).collect();
    json!({
        "licenses": licenses,
        "repository": {
            "issues": { "nodes": [ { "id": "I_1" }, { "id": "I_2" } ] },
            "languages": { "nodes": [
                { "name": "HTML" }, { "name": "JavaScript" }, { "name": "Shell" },
                { "name": "TypeScript" }, { "name": "CSS" }
            ] }
        }
    })
}

/// Parses and validates `src` against the GitHub-style schema.
pub fn typed(src: &str) -> TypedQuery {
    validate(&github_schema(), &parse_query(src).unwrap()).unwrap()
}
