//! One error type for the whole analysis stack, with stable machine-readable
//! classes for command-line reporting.

use thiserror::Error;

/// Position of a token in source text (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed schema or query text.
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Pos, message: String },

    /// Grammar the toolkit deliberately does not support (variables,
    /// fragments, aliases, directives, mutations, float literals, ...).
    #[error("unsupported construct at {pos}: {message}")]
    Unsupported { pos: Pos, message: String },

    /// Schema-level rule violation (unknown type, duplicates, bad root).
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("unknown type `{0}` referenced in schema")]
    UnknownType(String),

    #[error("duplicate definition of `{0}`")]
    Duplicate(String),

    /// Query/schema validation failures.
    #[error("unknown field `{field}` on type `{parent}`")]
    UnknownField { parent: String, field: String },

    #[error("missing required argument `{arg}` on field `{field}`")]
    MissingArgument { field: String, arg: String },

    #[error("argument `{arg}` on field `{field}`: {message}")]
    ArgumentMismatch { field: String, arg: String, message: String },

    #[error("field `{0}` returns a scalar/enum and cannot have a selection set")]
    SelectionOnScalar(String),

    #[error("field `{0}` returns a composite type and requires a selection set")]
    MissingSelection(String),

    /// Cost configuration problems.
    #[error("invalid cost config: {0}")]
    Config(String),

    /// Cost analysis failures.
    #[error("unbounded list: field `{0}` has no limit argument, no inherited limit, and no configured default size")]
    UnboundedList(String),

    #[error("negative list limit {limit} on field `{field}`")]
    NegativeLimit { field: String, limit: i64 },

    #[error("response shape mismatch: {0}")]
    Shape(String),

    /// Feature extraction failures.
    #[error("feature extraction: {0}")]
    Feature(String),

    /// Dataset handling failures.
    #[error("dataset: {0}")]
    Data(String),

    #[error("line {line}: {message}")]
    DataLine { line: usize, message: String },

    /// Evaluation-metric failures.
    #[error("evaluation: {0}")]
    Eval(String),

    /// Simulator failures.
    #[error("simulation: {0}")]
    Sim(String),

    /// Model artifact failures.
    #[error("model: {0}")]
    Model(String),

    #[error("model was trained against different inputs ({0}); pass --force to estimate anyway")]
    HashMismatch(String),

    #[error(transparent)]
    Ml(#[from] gqlcost_ml::MlError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable class, printed as `<class>: <detail>` by the
    /// command-line tool.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "parse.syntax",
            Error::Unsupported { .. } => "parse.unsupported",
            Error::Schema(_) => "schema.invalid",
            Error::UnknownType(_) => "schema.unknown_type",
            Error::Duplicate(_) => "schema.duplicate",
            Error::UnknownField { .. } => "validate.unknown_field",
            Error::MissingArgument { .. } => "validate.missing_arg",
            Error::ArgumentMismatch { .. } => "validate.arg_mismatch",
            Error::SelectionOnScalar(_) => "validate.selection_on_scalar",
            Error::MissingSelection(_) => "validate.missing_selection",
            Error::Config(_) => "config.invalid",
            Error::UnboundedList(_) => "cost.unbounded_list",
            Error::NegativeLimit { .. } => "cost.negative_limit",
            Error::Shape(_) => "cost.shape",
            Error::Feature(_) => "feature.mismatch",
            Error::Data(_) => "data.invalid",
            Error::DataLine { .. } => "data.line",
            Error::Eval(_) => "eval.invalid",
            Error::Sim(_) => "sim.invalid",
            Error::Model(_) => "model.invalid",
            Error::HashMismatch(_) => "model.hash_mismatch",
            Error::Ml(e) => e.class(),
            Error::Io { source, .. } => {
                if source.kind() == std::io::ErrorKind::NotFound {
                    "io.not_found"
                } else {
                    "io.failed"
                }
            }
        }
    }

    /// Wraps an I/O error with the path it occurred on.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
