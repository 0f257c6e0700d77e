// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// A 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("syntax error at {span}: {message}")]
    Syntax { span: Span, message: String },
    #[error("arity error at {span}: `{relation}` declared with {expected} columns, used with {found}")]
    Arity {
        span: Span,
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown predicate `{relation}` at {span}")]
    UnknownPredicate { span: Span, relation: String },
    #[error("unsafe rule at {span}: {message}")]
    Safety { span: Span, message: String },
    #[error("relation `{relation}` is an input relation and cannot appear in a rule head ({span})")]
    EdbHead { span: Span, relation: String },
    #[error("program is not stratifiable: `{from}` is used non-monotonically by `{to}` inside a recursive cycle")]
    Stratification { from: String, to: String },
    #[error("functor `@{0}` is already registered")]
    DuplicateFunctor(String),
    #[error("unknown functor `@{0}`")]
    UnknownFunctor(String),
    #[error("functor `@{name}` failed: {message}")]
    Functor { name: String, message: String },
    #[error("relation `{relation}` exceeded the tuple limit of {limit}")]
    ResourceLimit { relation: String, limit: usize },
    #[error("unknown symbol ordinal {0}")]
    UnknownOrdinal(u32),
    #[error("unknown record reference {0}")]
    UnknownRecordRef(u32),
    #[error("malformed list value")]
    MalformedList,
    #[error("type mismatch: expected {expected}, found {found}")]
    TypeMismatch { expected: &'static str, found: String },
    #[error("arithmetic error: {0}")]
    Arithmetic(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    FactFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("symbol `{symbol}` in {path} uses the reserved fresh-variable prefix")]
    ReservedSymbol { path: PathBuf, symbol: String },
    #[error("include `{0}` could not be resolved")]
    Include(String),
}

impl EngineError {
    pub(crate) fn syntax(span: Span, message: impl Into<String>) -> Self {
        EngineError::Syntax {
            span,
            message: message.into(),
        }
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;
