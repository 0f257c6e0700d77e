// SPDX-License-Identifier: Apache-2.0

//! SMT-LIB2 bridge: rendering, magic constants, a solver process pool and a
//! persistent query cache, exposed to rules as functors.

pub mod bridge;
pub mod cache;
pub mod forall;
pub mod magic;
pub mod process;
pub mod render;
pub mod sexp;

use std::fmt;

use ethnum::U256;
use thiserror::Error;

use crate::engine::{EngineError, Interner, Value};
use crate::expr::{const_name, parse_const, ExprError};

pub use bridge::{register_functors, Bridge, BridgeConfig, BridgeStats, ExprSolver};
pub use cache::QueryCache;
pub use magic::MagicPool;
pub use process::SolverCommand;
pub use render::{inline_operator, print_to_smt, print_to_smt_width, render_expr, SmtQuery};

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("let bindings form a cycle through `{0}`")]
    CyclicLets(String),
    #[error("let variable `{0}` is bound twice")]
    DuplicateLet(String),
    #[error("operator `{0}` has no inline template")]
    NoTemplate(String),
    #[error("cannot render EXP with base {0} and a symbolic exponent")]
    UnsupportedExp(String),
    #[error("magic constant index {index} out of range (pool has {size})")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("magic constant {0} also occurs in the analyzed facts")]
    MagicCollision(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("solver `{command}` could not be started: {message}")]
    Spawn { command: String, message: String },
    #[error("solver crashed: {0}")]
    SolverCrash(String),
    #[error("solver reported an error: {0}")]
    SolverError(String),
    #[error("unparseable solver output: {0}")]
    BadResponse(String),
    #[error("cache file {path}: {message}")]
    Cache { path: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
    Timeout,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Sat => "sat",
            Status::Unsat => "unsat",
            Status::Unknown => "unknown",
            Status::Timeout => "timeout",
        }
    }

    pub fn parse(s: &str) -> Option<Status> {
        Some(match s {
            "sat" => Status::Sat,
            "unsat" => Status::Unsat,
            "unknown" => Status::Unknown,
            "timeout" => Status::Timeout,
            _ => return None,
        })
    }

    /// Sat or unsat.
    pub fn is_definite(self) -> bool {
        matches!(self, Status::Sat | Status::Unsat)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A verdict plus, when sat, values for the free variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SmtResult {
    pub status: Status,
    pub model: Vec<(String, U256)>,
}

impl SmtResult {
    pub fn new(status: Status) -> Self {
        SmtResult {
            status,
            model: Vec::new(),
        }
    }

    pub fn sat(model: Vec<(String, U256)>) -> Self {
        SmtResult {
            status: Status::Sat,
            model,
        }
    }

    pub fn model_env(&self) -> crate::expr::Env {
        self.model.iter().cloned().collect()
    }

    /// The model as a cons list of `[var, "0x.."]` pairs.
    pub fn model_value(&self, ctx: &mut dyn Interner) -> Value {
        let mut acc = Value::Nil;
        for (var, v) in self.model.iter().rev() {
            let pair = [ctx.intern(var), ctx.intern(&const_name(*v))];
            let pair = ctx.pack(&pair);
            acc = ctx.pack(&[pair, acc]);
        }
        acc
    }

    /// `[status, model]`.
    pub fn to_value(&self, ctx: &mut dyn Interner) -> Value {
        let s = ctx.intern(self.status.as_str());
        let m = self.model_value(ctx);
        ctx.pack(&[s, m])
    }

    /// `[status]`, the model-less form.
    pub fn status_value(&self, ctx: &mut dyn Interner) -> Value {
        let s = ctx.intern(self.status.as_str());
        ctx.pack(&[s])
    }

    pub fn from_value(ctx: &dyn Interner, v: Value) -> Result<SmtResult, EngineError> {
        let bad = |found: String| EngineError::TypeMismatch {
            expected: "[status, model] record",
            found,
        };
        let fields = ctx.unpack(v)?;
        let status_sym = ctx.resolve(fields[0])?;
        let status = Status::parse(status_sym).ok_or_else(|| bad(status_sym.to_string()))?;
        let mut model = Vec::new();
        let mut cur = fields.get(1).copied().unwrap_or(Value::Nil);
        while cur != Value::Nil {
            let [pair, tail] = ctx.unpack(cur)? else {
                return Err(EngineError::MalformedList);
            };
            let [var, val] = ctx.unpack(*pair)? else {
                return Err(bad("model entry".into()));
            };
            let val = parse_const(ctx.resolve(*val)?).map_err(|e| bad(e.to_string()))?;
            model.push((ctx.resolve(*var)?.to_string(), val));
            cur = *tail;
        }
        Ok(SmtResult { status, model })
    }
}

impl fmt::Display for SmtResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, ", self.status)?;
        for (var, v) in &self.model {
            write!(f, "[[{var}, {}], ", const_name(*v))?;
        }
        f.write_str("nil")?;
        for _ in &self.model {
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}
