// SPDX-License-Identifier: Apache-2.0

//! Host functions callable from rule bodies as `@name(args)`.
//!
//! Functors must be pure: the engine may call them any number of times, in
//! any order and from any worker, and relies on equal arguments producing
//! equal results.

use std::sync::Arc;

use indexmap::IndexMap;

use super::error::{EngineError, Result};
use super::value::{Interner, Value};

pub trait Functor: Send + Sync {
    fn call(&self, args: &[Value], ctx: &mut dyn Interner) -> Result<Value>;
}

impl<F> Functor for F
where
    F: Fn(&[Value], &mut dyn Interner) -> Result<Value> + Send + Sync,
{
    fn call(&self, args: &[Value], ctx: &mut dyn Interner) -> Result<Value> {
        self(args, ctx)
    }
}

#[derive(Clone)]
pub struct FunctorEntry {
    pub name: String,
    pub arity: usize,
    /// Non-monotonic functors force their rule's body relations into an
    /// earlier stratum than the head.
    pub monotonic: bool,
    pub(crate) f: Arc<dyn Functor>,
}

#[derive(Clone, Default)]
pub struct Registry {
    entries: IndexMap<String, FunctorEntry>,
}

impl Registry {
    pub fn register(&mut self, name: &str, arity: usize, monotonic: bool, f: Arc<dyn Functor>) -> Result<()> {
        if self.entries.contains_key(name) {
            return Err(EngineError::DuplicateFunctor(name.to_string()));
        }
        self.entries.insert(
            name.to_string(),
            FunctorEntry {
                name: name.to_string(),
                arity,
                monotonic,
                f,
            },
        );
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&FunctorEntry> {
        self.entries.get(name)
    }

    pub(crate) fn lookup(&self, name: &str, arity: usize) -> Result<usize> {
        let (idx, _, e) = self
            .entries
            .get_full(name)
            .ok_or_else(|| EngineError::UnknownFunctor(name.to_string()))?;
        if e.arity != arity {
            return Err(EngineError::Functor {
                name: name.to_string(),
                message: format!("expects {} arguments, called with {arity}", e.arity),
            });
        }
        Ok(idx)
    }

    pub(crate) fn call(&self, idx: usize, args: &[Value], ctx: &mut dyn Interner) -> Result<Value> {
        let e = &self.entries[idx];
        e.f.call(args, ctx).map_err(|err| match err {
            err @ EngineError::Functor { .. } => err,
            other => EngineError::Functor {
                name: e.name.clone(),
                message: other.to_string(),
            },
        })
    }

    pub fn is_monotonic(&self, name: &str) -> bool {
        self.entries.get(name).is_none_or(|e| e.monotonic)
    }
}

/// Number of cells of a cons list.
pub fn list_length(ctx: &dyn Interner, v: Value) -> Result<u64> {
    let mut n = 0;
    let mut cur = v;
    loop {
        match cur {
            Value::Nil => return Ok(n),
            Value::Record(_) => {
                let f = ctx.unpack(cur)?;
                if f.len() != 2 {
                    return Err(EngineError::MalformedList);
                }
                n += 1;
                cur = f[1];
            }
            _ => return Err(EngineError::MalformedList),
        }
    }
}

pub(crate) fn register_builtins(reg: &mut Registry) {
    reg.register(
        "list_length",
        1,
        true,
        Arc::new(|args: &[Value], ctx: &mut dyn Interner| list_length(ctx, args[0]).map(Value::Number)),
    )
    .expect("fresh registry");
}
