// SPDX-License-Identifier: Apache-2.0

//! The solver front door: rendering, caching, a process pool and the
//! `@print_to_smt`, `@smt_response` and `@smt_response_with_model` functors.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::cache::{key_of, QueryCache};
use super::magic::MagicPool;
use super::process::{SolverCommand, SolverProcess};
use super::render::print_to_smt_width;
use super::{SmtError, SmtQuery, SmtResult, Status};
use crate::engine::{Engine, EngineError, Interner, Value};
use crate::expr::Expr;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// Anything that can decide `e = 1`.
pub trait ExprSolver: Send + Sync {
    fn solve(&self, e: &Expr) -> Result<SmtResult, SmtError>;
}

#[derive(Clone, Debug)]
pub struct BridgeConfig {
    pub command: SolverCommand,
    pub timeout: Duration,
    pub pool: MagicPool,
    pub width: u32,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        BridgeConfig {
            command: SolverCommand::z3(),
            timeout: DEFAULT_TIMEOUT,
            pool: MagicPool::default(),
            width: 256,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BridgeStats {
    pub queries: u64,
    pub cache_hits: u64,
    pub solver_invocations: u64,
    pub timeouts: u64,
    pub crashes: u64,
}

#[derive(Default)]
struct Counters {
    queries: AtomicU64,
    cache_hits: AtomicU64,
    solver_invocations: AtomicU64,
    timeouts: AtomicU64,
    crashes: AtomicU64,
}

pub struct Bridge {
    pub config: BridgeConfig,
    cache: QueryCache,
    idle: Mutex<Vec<SolverProcess>>,
    rendered: Mutex<HashMap<String, SmtQuery>>,
    counters: Counters,
    diagnostics: Mutex<Vec<(String, String)>>,
}

impl Bridge {
    pub fn new(config: BridgeConfig, cache: QueryCache) -> Self {
        Bridge {
            config,
            cache,
            idle: Mutex::new(Vec::new()),
            rendered: Mutex::new(HashMap::new()),
            counters: Counters::default(),
            diagnostics: Mutex::new(Vec::new()),
        }
    }

    pub fn with_command(command: SolverCommand) -> Self {
        Bridge::new(
            BridgeConfig {
                command,
                ..Default::default()
            },
            QueryCache::in_memory(),
        )
    }

    pub fn cache(&self) -> &QueryCache {
        &self.cache
    }

    pub fn stats(&self) -> BridgeStats {
        let c = &self.counters;
        BridgeStats {
            queries: c.queries.load(Ordering::Relaxed),
            cache_hits: c.cache_hits.load(Ordering::Relaxed),
            solver_invocations: c.solver_invocations.load(Ordering::Relaxed),
            timeouts: c.timeouts.load(Ordering::Relaxed),
            crashes: c.crashes.load(Ordering::Relaxed),
        }
    }

    /// `(kind, detail)` entries for timeouts and solver failures, sorted.
    pub fn diagnostics(&self) -> Vec<(String, String)> {
        let mut d = self.diagnostics.lock().unwrap().clone();
        d.sort();
        d.dedup();
        d
    }

    fn note(&self, kind: &str, detail: String) {
        self.diagnostics.lock().unwrap().push((kind.to_string(), detail));
    }

    /// Renders a query at the configured width and remembers it, so its
    /// text alone can be answered later.
    pub fn print(&self, constraint: &Expr, bound: &[String], lets: &[(String, Expr)]) -> Result<SmtQuery, SmtError> {
        let q = print_to_smt_width(constraint, bound, lets, &self.config.pool, self.config.width)?;
        self.rendered.lock().unwrap().insert(q.text.clone(), q.clone());
        Ok(q)
    }

    /// Answers rendered SMT-LIB text; unknown text has its free variables
    /// read off its `declare-const` lines.
    pub fn solve_text(&self, text: &str) -> Result<SmtResult, SmtError> {
        let known = self.rendered.lock().unwrap().get(text).cloned();
        let q = match known {
            Some(q) => q,
            None => SmtQuery {
                constraint: Expr::num(1),
                bound_vars: Vec::new(),
                lets: Vec::new(),
                logic: "QF_BV".into(),
                width: self.config.width,
                free_vars: declared_consts(text),
                text: text.to_string(),
            },
        };
        self.solve_query(&q)
    }

    pub fn solve_query(&self, q: &SmtQuery) -> Result<SmtResult, SmtError> {
        self.counters.queries.fetch_add(1, Ordering::Relaxed);
        let key = key_of(&format!("{}\n{}", q.logic, q.text));
        if let Some(r) = self.cache.get(&key) {
            self.counters.cache_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(r);
        }
        let proc = self.idle.lock().unwrap().pop();
        let mut proc = match proc {
            Some(p) => p,
            None => SolverProcess::spawn(&self.config.command)?,
        };
        self.counters.solver_invocations.fetch_add(1, Ordering::Relaxed);
        let out = proc.run(q, self.config.timeout);
        if !proc.is_dead() {
            self.idle.lock().unwrap().push(proc);
        }
        let digest = super::cache::key_hex(&key)[..16].to_string();
        match out {
            Ok(r) => {
                if r.status == Status::Timeout {
                    self.counters.timeouts.fetch_add(1, Ordering::Relaxed);
                    self.note("timeout", digest);
                }
                self.cache.insert(key, r)
            }
            Err(e @ (SmtError::SolverCrash(_) | SmtError::SolverError(_) | SmtError::BadResponse(_))) => {
                self.counters.crashes.fetch_add(1, Ordering::Relaxed);
                self.note("solver-failure", format!("{digest}: {e}"));
                Ok(SmtResult::new(Status::Unknown))
            }
            Err(e) => Err(e),
        }
    }
}

impl ExprSolver for Bridge {
    fn solve(&self, e: &Expr) -> Result<SmtResult, SmtError> {
        let q = print_to_smt_width(e, &[], &[], &self.config.pool, self.config.width)?;
        self.solve_query(&q)
    }
}

fn declared_consts(text: &str) -> Vec<String> {
    let mut out: Vec<String> = text
        .match_indices("(declare-const ")
        .filter_map(|(i, m)| {
            let rest = &text[i + m.len()..];
            let name = if let Some(q) = rest.strip_prefix('|') {
                q.split('|').next()?
            } else {
                rest.split_whitespace().next()?
            };
            Some(name.to_string())
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

fn functor_error(name: &str, e: impl ToString) -> EngineError {
    EngineError::Functor {
        name: name.to_string(),
        message: e.to_string(),
    }
}

fn cons_items(ctx: &dyn Interner, mut v: Value) -> Result<Vec<Value>, EngineError> {
    let mut out = Vec::new();
    while v != Value::Nil {
        let [h, t] = ctx.unpack(v)? else {
            return Err(EngineError::MalformedList);
        };
        out.push(*h);
        v = *t;
    }
    Ok(out)
}

fn answer(
    name: &str,
    bridge: &Bridge,
    solver: &dyn ExprSolver,
    ctx: &dyn Interner,
    q: Value,
) -> Result<SmtResult, EngineError> {
    let r = match q {
        Value::Symbol(_) => bridge.solve_text(ctx.resolve(q)?),
        Value::Record(_) => solver.solve(&Expr::from_value(ctx, q)?),
        _ => {
            return Err(EngineError::TypeMismatch {
                expected: "SMT-LIB text or expression",
                found: "number or nil".into(),
            })
        }
    };
    r.map_err(|e| functor_error(name, e))
}

/// Registers the three SMT functors. Expression arguments to the response
/// functors go to `solver`; rendered text goes straight to `bridge`.
pub fn register_functors(
    engine: &mut Engine,
    bridge: Arc<Bridge>,
    solver: Arc<dyn ExprSolver>,
) -> Result<(), EngineError> {
    let b = bridge.clone();
    engine.register_functor(
        "print_to_smt",
        3,
        true,
        Arc::new(move |args: &[Value], ctx: &mut dyn Interner| {
            let c = Expr::from_value(ctx, args[0])?;
            let bound = cons_items(ctx, args[1])?
                .into_iter()
                .map(|v| ctx.resolve(v).map(str::to_string))
                .collect::<Result<Vec<_>, _>>()?;
            let mut lets = Vec::new();
            for pair in cons_items(ctx, args[2])? {
                let [var, e] = ctx.unpack(pair)? else {
                    return Err(functor_error("print_to_smt", "let bindings are [var, expr] pairs"));
                };
                lets.push((ctx.resolve(*var)?.to_string(), Expr::from_value(ctx, *e)?));
            }
            let q = b
                .print(&c, &bound, &lets)
                .map_err(|e| functor_error("print_to_smt", e))?;
            Ok(ctx.intern(&q.text))
        }),
    )?;
    let (b, s) = (bridge.clone(), solver.clone());
    engine.register_functor(
        "smt_response",
        1,
        true,
        Arc::new(move |args: &[Value], ctx: &mut dyn Interner| {
            Ok(answer("smt_response", &b, &*s, ctx, args[0])?.status_value(ctx))
        }),
    )?;
    let (b, s) = (bridge, solver);
    engine.register_functor(
        "smt_response_with_model",
        1,
        true,
        Arc::new(move |args: &[Value], ctx: &mut dyn Interner| {
            Ok(answer("smt_response_with_model", &b, &*s, ctx, args[0])?.to_value(ctx))
        }),
    )?;
    Ok(())
}
