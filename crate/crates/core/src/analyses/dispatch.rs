// SPDX-License-Identifier: Apache-2.0

//! Size-threshold dispatch between the native solver and the SMT bridge.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use ethnum::U256;

use crate::expr::{eval_concrete, Env, Expr};
use crate::native::{NativeError, NativeInput, NativeSolver};
use crate::smt::{ExprSolver, SmtError, SmtResult, Status};

pub const DEFAULT_SWITCH_SIZE: usize = 10;
pub const MAX_MODEL_COMBINATIONS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DispatchConfig {
    /// Queries of at most this many nodes go to the native solver.
    pub switch_size: usize,
    /// Retry native `unknown` answers with SMT.
    pub escalate: bool,
}

impl Default for DispatchConfig {
    fn default() -> Self {
        DispatchConfig {
            switch_size: DEFAULT_SWITCH_SIZE,
            escalate: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DispatchStats {
    pub native_queries: u64,
    pub native_sat: u64,
    pub native_unsat: u64,
    pub native_unknown: u64,
    pub smt_queries: u64,
    pub escalations: u64,
}

#[derive(Default)]
struct Counters {
    native_queries: AtomicU64,
    native_sat: AtomicU64,
    native_unsat: AtomicU64,
    native_unknown: AtomicU64,
    smt_queries: AtomicU64,
    escalations: AtomicU64,
}

/// Splits nested `AND`s into their leaves.
pub fn conjuncts(e: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    let mut stack = vec![e];
    while let Some(e) = stack.pop() {
        match (e.base.as_str(), &e.left, &e.right) {
            ("AND", Some(l), Some(r)) => {
                stack.push(r);
                stack.push(l);
            }
            _ => out.push(e.clone()),
        }
    }
    out
}

pub struct Dispatcher {
    pub config: DispatchConfig,
    native: Arc<NativeSolver>,
    smt: Arc<dyn ExprSolver>,
    memo: Mutex<HashMap<Expr, SmtResult>>,
    counters: Counters,
}

impl Dispatcher {
    pub fn new(config: DispatchConfig, native: Arc<NativeSolver>, smt: Arc<dyn ExprSolver>) -> Self {
        Dispatcher {
            config,
            native,
            smt,
            memo: Mutex::new(HashMap::new()),
            counters: Counters::default(),
        }
    }

    pub fn stats(&self) -> DispatchStats {
        let c = &self.counters;
        DispatchStats {
            native_queries: c.native_queries.load(Ordering::Relaxed),
            native_sat: c.native_sat.load(Ordering::Relaxed),
            native_unsat: c.native_unsat.load(Ordering::Relaxed),
            native_unknown: c.native_unknown.load(Ordering::Relaxed),
            smt_queries: c.smt_queries.load(Ordering::Relaxed),
            escalations: c.escalations.load(Ordering::Relaxed),
        }
    }

    pub fn uses_native(&self, e: &Expr) -> bool {
        e.tree_size() <= self.config.switch_size
    }

    /// Decides `e = 1` with the native solver alone.
    ///
    /// A conjunct that normalizes to a constant with a clear low bit makes
    /// the whole query unsat. Otherwise candidate values are combined and
    /// the first assignment that evaluates the query to one is returned.
    pub fn solve_native(&self, e: &Expr) -> Result<SmtResult, NativeError> {
        let width = self.native.config.width;
        let parts = conjuncts(e);
        let mut input = NativeInput::from_seeds(parts.clone());
        input.seeds.sort();
        input.seeds.dedup();
        let run = self.native.run(&input)?;
        let mut proposals: BTreeMap<String, BTreeSet<U256>> = e
            .vars()
            .into_iter()
            .map(|v| (v, BTreeSet::from([U256::ZERO])))
            .collect();
        for p in &parts {
            let p = p.canonical();
            if let Some(k) = run.normal_form(&p)?.const_value() {
                if k & U256::ONE == U256::ZERO {
                    return Ok(SmtResult::new(Status::Unsat));
                }
                continue;
            }
            for (var, value) in run.solutions(&p)? {
                if let (Some(set), Some(c)) = (proposals.get_mut(&var), value.const_value()) {
                    set.insert(c);
                }
            }
        }
        let vars: Vec<(String, Vec<U256>)> = proposals
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().collect()))
            .collect();
        let mut idx = vec![0usize; vars.len()];
        for _ in 0..MAX_MODEL_COMBINATIONS {
            let env: Env = vars.iter().zip(&idx).map(|((v, cs), i)| (v.clone(), cs[*i])).collect();
            if eval_concrete(e, &env, width)? == U256::ONE {
                return Ok(SmtResult::sat(env.into_iter().collect()));
            }
            // Odometer step over the candidate lists.
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return Ok(SmtResult::new(Status::Unknown));
                }
                idx[k] += 1;
                if idx[k] < vars[k].1.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
        Ok(SmtResult::new(Status::Unknown))
    }

    fn solve_uncached(&self, e: &Expr) -> Result<SmtResult, SmtError> {
        if !self.uses_native(e) {
            self.counters.smt_queries.fetch_add(1, Ordering::Relaxed);
            return self.smt.solve(e);
        }
        self.counters.native_queries.fetch_add(1, Ordering::Relaxed);
        let r = match self.solve_native(e) {
            Ok(r) => r,
            Err(NativeError::SeedTooLarge { .. }) => SmtResult::new(Status::Unknown),
            Err(NativeError::Expr(x)) => return Err(SmtError::Expr(x)),
            Err(other) => return Err(SmtError::SolverError(other.to_string())),
        };
        let counter = match r.status {
            Status::Sat => &self.counters.native_sat,
            Status::Unsat => &self.counters.native_unsat,
            _ => &self.counters.native_unknown,
        };
        counter.fetch_add(1, Ordering::Relaxed);
        if r.status == Status::Unknown && self.config.escalate {
            self.counters.escalations.fetch_add(1, Ordering::Relaxed);
            self.counters.smt_queries.fetch_add(1, Ordering::Relaxed);
            return self.smt.solve(e);
        }
        Ok(r)
    }
}

impl ExprSolver for Dispatcher {
    fn solve(&self, e: &Expr) -> Result<SmtResult, SmtError> {
        if let Some(r) = self.memo.lock().unwrap().get(e) {
            return Ok(r.clone());
        }
        let r = self.solve_uncached(e)?;
        self.memo.lock().unwrap().insert(e.clone(), r.clone());
        Ok(r)
    }
}
