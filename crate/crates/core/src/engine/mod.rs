// SPDX-License-Identifier: Apache-2.0

//! Datalog evaluation with stratified negation, records, interned symbols
//! and host functors.

pub mod ast;
pub mod error;
mod eval;
pub mod facts;
pub mod functor;
pub mod parser;
mod plan;
pub mod relation;
pub mod stratify;
pub mod value;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

pub use ast::Program;
pub use error::{EngineError, Result, Span};
pub use eval::StratumStats;
pub use functor::{Functor, Registry};
pub use parser::{parse_program, parse_program_with};
pub use relation::{FactDb, Relation};
pub use stratify::{Stratum, StratumPlan};
pub use value::{Datum, Interner, Tables, Value};

/// Default per-relation tuple cap.
pub const DEFAULT_TUPLE_LIMIT: usize = 50_000_000;

#[derive(Clone, Debug)]
pub struct EngineConfig {
    /// Worker threads used inside a round; results do not depend on it.
    pub jobs: usize,
    pub tuple_limit: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            jobs: 1,
            tuple_limit: DEFAULT_TUPLE_LIMIT,
        }
    }
}

/// One engine instance: interning tables, registered functors and settings.
#[derive(Clone)]
pub struct Engine {
    pub tables: Tables,
    functors: Registry,
    pub config: EngineConfig,
    stats: Vec<StratumStats>,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new()
    }
}

impl Engine {
    /// An engine with the builtin `@list_length` functor.
    pub fn new() -> Self {
        let mut functors = Registry::default();
        functor::register_builtins(&mut functors);
        Engine {
            tables: Tables::default(),
            functors,
            config: EngineConfig::default(),
            stats: Vec::new(),
        }
    }

    pub fn with_config(config: EngineConfig) -> Self {
        Engine { config, ..Self::new() }
    }

    pub fn register_functor(&mut self, name: &str, arity: usize, monotonic: bool, f: Arc<dyn Functor>) -> Result<()> {
        self.functors.register(name, arity, monotonic, f)
    }

    pub fn functors(&self) -> &Registry {
        &self.functors
    }

    pub fn intern_symbol(&mut self, s: &str) -> Value {
        self.tables.intern(s)
    }

    pub fn resolve_symbol(&self, v: Value) -> Result<&str> {
        self.tables.resolve(v)
    }

    pub fn pack_record(&mut self, fields: &[Value]) -> Value {
        self.tables.pack(fields)
    }

    pub fn unpack_record(&self, v: Value) -> Result<&[Value]> {
        self.tables.unpack(v)
    }

    pub fn list_length(&self, v: Value) -> Result<u64> {
        functor::list_length(&self.tables, v)
    }

    pub fn stratify(&self, program: &Program) -> Result<StratumPlan> {
        stratify::stratify(program, &self.functors)
    }

    /// Semi-naive least fixpoint of `program` over `edb`.
    pub fn evaluate(&mut self, program: &Program, edb: FactDb) -> Result<FactDb> {
        self.run(program, edb, false)
    }

    /// Naive least fixpoint; used as a reference for [`Engine::evaluate`].
    pub fn naive_evaluate(&mut self, program: &Program, edb: FactDb) -> Result<FactDb> {
        self.run(program, edb, true)
    }

    fn run(&mut self, program: &Program, edb: FactDb, naive: bool) -> Result<FactDb> {
        let cfg = eval::EvalConfig {
            jobs: self.config.jobs.max(1),
            tuple_limit: self.config.tuple_limit,
        };
        let (db, stats) = eval::evaluate(&mut self.tables, &self.functors, &cfg, program, edb, naive)?;
        self.stats = stats;
        Ok(db)
    }

    /// Per-stratum statistics of the last evaluation.
    pub fn last_stats(&self) -> &[StratumStats] {
        &self.stats
    }

    pub fn load_facts(&mut self, dir: &Path, program: &Program) -> Result<FactDb> {
        facts::load_facts(&mut self.tables, dir, program)
    }

    pub fn dump_relations(&self, db: &FactDb, program: &Program, dir: &Path) -> Result<()> {
        facts::dump_relations(&self.tables, db, program, dir)
    }

    /// Inserts structural rows into `relation`.
    pub fn insert_rows(&mut self, db: &mut FactDb, relation: &str, rows: &[Vec<Datum>]) -> Result<()> {
        for row in rows {
            let vals: Vec<Value> = row.iter().map(|d| self.tables.value_of(d)).collect();
            db.insert(relation, vals)?;
        }
        Ok(())
    }

    /// The structural contents of `relation`.
    pub fn rows(&self, db: &FactDb, relation: &str) -> Result<BTreeSet<Vec<Datum>>> {
        db.tuples(relation)
            .map(|t| t.iter().map(|v| self.tables.datum(*v)).collect())
            .collect()
    }

    /// Relation contents in the sorted, tab-separated output format.
    pub fn render_relation(&self, db: &FactDb, relation: &str) -> Result<String> {
        facts::render_relation(&self.tables, db, relation)
    }
}
