// SPDX-License-Identifier: Apache-2.0

//! The native solver: `solver.dl` run by the engine over a bounded universe
//! of expressions, with operator tables generated for the bit width.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use ethnum::U256;
use thiserror::Error;

use crate::engine::{parse_program_with, Datum, Engine, EngineError, FactDb, Interner, Program, Value};
use crate::expr::ops::{self, mask, Op, Side, Special, SpecialResult};
use crate::expr::{const_name, Expr, ExprError};

/// The solver component source.
pub const SOLVER_DL: &str = include_str!("solver.dl");

pub const DEFAULT_MAX_SIZE: usize = 10;

#[derive(Debug, Error)]
pub enum NativeError {
    #[error("seed of size {size} exceeds the native bound {bound}")]
    SeedTooLarge { size: usize, bound: usize },
    #[error("expression {0} is not in the universe")]
    NotInUniverse(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NativeConfig {
    pub width: u32,
    pub max_size: usize,
}

impl Default for NativeConfig {
    fn default() -> Self {
        NativeConfig {
            width: 256,
            max_size: DEFAULT_MAX_SIZE,
        }
    }
}

/// What one solver run starts from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NativeInput {
    pub seeds: Vec<Expr>,
    pub free: BTreeSet<String>,
    pub bound: BTreeSet<String>,
    pub constants: BTreeSet<U256>,
}

impl NativeInput {
    /// Seeds with every variable free and every constant initial.
    pub fn from_seeds(seeds: Vec<Expr>) -> Self {
        let mut input = NativeInput::default();
        for s in &seeds {
            input.free.extend(s.vars());
            for e in s.subexpressions() {
                if let Some(c) = e.const_value() {
                    input.constants.insert(c);
                }
            }
        }
        input.seeds = seeds;
        input
    }
}

const HOST: &str = r#"
.include "solver.dl"
.decl Seed(e: Expr)
.decl Free(v: symbol)
.decl Bound(v: symbol)
.decl Const(c: symbol)
.input Seed, Free, Bound, Const
.init s = NativeSolver
s.SeedExpression(e) :- Seed(e).
s.IsFreeVar(v) :- Free(v).
s.IsBoundVar(v) :- Bound(v).
s.InitialConstant(c) :- Const(c).
"#;

/// Parses `src` with `solver.dl` available to `.include`.
pub fn parse_with_solver(src: &str) -> Result<Program, EngineError> {
    parse_program_with(src, &mut |name: &str| {
        (name == "solver.dl").then(|| SOLVER_DL.to_string())
    })
}

fn leaf(v: U256, width: u32) -> Datum {
    Expr::constant(v & mask(width)).to_datum()
}

fn sym(s: &str) -> Datum {
    Datum::sym(s)
}

/// Operator-table facts for `width`, keyed by relation.
pub fn operator_facts(width: u32, max_size: usize) -> BTreeMap<&'static str, Vec<Vec<Datum>>> {
    let mut f: BTreeMap<&'static str, Vec<Vec<Datum>>> = BTreeMap::new();
    let mut add = |rel: &'static str, row: Vec<Datum>| f.entry(rel).or_default().push(row);
    let special = |s: Special| leaf(s.value(width), width);
    add("SolverBound", vec![Datum::Number(max_size as u64)]);
    add("SolverConstant", vec![sym("zero"), leaf(U256::ZERO, width)]);
    add("SolverConstant", vec![sym("one"), leaf(U256::ONE, width)]);
    add("SolverConstant", vec![sym("max"), leaf(mask(width), width)]);
    add(
        "SolverConstant",
        vec![sym("signmin"), leaf(U256::ONE << (width - 1), width)],
    );
    for op in ops::ALL_OPS {
        let n = sym(op.name());
        if op.associative() {
            add("OpAssociative", vec![n.clone()]);
        }
        if op.commutative() {
            add("OpCommutative", vec![n.clone()]);
        }
        if op.idempotent() {
            add("OpIdempotent", vec![n.clone()]);
        }
        if let Some(s) = op.canceling() {
            add("OpCanceling", vec![n.clone(), special(s)]);
        }
        if op.is_boolean() {
            add("OpBoolean", vec![n.clone()]);
        }
        if matches!(op, Op::Eq | Op::Lt | Op::Gt | Op::Slt) {
            add("OpComparison", vec![n.clone()]);
        }
    }
    for sv in ops::special_values() {
        let (n, k) = (sym(sv.op.name()), special(sv.value));
        match (sv.side, sv.result) {
            (Side::Left, SpecialResult::Other) => add("OpLeftIdentity", vec![n, k]),
            (Side::Right, SpecialResult::Other) => add("OpRightIdentity", vec![n, k]),
            (Side::Left, SpecialResult::Const(r)) => add("OpLeftAbsorb", vec![n, k, special(r)]),
            (Side::Right, SpecialResult::Const(r)) => add("OpRightAbsorb", vec![n, k, special(r)]),
        }
    }
    for (outer, inner, side) in ops::distributivity() {
        let side = if side == Side::Left { "left" } else { "right" };
        add("OpDistributes", vec![sym(outer.name()), sym(inner.name()), sym(side)]);
    }
    for (op, inv) in ops::RIGHT_INVERSES {
        add("OpRightInverse", vec![sym(op.name()), sym(inv.name())]);
    }
    for (op, inv) in ops::LEFT_INVERSES {
        add("OpLeftInverse", vec![sym(op.name()), sym(inv.name())]);
    }
    for (p, q) in ops::MUTUALLY_EXCLUSIVE {
        add("OpMutuallyExclusive", vec![sym(p.name()), sym(q.name())]);
        add("OpMutuallyExclusive", vec![sym(q.name()), sym(p.name())]);
    }
    for (p, q) in ops::CONVERSES {
        add("OpConverse", vec![sym(p.name()), sym(q.name())]);
    }
    for (op, inv) in ops::LINEAR_SOLUTIONS {
        add("OpLinearSolution", vec![sym(op.name()), sym(inv.name())]);
    }
    for (op, inv, swap) in ops::RIGHT_LINEAR_SOLUTIONS {
        add(
            "OpRightLinearSolution",
            vec![sym(op.name()), sym(inv.name()), Datum::Number(swap as u64)],
        );
    }
    for k in 0..width {
        add(
            "PowerOfTwo",
            vec![leaf(U256::ONE << k, width), leaf(U256::from(k), width)],
        );
    }
    for (op, d) in [("ADD", 0u8), ("ADD", 1), ("SUB", 1)] {
        add("WitnessShape", vec![sym(op), leaf(U256::from(d), width)]);
    }
    f
}

/// A prepared solver: parsed program, registered functors and operator
/// tables. Every run works on a private copy, so `&self` suffices.
#[derive(Clone)]
pub struct NativeSolver {
    pub config: NativeConfig,
    template: Engine,
    program: Arc<Program>,
    base: FactDb,
}

impl NativeSolver {
    pub fn new(config: NativeConfig) -> Result<Self, NativeError> {
        crate::expr::eval::check_width(config.width)?;
        let mut template = Engine::new();
        crate::expr::functors::register(&mut template, config.width)?;
        let program = parse_with_solver(HOST)?;
        let mut base = FactDb::for_program(&program);
        for (rel, rows) in operator_facts(config.width, config.max_size) {
            template.insert_rows(&mut base, rel, &rows)?;
        }
        Ok(NativeSolver {
            config,
            template,
            program: Arc::new(program),
            base,
        })
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    /// Builds the universe and runs every rule to fixpoint.
    pub fn run(&self, input: &NativeInput) -> Result<NativeRun, NativeError> {
        let mut engine = self.template.clone();
        let mut db = self.base.clone();
        let mut seeds = Vec::new();
        for s in &input.seeds {
            s.validate()?;
            let size = s.tree_size();
            if size > self.config.max_size {
                return Err(NativeError::SeedTooLarge {
                    size,
                    bound: self.config.max_size,
                });
            }
            seeds.push(vec![s.canonical().to_datum()]);
        }
        engine.insert_rows(&mut db, "Seed", &seeds)?;
        let names = |set: &BTreeSet<String>| set.iter().map(|v| vec![Datum::sym(v.as_str())]).collect::<Vec<_>>();
        engine.insert_rows(&mut db, "Free", &names(&input.free))?;
        engine.insert_rows(&mut db, "Bound", &names(&input.bound))?;
        let consts: Vec<Vec<Datum>> = input
            .constants
            .iter()
            .map(|c| vec![Datum::sym(const_name(*c & mask(self.config.width)))])
            .collect();
        engine.insert_rows(&mut db, "Const", &consts)?;
        let db = engine.evaluate(&self.program, db)?;
        Ok(NativeRun {
            engine,
            db,
            width: self.config.width,
        })
    }

    /// The normal form of `e` within the universe seeded by `e` alone.
    pub fn normalize(&self, e: &Expr) -> Result<Expr, NativeError> {
        let run = self.run(&NativeInput::from_seeds(vec![e.clone()]))?;
        run.normal_form(&e.canonical())
    }

    /// Validated values for the free variables of a single equation.
    pub fn solve_linear(&self, equation: &Expr, free: &BTreeSet<String>) -> Result<Vec<(String, Expr)>, NativeError> {
        let mut input = NativeInput::from_seeds(vec![equation.clone()]);
        input.free = free.clone();
        let run = self.run(&input)?;
        run.solutions(&equation.canonical())
    }
}

/// The relations computed by one run.
pub struct NativeRun {
    engine: Engine,
    db: FactDb,
    pub width: u32,
}

impl std::fmt::Debug for NativeRun {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NativeRun")
            .field("width", &self.width)
            .field("db", &self.db)
            .finish()
    }
}

fn expr_col(d: &Datum) -> Result<Expr, NativeError> {
    Ok(Expr::from_datum(d)?)
}

impl NativeRun {
    fn rows(&self, rel: &str) -> Result<BTreeSet<Vec<Datum>>, NativeError> {
        Ok(self.engine.rows(&self.db, &format!("s.{rel}"))?)
    }

    /// Per-stratum statistics of the run.
    pub fn stats(&self) -> &[crate::engine::StratumStats] {
        self.engine.last_stats()
    }

    pub fn relation_len(&self, rel: &str) -> usize {
        self.db.len(&format!("s.{rel}"))
    }

    pub fn universe(&self) -> Result<BTreeSet<Expr>, NativeError> {
        self.rows("IsExpression")?.iter().map(|r| expr_col(&r[0])).collect()
    }

    pub fn equals(&self) -> Result<BTreeSet<(Expr, Expr)>, NativeError> {
        self.rows("Equals")?
            .iter()
            .map(|r| Ok((expr_col(&r[0])?, expr_col(&r[1])?)))
            .collect()
    }

    pub fn base_equals(&self) -> Result<BTreeSet<(Expr, Expr)>, NativeError> {
        self.rows("BaseEquals")?
            .iter()
            .map(|r| Ok((expr_col(&r[0])?, expr_col(&r[1])?)))
            .collect()
    }

    pub fn conditional_equals(&self) -> Result<BTreeSet<(Expr, Expr, Expr)>, NativeError> {
        self.rows("ConditionalEquals")?
            .iter()
            .map(|r| Ok((expr_col(&r[0])?, expr_col(&r[1])?, expr_col(&r[2])?)))
            .collect()
    }

    pub fn normal_forms(&self) -> Result<BTreeMap<Expr, Expr>, NativeError> {
        self.rows("NormalForm")?
            .iter()
            .map(|r| Ok((expr_col(&r[0])?, expr_col(&r[1])?)))
            .collect()
    }

    fn lookup(&self, e: &Expr) -> Option<Value> {
        lookup_value(&self.engine.tables, e)
    }

    fn pairs_for(&self, rel: &str, key: Value) -> Result<Vec<(String, Expr)>, NativeError> {
        let mut out = Vec::new();
        for t in self.db.tuples(&format!("s.{rel}")) {
            if t[0] == key {
                let var = self.engine.resolve_symbol(t[1])?.to_string();
                out.push((var, Expr::from_value(&self.engine.tables, t[2])?));
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn normal_form(&self, e: &Expr) -> Result<Expr, NativeError> {
        let missing = || NativeError::NotInUniverse(e.to_string());
        let v = self.lookup(e).ok_or_else(missing)?;
        let rel = self.db.relation("s.NormalForm").ok_or_else(missing)?;
        let hit = rel.iter().find(|t| t[0] == v).ok_or_else(missing)?;
        Ok(Expr::from_value(&self.engine.tables, hit[1])?)
    }

    /// Candidates for `seed` that make it fold to one.
    pub fn solutions(&self, seed: &Expr) -> Result<Vec<(String, Expr)>, NativeError> {
        match self.lookup(seed) {
            Some(v) => self.pairs_for("Solution", v),
            None => Ok(Vec::new()),
        }
    }

    /// All candidate values proposed for `seed`, validated or not.
    pub fn candidates(&self, seed: &Expr) -> Result<Vec<(String, Expr)>, NativeError> {
        match self.lookup(seed) {
            Some(v) => self.pairs_for("Candidate", v),
            None => Ok(Vec::new()),
        }
    }

    pub fn values_for_free_variables(&self) -> Result<BTreeSet<(Expr, Expr)>, NativeError> {
        self.rows("ValueForFreeVariable")?
            .iter()
            .map(|r| Ok((expr_col(&r[0])?, expr_col(&r[1])?)))
            .collect()
    }
}

/// The interned value of `e` if every part of it is already interned.
fn lookup_value(t: &crate::engine::Tables, e: &Expr) -> Option<Value> {
    let base = Value::Symbol(t.symbols.lookup(&e.base)?);
    let l = match &e.left {
        Some(c) => lookup_value(t, c)?,
        None => Value::Nil,
    };
    let r = match &e.right {
        Some(c) => lookup_value(t, c)?,
        None => Value::Nil,
    };
    t.records.lookup(&[base, l, r]).map(Value::Record)
}

/// Registers `@normalize(e)`, declared non-monotonic: its result is the
/// minimum of a class, which can shrink as the class grows.
pub fn register_normalize(engine: &mut Engine, solver: Arc<NativeSolver>) -> Result<(), EngineError> {
    engine.register_functor(
        "normalize",
        1,
        false,
        Arc::new(move |args: &[Value], ctx: &mut dyn Interner| {
            let e = Expr::from_value(ctx, args[0])?;
            let n = solver.normalize(&e).map_err(|err| EngineError::Functor {
                name: "normalize".into(),
                message: err.to_string(),
            })?;
            Ok(n.to_value(ctx))
        }),
    )
}
