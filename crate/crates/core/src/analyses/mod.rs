// SPDX-License-Identifier: Apache-2.0

//! The bundled analyses: an Andersen-style points-to analysis and a
//! symbolic execution engine whose branch queries are dispatched between
//! the native solver and an SMT process.

pub mod cfg;
pub mod dispatch;

use std::sync::Arc;

use thiserror::Error;

use crate::engine::{parse_program, Datum, Engine, EngineError, FactDb, Program};
use crate::expr::Expr;
use crate::native::{NativeConfig, NativeError, NativeSolver};
use crate::smt::{register_functors, Bridge, SmtError};

pub use cfg::{Block, Branch, Cfg, Function, Instr};
pub use dispatch::{conjuncts, DispatchConfig, DispatchStats, Dispatcher};

pub const POINTS_TO_DL: &str = include_str!("../../programs/points_to.dl");
pub const SYMEXEC_DL: &str = include_str!("../../programs/symexec.dl");

/// Default cap on path-condition length.
pub const DEFAULT_BOUND: u64 = 8;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("path-condition bound must be at least 1")]
    BadBound,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Native(#[from] NativeError),
}

pub fn points_to_program() -> Result<Program, EngineError> {
    parse_program(POINTS_TO_DL)
}

pub fn symexec_program() -> Result<Program, EngineError> {
    parse_program(SYMEXEC_DL)
}

pub fn run_points_to(engine: &mut Engine, program: &Program, edb: FactDb) -> Result<FactDb, EngineError> {
    engine.evaluate(program, edb)
}

/// Symbolic execution wired to a bridge and a dispatcher.
pub struct Symexec {
    pub program: Program,
    pub bridge: Arc<Bridge>,
    pub dispatcher: Arc<Dispatcher>,
    pub bound: u64,
}

impl Symexec {
    /// The native solver runs at the bridge's width.
    pub fn new(
        bridge: Arc<Bridge>,
        native_max_size: usize,
        dispatch: DispatchConfig,
        bound: u64,
    ) -> Result<Self, AnalysisError> {
        if bound == 0 {
            return Err(AnalysisError::BadBound);
        }
        let native = NativeSolver::new(NativeConfig {
            width: bridge.config.width,
            max_size: native_max_size,
        })?;
        let dispatcher = Arc::new(Dispatcher::new(dispatch, Arc::new(native), bridge.clone()));
        Ok(Symexec {
            program: symexec_program()?,
            bridge,
            dispatcher,
            bound,
        })
    }

    pub fn width(&self) -> u32 {
        self.bridge.config.width
    }

    /// Registers the expression and solver functors on `engine`.
    pub fn prepare(&self, engine: &mut Engine) -> Result<(), EngineError> {
        crate::expr::functors::register(engine, self.width())?;
        register_functors(engine, self.bridge.clone(), self.dispatcher.clone())
    }

    /// Rejects programs that assign one of the magic constants.
    pub fn check_magic(&self, engine: &Engine, edb: &FactDb) -> Result<(), AnalysisError> {
        let mut consts = Vec::new();
        for row in engine.rows(edb, "Assign")? {
            if let Some(c) = Expr::from_datum(&row[2]).ok().and_then(|e| e.const_value()) {
                consts.push(c);
            }
        }
        self.bridge.config.pool.check_disjoint(consts)?;
        Ok(())
    }

    /// Evaluates over `edb`, adding the `Bound` fact when absent. `engine`
    /// must have been through [`Symexec::prepare`].
    pub fn run(&self, engine: &mut Engine, mut edb: FactDb) -> Result<FactDb, AnalysisError> {
        self.check_magic(engine, &edb)?;
        if edb.len("Bound") == 0 {
            engine.insert_rows(&mut edb, "Bound", &[vec![Datum::Number(self.bound)]])?;
        }
        Ok(engine.evaluate(&self.program, edb)?)
    }

    /// Builds facts for `cfg` and evaluates them.
    pub fn run_cfg(&self, engine: &mut Engine, cfg: &Cfg) -> Result<FactDb, AnalysisError> {
        let mut edb = FactDb::for_program(&self.program);
        cfg.insert_into(engine, &mut edb, self.width())?;
        self.run(engine, edb)
    }
}

/// Points-to input with one virtual call: `main` allocates `hA` of type `T`
/// into `a` and calls `a.foo()`, which resolves to `T.foo`, whose receiver
/// `this` is copied into `b`.
pub fn virtual_call_fixture() -> cfg::Rows {
    let s = Datum::sym;
    let mut r = cfg::Rows::new();
    r.insert("EntryMethod", vec![vec![s("main")]]);
    r.insert("Alloc", vec![vec![s("a"), s("hA"), s("main")]]);
    r.insert("HeapType", vec![vec![s("hA"), s("T")]]);
    r.insert("VCall", vec![vec![s("a"), s("foo()"), s("i1"), s("main")]]);
    r.insert("MethodLookup", vec![vec![s("T"), s("foo()"), s("T.foo")]]);
    r.insert("ThisVar", vec![vec![s("T.foo"), s("this")]]);
    r.insert("Move", vec![vec![s("b"), s("this")]]);
    r
}
