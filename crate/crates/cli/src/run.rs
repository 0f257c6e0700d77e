// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use datasym::analyses::{self, AnalysisError, DispatchConfig, DispatchStats, Dispatcher, Symexec};
use datasym::engine::{parse_program_with, Engine, EngineConfig, EngineError, Program};
use datasym::native::{self, NativeConfig, NativeError, NativeSolver};
use datasym::smt::{register_functors, Bridge, BridgeConfig, MagicPool, QueryCache, SmtError, SolverCommand};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    PointsTo,
    Symexec,
    Custom,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub preset: Preset,
    pub program: Option<PathBuf>,
    pub facts: PathBuf,
    pub out: PathBuf,
    pub solver: String,
    pub switch_size: usize,
    pub bound: u64,
    pub native_max_size: usize,
    pub jobs: usize,
    pub cache: Option<PathBuf>,
    pub magic_seed: u64,
    pub timeout: f64,
    pub escalate: bool,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Analysis(AnalysisError),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Analysis(_) => 1,
            RunError::Usage(_) | RunError::Io { .. } => 2,
            RunError::Solver(_) => 3,
        }
    }
}

fn solver_failure(e: &SmtError) -> bool {
    matches!(
        e,
        SmtError::Spawn { .. } | SmtError::SolverCrash(_) | SmtError::SolverError(_) | SmtError::BadResponse(_)
    )
}

impl From<EngineError> for RunError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Io { path, source } => RunError::Io { path, source },
            EngineError::Functor { ref name, ref message }
                if name.starts_with("smt_") && message.starts_with("solver") =>
            {
                RunError::Solver(e.to_string())
            }
            other => RunError::Analysis(AnalysisError::Engine(other)),
        }
    }
}

impl From<AnalysisError> for RunError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Engine(e) => e.into(),
            AnalysisError::Smt(ref s) if solver_failure(s) => RunError::Solver(e.to_string()),
            AnalysisError::Smt(SmtError::Cache { path, message }) => RunError::Io {
                path: path.into(),
                source: std::io::Error::other(message),
            },
            other => RunError::Analysis(other),
        }
    }
}

impl From<SmtError> for RunError {
    fn from(e: SmtError) -> Self {
        AnalysisError::Smt(e).into()
    }
}

impl From<NativeError> for RunError {
    fn from(e: NativeError) -> Self {
        AnalysisError::Native(e).into()
    }
}

/// What a run produced besides the relation files.
#[derive(Debug, Default)]
pub struct Summary {
    pub solver_invocations: u64,
    pub outputs: Vec<String>,
}

impl RunConfig {
    fn validate(&self) -> Result<(), RunError> {
        match (self.preset, &self.program) {
            (Preset::Custom, None) => return Err(RunError::Usage("--analysis custom needs --program".into())),
            (Preset::PointsTo | Preset::Symexec, Some(_)) => {
                return Err(RunError::Usage(
                    "--program only applies to --analysis custom; presets use their bundled program".into(),
                ))
            }
            _ => {}
        }
        if self.jobs == 0 {
            return Err(RunError::Usage("--jobs must be at least 1".into()));
        }
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return Err(RunError::Usage("--timeout must be a positive number of seconds".into()));
        }
        if self.bound == 0 {
            return Err(RunError::Usage("--bound must be at least 1".into()));
        }
        if !self.facts.is_dir() {
            return Err(RunError::Io {
                path: self.facts.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "facts directory not found"),
            });
        }
        Ok(())
    }

    fn bridge(&self) -> Result<Bridge, RunError> {
        let command = SolverCommand::parse(&self.solver).ok_or_else(|| RunError::Usage("empty --solver-cmd".into()))?;
        let cache = match &self.cache {
            Some(p) => QueryCache::persistent(p)?,
            None => QueryCache::in_memory(),
        };
        Ok(Bridge::new(
            BridgeConfig {
                command,
                timeout: Duration::from_secs_f64(self.timeout),
                pool: MagicPool::new(self.magic_seed),
                width: 256,
            },
            cache,
        ))
    }

    fn dispatch(&self) -> DispatchConfig {
        DispatchConfig {
            switch_size: self.switch_size,
            escalate: self.escalate,
        }
    }
}

fn read_program(path: &Path) -> Result<Program, RunError> {
    let src = fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut resolve = |name: &str| match fs::read_to_string(dir.join(name)) {
        Ok(text) => Some(text),
        Err(_) => (name == "solver.dl").then(|| native::SOLVER_DL.to_string()),
    };
    parse_program_with(&src, &mut resolve).map_err(|e| match e {
        EngineError::Io { .. } => e.into(),
        other => RunError::Analysis(AnalysisError::Engine(other)),
    })
}

fn diagnostics(engine: &Engine, bridge: &Bridge, dispatch: Option<DispatchStats>) -> String {
    let s = bridge.stats();
    let mut out = String::from("scope,metric,value\n");
    for (k, v) in [
        ("queries", s.queries),
        ("cache_hits", s.cache_hits),
        ("solver_invocations", s.solver_invocations),
        ("timeouts", s.timeouts),
        ("solver_failures", s.crashes),
    ] {
        writeln!(out, "smt,{k},{v}").unwrap();
    }
    if let Some(d) = dispatch {
        for (k, v) in [
            ("native_queries", d.native_queries),
            ("native_sat", d.native_sat),
            ("native_unsat", d.native_unsat),
            ("native_unknown", d.native_unknown),
            ("smt_queries", d.smt_queries),
            ("escalations", d.escalations),
        ] {
            writeln!(out, "dispatch,{k},{v}").unwrap();
        }
    }
    for (kind, detail) in bridge.diagnostics() {
        writeln!(out, "smt,{kind},{}", detail.replace([',', '\n'], " ")).unwrap();
    }
    for (i, st) in engine.last_stats().iter().enumerate() {
        let scope = format!("stratum{i}");
        writeln!(out, "{scope},relations,{}", st.relations.join(" ")).unwrap();
        writeln!(out, "{scope},rounds,{}", st.rounds).unwrap();
        writeln!(out, "{scope},tuples,{}", st.tuples).unwrap();
        writeln!(out, "{scope},millis,{:.3}", st.millis).unwrap();
    }
    out
}

/// Loads facts, evaluates, and writes every output relation plus
/// `diagnostics.csv` into the output directory.
pub fn run(config: &RunConfig) -> Result<Summary, RunError> {
    config.validate()?;
    let mut engine = Engine::with_config(EngineConfig {
        jobs: config.jobs,
        ..EngineConfig::default()
    });
    let bridge = Arc::new(config.bridge()?);
    let mut dispatch = None;
    let (program, db) = match config.preset {
        Preset::PointsTo => {
            let program = analyses::points_to_program()?;
            let edb = engine.load_facts(&config.facts, &program)?;
            let db = analyses::run_points_to(&mut engine, &program, edb)?;
            (program, db)
        }
        Preset::Symexec => {
            let sx = Symexec::new(bridge.clone(), config.native_max_size, config.dispatch(), config.bound)?;
            sx.prepare(&mut engine)?;
            let edb = engine.load_facts(&config.facts, &sx.program)?;
            let db = sx.run(&mut engine, edb)?;
            dispatch = Some(sx.dispatcher.stats());
            (sx.program, db)
        }
        Preset::Custom => {
            let program = read_program(config.program.as_ref().unwrap())?;
            let solver = Arc::new(NativeSolver::new(NativeConfig {
                width: bridge.config.width,
                max_size: config.native_max_size,
            })?);
            let dispatcher = Arc::new(Dispatcher::new(config.dispatch(), solver.clone(), bridge.clone()));
            datasym::expr::functors::register(&mut engine, bridge.config.width)?;
            register_functors(&mut engine, bridge.clone(), dispatcher.clone())?;
            native::register_normalize(&mut engine, solver)?;
            let edb = engine.load_facts(&config.facts, &program)?;
            let db = engine.evaluate(&program, edb)?;
            dispatch = Some(dispatcher.stats());
            (program, db)
        }
    };
    engine.dump_relations(&db, &program, &config.out)?;
    let diag = diagnostics(&engine, &bridge, dispatch);
    let path = config.out.join("diagnostics.csv");
    fs::write(&path, diag).map_err(|source| RunError::Io { path, source })?;
    let stats = bridge.stats();
    let summary = Summary {
        solver_invocations: stats.solver_invocations,
        outputs: program.outputs.clone(),
    };
    if stats.crashes > 0 {
        return Err(RunError::Solver(format!(
            "{} solver call(s) failed and were treated as unknown; see diagnostics.csv",
            stats.crashes
        )));
    }
    Ok(summary)
}
