// SPDX-License-Identifier: Apache-2.0

//! `datasym run`: evaluate a bundled analysis or a custom Datalog program
//! over a directory of facts.

mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use datasym::analyses::{dispatch::DEFAULT_SWITCH_SIZE, DEFAULT_BOUND};
use datasym::native::DEFAULT_MAX_SIZE;

use run::{Preset, RunConfig};

#[derive(Parser)]
#[command(
    name = "datasym",
    version,
    about = "Datalog program analysis with SMT and native solver backends"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a program over a facts directory and write its outputs.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Analysis {
    PointsTo,
    Symexec,
    Custom,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Bundled analysis, or `custom` together with --program.
    #[arg(long, value_enum)]
    analysis: Analysis,
    /// Datalog program for `--analysis custom`.
    #[arg(long)]
    program: Option<PathBuf>,
    /// Directory holding one `<Relation>.facts` file per input relation.
    #[arg(long)]
    facts: PathBuf,
    /// Directory receiving `<Relation>.csv` and `diagnostics.csv`.
    #[arg(long)]
    out: PathBuf,
    /// SMT-LIB2 solver reading queries on stdin.
    #[arg(long, default_value = "z3 -in")]
    solver_cmd: String,
    /// Path conditions with at most this many nodes go to the native solver.
    #[arg(long, default_value_t = DEFAULT_SWITCH_SIZE)]
    switch_size: usize,
    /// Maximum path-condition length for symbolic execution.
    #[arg(long, default_value_t = DEFAULT_BOUND)]
    bound: u64,
    /// Node bound for expressions in the native solver's universe.
    #[arg(long, default_value_t = DEFAULT_MAX_SIZE)]
    native_max_size: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Persistent query cache file, created if missing.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    magic_seed: u64,
    /// Per-query solver timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    /// Send queries the native solver cannot decide to the SMT solver.
    #[arg(long)]
    escalate: bool,
}

impl From<RunArgs> for RunConfig {
    fn from(a: RunArgs) -> Self {
        RunConfig {
            preset: match a.analysis {
                Analysis::PointsTo => Preset::PointsTo,
                Analysis::Symexec => Preset::Symexec,
                Analysis::Custom => Preset::Custom,
            },
            program: a.program,
            facts: a.facts,
            out: a.out,
            solver: a.solver_cmd,
            switch_size: a.switch_size,
            bound: a.bound,
            native_max_size: a.native_max_size,
            jobs: a.jobs,
            cache: a.cache,
            magic_seed: a.magic_seed,
            timeout: a.timeout,
            escalate: a.escalate,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Command::Run(args) = cli.command;
    let config = RunConfig::from(args);
    match run::run(&config) {
        Ok(summary) => {
            eprintln!(
                "wrote {} relation(s) to {} ({} solver invocations)",
                summary.outputs.len(),
                config.out.display(),
                summary.solver_invocations
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("datasym: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
