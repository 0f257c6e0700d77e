// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

pub mod audit;
pub mod cfg_oracle;
pub mod nibble;
pub mod programs;

use std::path::PathBuf;

use datasym::smt::SolverCommand;

/// The solver under test; `DATASYM_SOLVER` overrides `z3 -in`.
pub fn solver() -> SolverCommand {
    std::env::var("DATASYM_SOLVER")
        .ok()
        .and_then(|s| SolverCommand::parse(&s))
        .unwrap_or_else(SolverCommand::z3)
}

/// A second, independent solver: cvc5 through its Python bindings.
pub fn second_solver() -> SolverCommand {
    let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scripts/cvc5_smt.py");
    SolverCommand {
        program: "python3".into(),
        args: vec![script.display().to_string()],
    }
}

/// Whitespace-insensitive token list with 256-bit constants written in
/// their two-digit short form.
pub fn smt_tokens(text: &str) -> Vec<String> {
    let spaced = text.replace('(', " ( ").replace(')', " ) ");
    spaced
        .split_whitespace()
        .map(|t| match t.strip_prefix("#x") {
            Some(h) if h.len() == 64 && h[..62].bytes().all(|b| b == b'0') => format!("#{}", &h[62..]),
            _ => t.to_string(),
        })
        .collect()
}
