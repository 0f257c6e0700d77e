// SPDX-License-Identifier: Apache-2.0

//! Browser bindings: expression normalization, linear equation solving and
//! the points-to analysis over facts typed into the page.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use datasym::analyses::{points_to_program, run_points_to};
use datasym::engine::facts::parse_facts;
use datasym::engine::{Engine, FactDb};
use datasym::expr::Expr;
use datasym::native::{NativeConfig, NativeSolver, DEFAULT_MAX_SIZE};
use wasm_bindgen::prelude::*;

thread_local! {
    static SOLVER: RefCell<Option<NativeSolver>> = const { RefCell::new(None) };
}

fn with_solver<T>(f: impl FnOnce(&NativeSolver) -> Result<T, String>) -> Result<T, String> {
    SOLVER.with(|cell| {
        let mut slot = cell.borrow_mut();
        if slot.is_none() {
            let s = NativeSolver::new(NativeConfig {
                width: 256,
                max_size: DEFAULT_MAX_SIZE,
            })
            .map_err(|e| e.to_string())?;
            *slot = Some(s);
        }
        f(slot.as_ref().unwrap())
    })
}

fn parse(text: &str) -> Result<Expr, String> {
    Expr::parse(text.trim()).map_err(|e| e.to_string())
}

/// Normal form of a prefix expression such as `(ADD (SUB y y) x)`.
pub fn normalize_text(expr: &str) -> Result<String, String> {
    let e = parse(expr)?;
    with_solver(|s| s.normalize(&e).map(|n| n.to_string()).map_err(|e| e.to_string()))
}

/// Candidate values for the free variables of an equation, one per line.
pub fn solve_text(equation: &str) -> Result<String, String> {
    let e = parse(equation)?;
    let free: BTreeSet<String> = e.vars();
    let sols = with_solver(|s| s.solve_linear(&e, &free).map_err(|e| e.to_string()))?;
    if sols.is_empty() {
        return Ok("no solution found within the size bound".into());
    }
    let mut out = String::new();
    for (var, value) in sols {
        writeln!(out, "{var} = {value}").unwrap();
    }
    Ok(out)
}

/// Runs the points-to analysis over whitespace-separated fact lines of the
/// form `Relation col1 col2 ...` and renders every output relation.
pub fn points_to_text(facts: &str) -> Result<String, String> {
    let program = points_to_program().map_err(|e| e.to_string())?;
    let mut grouped: BTreeMap<&str, String> = BTreeMap::new();
    for (n, line) in facts.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let mut cols = line.split_whitespace();
        let rel = cols.next().unwrap();
        if !program.is_edb(rel) {
            return Err(format!("line {}: `{rel}` is not an input relation", n + 1));
        }
        let row = grouped.entry(rel).or_default();
        row.push_str(&cols.collect::<Vec<_>>().join("\t"));
        row.push('\n');
    }
    let mut engine = Engine::new();
    let mut edb = FactDb::for_program(&program);
    for (rel, text) in grouped {
        let types = program.column_types(rel).unwrap();
        let rows = parse_facts(&text, &types, rel, Path::new(rel)).map_err(|e| e.to_string())?;
        engine.insert_rows(&mut edb, rel, &rows).map_err(|e| e.to_string())?;
    }
    let db = run_points_to(&mut engine, &program, edb).map_err(|e| e.to_string())?;
    let mut out = String::new();
    for rel in &program.outputs {
        writeln!(out, "{rel}").unwrap();
        for line in engine.render_relation(&db, rel).map_err(|e| e.to_string())?.lines() {
            writeln!(out, "  {}", line.replace('\t', "  ")).unwrap();
        }
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn normalize(expr: &str) -> Result<String, JsError> {
    normalize_text(expr).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn solve(equation: &str) -> Result<String, JsError> {
    solve_text(equation).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn points_to(facts: &str) -> Result<String, JsError> {
    points_to_text(facts).map_err(|e| JsError::new(&e))
}
