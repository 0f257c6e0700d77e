// SPDX-License-Identifier: Apache-2.0

//! Checks the one-sided guarantee of pinning a bound variable to a magic
//! constant: if the pinned query is unsat, the universally quantified
//! formula is unsat too. Ground truth comes from enumeration.

use ethnum::U256;

use super::bridge::Bridge;
use super::render::print_to_smt_width;
use super::{SmtError, Status};
use crate::expr::eval::{eval_with, Env};
use crate::expr::ops::mask;
use crate::expr::Expr;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForallReport {
    /// Solver verdict for the pinned query.
    pub star: Status,
    /// Enumerated truth of the pinned query.
    pub star_enumerated: bool,
    /// Enumerated truth of `exists free. forall bound. c = 1`.
    pub forall: bool,
    /// Pinned query unsat while the quantified formula holds.
    pub violation: bool,
}

fn assignments(vars: &[String], width: u32) -> impl Iterator<Item = Env> + '_ {
    let n = 1u64 << width;
    let total = n.pow(vars.len() as u32);
    (0..total).map(move |mut k| {
        let mut env = Env::new();
        for v in vars {
            env.insert(v.clone(), U256::from(k % n));
            k /= n;
        }
        env
    })
}

fn holds(c: &Expr, env: &Env, width: u32) -> bool {
    eval_with(c, &|v| env.get(v).copied(), width).is_ok_and(|v| v == U256::ONE)
}

/// Requires a bridge configured at `width` (at most 12 bits) and at most
/// two free variables besides `bound`.
pub fn check_forall_star_soundness(
    bridge: &Bridge,
    constraint: &Expr,
    bound: &str,
    width: u32,
) -> Result<ForallReport, SmtError> {
    assert!(width <= 12, "exhaustive check needs a small width");
    let free: Vec<String> = constraint.vars().into_iter().filter(|v| v != bound).collect();
    assert!(free.len() <= 2, "at most two free variables");
    let q = print_to_smt_width(constraint, &[bound.to_string()], &[], &bridge.config.pool, width)?;
    let star = bridge.solve_query(&q)?.status;
    let magic = bridge.config.pool.get(0, width)? & mask(width);
    let star_enumerated = assignments(&free, width).any(|mut env| {
        env.insert(bound.to_string(), magic);
        holds(constraint, &env, width)
    });
    let forall = assignments(&free, width).any(|env| {
        (0..1u64 << width).all(|b| {
            let mut env = env.clone();
            env.insert(bound.to_string(), U256::from(b));
            holds(constraint, &env, width)
        })
    });
    Ok(ForallReport {
        star,
        star_enumerated,
        forall,
        violation: star == Status::Unsat && forall,
    })
}
