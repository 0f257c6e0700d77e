// SPDX-License-Identifier: Apache-2.0

//! Concrete evaluation under modular `2^width` semantics.

use std::collections::BTreeMap;

use ethnum::U256;

use super::ops::{mask, Op};
use super::{parse_const, Expr, ExprError};

pub type Env = BTreeMap<String, U256>;

pub fn check_width(width: u32) -> Result<(), ExprError> {
    if (1..=256).contains(&width) {
        Ok(())
    } else {
        Err(ExprError::BadWidth(width))
    }
}

/// Evaluates `e` with variables taken from `env`. Constants are truncated to
/// the width; comparisons yield 0 or 1.
pub fn eval_concrete(e: &Expr, env: &Env, width: u32) -> Result<U256, ExprError> {
    check_width(width)?;
    eval_with(e, &|v| env.get(v).copied(), width)
}

pub fn eval_with(e: &Expr, lookup: &dyn Fn(&str) -> Option<U256>, width: u32) -> Result<U256, ExprError> {
    if e.is_leaf() {
        if e.is_const() {
            return Ok(parse_const(&e.base)? & mask(width));
        }
        return lookup(&e.base)
            .map(|v| v & mask(width))
            .ok_or_else(|| ExprError::UnboundVariable(e.base.clone()));
    }
    let op = Op::from_name(&e.base).ok_or_else(|| ExprError::UnknownOperator(e.base.clone()))?;
    let l = e
        .left
        .as_deref()
        .ok_or_else(|| ExprError::Malformed(format!("`{}` without operands", e.base)))?;
    let a = eval_with(l, lookup, width)?;
    let b = if op.is_unary() {
        U256::ZERO
    } else {
        let r = e
            .right
            .as_deref()
            .ok_or_else(|| ExprError::Malformed(format!("`{}` needs two operands", e.base)))?;
        eval_with(r, lookup, width)?
    };
    Ok(op.apply(a, b, width))
}
