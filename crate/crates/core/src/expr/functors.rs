// SPDX-License-Identifier: Apache-2.0

//! Expression functors: `@fresh`, `@flatten`, `@tree_size`, `@subst`,
//! `@fold`, `@expr_lt` and `@is_const`.
//!
//! These work directly on interned records, so the hot ones (`@expr_lt`,
//! `@fold`) avoid building owned trees.

use std::cmp::Ordering;
use std::sync::Arc;

use ethnum::U256;

use super::ops::{mask, Op};
use super::{const_name, parse_const, ExprError};
use crate::engine::{Engine, EngineError, Interner, Value};

type Res<T> = Result<T, EngineError>;

fn fields(ctx: &dyn Interner, v: Value) -> Res<[Value; 3]> {
    match ctx.unpack(v)? {
        [b, l, r] => Ok([*b, *l, *r]),
        other => Err(EngineError::TypeMismatch {
            expected: "expression record",
            found: format!("record of {} fields", other.len()),
        }),
    }
}

fn leaf(ctx: &mut dyn Interner, base: &str) -> Value {
    let b = ctx.intern(base);
    ctx.pack(&[b, Value::Nil, Value::Nil])
}

pub(crate) fn size_of(ctx: &dyn Interner, v: Value) -> Res<u64> {
    if v == Value::Nil {
        return Ok(0);
    }
    let [_, l, r] = fields(ctx, v)?;
    Ok(1 + size_of(ctx, l)? + size_of(ctx, r)?)
}

fn rank(ctx: &dyn Interner, v: Value) -> Res<(u8, Option<U256>, Value, Value, Value)> {
    let [b, l, r] = fields(ctx, v)?;
    if l == Value::Nil && r == Value::Nil {
        let s = ctx.resolve(b)?;
        if s.starts_with("0x") {
            return Ok((0, parse_const(s).ok(), b, l, r));
        }
        return Ok((1, None, b, l, r));
    }
    Ok((2, None, b, l, r))
}

fn preorder_cmp(ctx: &dyn Interner, a: Value, b: Value) -> Res<Ordering> {
    if a == b {
        return Ok(Ordering::Equal);
    }
    match (a, b) {
        (Value::Nil, Value::Nil) => return Ok(Ordering::Equal),
        (Value::Nil, _) => return Ok(Ordering::Less),
        (_, Value::Nil) => return Ok(Ordering::Greater),
        _ => {}
    }
    let (ra, va, ba, la, rra) = rank(ctx, a)?;
    let (rb, vb, bb, lb, rrb) = rank(ctx, b)?;
    let mut ord = ra.cmp(&rb).then(va.cmp(&vb));
    if ord == Ordering::Equal && ba != bb {
        let (sa, sb) = (ctx.resolve(ba)?, ctx.resolve(bb)?);
        ord = sa.len().cmp(&sb.len()).then_with(|| sa.as_bytes().cmp(sb.as_bytes()));
    }
    if ord != Ordering::Equal {
        return Ok(ord);
    }
    let o = preorder_cmp(ctx, la, lb)?;
    if o != Ordering::Equal {
        return Ok(o);
    }
    preorder_cmp(ctx, rra, rrb)
}

/// [`super::expr_cmp`] on interned records.
pub(crate) fn cmp_values(ctx: &dyn Interner, a: Value, b: Value) -> Res<Ordering> {
    if a == b {
        return Ok(Ordering::Equal);
    }
    let o = size_of(ctx, a)?.cmp(&size_of(ctx, b)?);
    if o != Ordering::Equal {
        return Ok(o);
    }
    preorder_cmp(ctx, a, b)
}

/// Evaluates a variable-free expression; `None` if it mentions a variable.
pub(crate) fn fold_value(ctx: &dyn Interner, v: Value, width: u32) -> Res<Option<U256>> {
    let [b, l, r] = fields(ctx, v)?;
    let base = ctx.resolve(b)?;
    if l == Value::Nil && r == Value::Nil {
        if base.starts_with("0x") {
            let c = parse_const(base).map_err(|e| EngineError::Functor {
                name: "fold".into(),
                message: e.to_string(),
            })?;
            return Ok(Some(c & mask(width)));
        }
        return Ok(None);
    }
    let op = Op::from_name(base).ok_or_else(|| EngineError::Functor {
        name: "fold".into(),
        message: ExprError::UnknownOperator(base.to_string()).to_string(),
    })?;
    let Some(a) = fold_value(ctx, l, width)? else {
        return Ok(None);
    };
    let bv = if op.is_unary() {
        U256::ZERO
    } else {
        match fold_value(ctx, r, width)? {
            Some(x) => x,
            None => return Ok(None),
        }
    };
    Ok(Some(op.apply(a, bv, width)))
}

fn subst_value(ctx: &mut dyn Interner, e: Value, var: Value, with: Value) -> Res<Value> {
    if e == Value::Nil {
        return Ok(e);
    }
    let [b, l, r] = fields(ctx, e)?;
    if l == Value::Nil && r == Value::Nil {
        return Ok(if b == var { with } else { e });
    }
    let l2 = subst_value(ctx, l, var, with)?;
    let r2 = subst_value(ctx, r, var, with)?;
    Ok(ctx.pack(&[b, l2, r2]))
}

fn list_values(ctx: &dyn Interner, mut v: Value) -> Res<Vec<Value>> {
    let mut out = Vec::new();
    while v != Value::Nil {
        match ctx.unpack(v)? {
            [h, t] => {
                out.push(*h);
                v = *t;
            }
            _ => return Err(EngineError::MalformedList),
        }
    }
    Ok(out)
}

fn fresh_context(ctx: &dyn Interner, v: Value) -> Res<String> {
    match v {
        Value::Symbol(_) => Ok(ctx.resolve(v)?.to_string()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Nil => Ok(String::new()),
        Value::Record(_) => {
            let parts = ctx
                .unpack(v)?
                .iter()
                .map(|p| fresh_context(ctx, *p))
                .collect::<Res<Vec<_>>>()?;
            Ok(parts.join("/"))
        }
    }
}

fn bool_value(b: bool) -> Value {
    Value::Number(b as u64)
}

/// Registers the expression functors; `@fold` evaluates at `width` bits.
pub fn register(engine: &mut Engine, width: u32) -> Result<(), EngineError> {
    engine.register_functor(
        "fresh",
        1,
        true,
        Arc::new(|args: &[Value], ctx: &mut dyn Interner| {
            let name = format!("{}{}", crate::engine::facts::FRESH_PREFIX, fresh_context(ctx, args[0])?);
            Ok(leaf(ctx, &name))
        }),
    )?;
    engine.register_functor(
        "flatten",
        2,
        true,
        Arc::new(|args: &[Value], ctx: &mut dyn Interner| {
            let items = list_values(ctx, args[1])?;
            let Some((last, init)) = items.split_last() else {
                return Err(EngineError::Functor {
                    name: "flatten".into(),
                    message: ExprError::EmptyList.to_string(),
                });
            };
            let mut acc = *last;
            for e in init.iter().rev() {
                acc = ctx.pack(&[args[0], *e, acc]);
            }
            Ok(acc)
        }),
    )?;
    engine.register_functor(
        "tree_size",
        1,
        true,
        Arc::new(|args: &[Value], ctx: &mut dyn Interner| size_of(ctx, args[0]).map(Value::Number)),
    )?;
    engine.register_functor(
        "subst",
        3,
        true,
        Arc::new(|args: &[Value], ctx: &mut dyn Interner| subst_value(ctx, args[0], args[1], args[2])),
    )?;
    engine.register_functor(
        "expr_lt",
        2,
        true,
        Arc::new(|args: &[Value], ctx: &mut dyn Interner| {
            Ok(bool_value(cmp_values(ctx, args[0], args[1])? == Ordering::Less))
        }),
    )?;
    engine.register_functor(
        "is_const",
        1,
        true,
        Arc::new(|args: &[Value], ctx: &mut dyn Interner| {
            let [b, l, r] = fields(ctx, args[0])?;
            Ok(bool_value(
                l == Value::Nil && r == Value::Nil && ctx.resolve(b)?.starts_with("0x"),
            ))
        }),
    )?;
    engine.register_functor(
        "fold",
        1,
        true,
        Arc::new(move |args: &[Value], ctx: &mut dyn Interner| {
            Ok(match fold_value(ctx, args[0], width)? {
                Some(c) => leaf(ctx, &const_name(c)),
                None => args[0],
            })
        }),
    )?;
    Ok(())
}
