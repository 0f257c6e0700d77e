// SPDX-License-Identifier: Apache-2.0

//! Binary expression trees over fixed-width bitvector values.
//!
//! An expression is a `[base, left, right]` record. Leaves are constants
//! (`"0x..."`) or variable names; unary operators use the left child only.

pub mod eval;
pub mod functors;
pub mod ops;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use ethnum::U256;
use thiserror::Error;

use crate::engine::facts::FRESH_PREFIX;
use crate::engine::{Datum, EngineError, Interner, Value};

pub use eval::{eval_concrete, Env};
pub use ops::Op;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("cannot flatten an empty list")]
    EmptyList,
    #[error("malformed expression: {0}")]
    Malformed(String),
    #[error("invalid constant `{0}`")]
    BadConstant(String),
    #[error("unsupported width {0}")]
    BadWidth(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr {
    pub base: String,
    pub left: Option<Box<Expr>>,
    pub right: Option<Box<Expr>>,
}

/// Minimal lowercase hex rendering, `0x0` for zero.
pub fn const_name(v: U256) -> String {
    format!("0x{v:x}")
}

pub fn parse_const(s: &str) -> Result<U256, ExprError> {
    let digits = s
        .strip_prefix("0x")
        .ok_or_else(|| ExprError::BadConstant(s.to_string()))?;
    if digits.is_empty() || digits.len() > 64 {
        return Err(ExprError::BadConstant(s.to_string()));
    }
    U256::from_str_radix(digits, 16).map_err(|_| ExprError::BadConstant(s.to_string()))
}

pub fn is_const_name(s: &str) -> bool {
    s.starts_with("0x")
}

impl Expr {
    pub fn leaf(base: impl Into<String>) -> Expr {
        Expr {
            base: base.into(),
            left: None,
            right: None,
        }
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::leaf(name)
    }

    pub fn constant(v: U256) -> Expr {
        Expr::leaf(const_name(v))
    }

    pub fn num(v: u64) -> Expr {
        Expr::constant(U256::from(v))
    }

    pub fn unary(op: Op, a: Expr) -> Expr {
        Expr {
            base: op.name().into(),
            left: Some(Box::new(a)),
            right: None,
        }
    }

    pub fn binary(op: Op, a: Expr, b: Expr) -> Expr {
        Expr {
            base: op.name().into(),
            left: Some(Box::new(a)),
            right: Some(Box::new(b)),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.left.is_none() && self.right.is_none()
    }

    pub fn is_const(&self) -> bool {
        self.is_leaf() && is_const_name(&self.base)
    }

    pub fn is_var(&self) -> bool {
        self.is_leaf() && !is_const_name(&self.base)
    }

    pub fn const_value(&self) -> Option<U256> {
        if self.is_const() {
            parse_const(&self.base).ok()
        } else {
            None
        }
    }

    pub fn op(&self) -> Option<Op> {
        if self.is_leaf() {
            None
        } else {
            Op::from_name(&self.base)
        }
    }

    pub fn children(&self) -> impl Iterator<Item = &Expr> {
        self.left.iter().chain(self.right.iter()).map(|b| &**b)
    }

    pub fn tree_size(&self) -> usize {
        1 + self.children().map(Expr::tree_size).sum::<usize>()
    }

    /// All distinct subtrees, including `self`.
    pub fn subexpressions(&self) -> BTreeSet<Expr> {
        let mut out = BTreeSet::new();
        fn go(e: &Expr, out: &mut BTreeSet<Expr>) {
            out.insert(e.clone());
            e.children().for_each(|c| go(c, out));
        }
        go(self, &mut out);
        out
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        fn go(e: &Expr, out: &mut BTreeSet<String>) {
            if e.is_var() {
                out.insert(e.base.clone());
            }
            e.children().for_each(|c| go(c, out));
        }
        go(self, &mut out);
        out
    }

    /// Checks that operators are known and arities match.
    pub fn validate(&self) -> Result<(), ExprError> {
        if self.is_leaf() {
            if self.is_const() {
                parse_const(&self.base)?;
            }
            return Ok(());
        }
        let op = Op::from_name(&self.base).ok_or_else(|| ExprError::UnknownOperator(self.base.clone()))?;
        match (op.is_unary(), &self.left, &self.right) {
            (true, Some(_), None) | (false, Some(_), Some(_)) => {}
            _ => {
                return Err(ExprError::Malformed(format!(
                    "`{}` applied to the wrong number of operands",
                    self.base
                )))
            }
        }
        self.children().try_for_each(Expr::validate)
    }

    /// Replaces every occurrence of variable `var` by `with`.
    pub fn subst(&self, var: &str, with: &Expr) -> Expr {
        if self.is_leaf() {
            return if self.base == var { with.clone() } else { self.clone() };
        }
        Expr {
            base: self.base.clone(),
            left: self.left.as_ref().map(|l| Box::new(l.subst(var, with))),
            right: self.right.as_ref().map(|r| Box::new(r.subst(var, with))),
        }
    }

    /// Constants rewritten to their minimal spelling.
    pub fn canonical(&self) -> Expr {
        if let Some(v) = self.const_value() {
            return Expr::constant(v);
        }
        Expr {
            base: self.base.clone(),
            left: self.left.as_ref().map(|l| Box::new(l.canonical())),
            right: self.right.as_ref().map(|r| Box::new(r.canonical())),
        }
    }

    pub fn to_datum(&self) -> Datum {
        let child = |c: &Option<Box<Expr>>| c.as_ref().map_or(Datum::Nil, |e| e.to_datum());
        Datum::Record(vec![
            Datum::Symbol(self.base.clone()),
            child(&self.left),
            child(&self.right),
        ])
    }

    pub fn from_datum(d: &Datum) -> Result<Expr, ExprError> {
        let Datum::Record(f) = d else {
            return Err(ExprError::Malformed(format!(
                "expected an expression record, found {d}"
            )));
        };
        let [base, l, r] = &f[..] else {
            return Err(ExprError::Malformed(format!("expected 3 fields, found {d}")));
        };
        let Datum::Symbol(base) = base else {
            return Err(ExprError::Malformed(format!("expected a symbol base, found {base}")));
        };
        let child = |c: &Datum| -> Result<Option<Box<Expr>>, ExprError> {
            match c {
                Datum::Nil => Ok(None),
                other => Ok(Some(Box::new(Expr::from_datum(other)?))),
            }
        };
        Ok(Expr {
            base: base.clone(),
            left: child(l)?,
            right: child(r)?,
        })
    }

    pub fn to_value(&self, ctx: &mut dyn Interner) -> Value {
        let base = ctx.intern(&self.base);
        let l = self.left.as_ref().map_or(Value::Nil, |e| e.to_value(ctx));
        let r = self.right.as_ref().map_or(Value::Nil, |e| e.to_value(ctx));
        ctx.pack(&[base, l, r])
    }

    pub fn from_value(ctx: &dyn Interner, v: Value) -> Result<Expr, EngineError> {
        let f = ctx.unpack(v)?;
        let [base, l, r] = f else {
            return Err(EngineError::TypeMismatch {
                expected: "expression record",
                found: format!("record of {} fields", f.len()),
            });
        };
        let (base, l, r) = (*base, *l, *r);
        let child = |c: Value| -> Result<Option<Box<Expr>>, EngineError> {
            match c {
                Value::Nil => Ok(None),
                other => Ok(Some(Box::new(Expr::from_value(ctx, other)?))),
            }
        };
        Ok(Expr {
            base: ctx.resolve(base)?.to_string(),
            left: child(l)?,
            right: child(r)?,
        })
    }

    /// Parses `(OP a b)` / `(OP a)` / leaf syntax.
    pub fn parse(s: &str) -> Result<Expr, ExprError> {
        let toks = sexp_tokens(s);
        let mut pos = 0;
        let e = parse_sexp(&toks, &mut pos)?;
        if pos != toks.len() {
            return Err(ExprError::Malformed("trailing input".into()));
        }
        e.validate()?;
        Ok(e)
    }
}

fn sexp_tokens(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            if !c.is_whitespace() {
                out.push(c.to_string());
            }
        } else {
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_sexp(toks: &[String], pos: &mut usize) -> Result<Expr, ExprError> {
    let tok = toks
        .get(*pos)
        .ok_or_else(|| ExprError::Malformed("unexpected end of input".into()))?;
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let op = toks
                .get(*pos)
                .ok_or_else(|| ExprError::Malformed("missing operator".into()))?
                .clone();
            *pos += 1;
            let mut args = Vec::new();
            while toks.get(*pos).map(String::as_str) != Some(")") {
                if *pos >= toks.len() {
                    return Err(ExprError::Malformed("unbalanced parentheses".into()));
                }
                args.push(parse_sexp(toks, pos)?);
            }
            *pos += 1;
            let canonical = Op::from_name(&op).ok_or_else(|| ExprError::UnknownOperator(op.clone()))?;
            let mut args = args.into_iter();
            Ok(Expr {
                base: canonical.name().to_string(),
                left: args.next().map(Box::new),
                right: args.next().map(Box::new),
            })
            .and_then(|e| {
                if args.next().is_some() {
                    Err(ExprError::Malformed(format!("too many operands for `{op}`")))
                } else {
                    Ok(e)
                }
            })
        }
        ")" => Err(ExprError::Malformed("unexpected `)`".into())),
        leaf => Ok(Expr::leaf(leaf)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_leaf() {
            return f.write_str(&self.base);
        }
        write!(f, "({}", self.base)?;
        for c in self.children() {
            write!(f, " {c}")?;
        }
        f.write_str(")")
    }
}

/// Right-nested conjunction of a non-empty cons list of expressions.
pub fn flatten(conj: &str, items: &[Expr]) -> Result<Expr, ExprError> {
    let (last, init) = items.split_last().ok_or(ExprError::EmptyList)?;
    Ok(init.iter().rev().fold(last.clone(), |acc, e| Expr {
        base: conj.to_string(),
        left: Some(Box::new(e.clone())),
        right: Some(Box::new(acc)),
    }))
}

/// Deterministic fresh variable for a context.
pub fn fresh(context: &str) -> Expr {
    Expr::var(format!("{FRESH_PREFIX}{context}"))
}

fn token_rank(e: &Expr) -> (u8, Option<U256>) {
    if e.is_leaf() {
        match e.const_value() {
            Some(v) => (0, Some(v)),
            None => (1, None),
        }
    } else {
        (2, None)
    }
}

fn preorder_cmp(a: &Expr, b: &Expr) -> Ordering {
    let (ra, va) = token_rank(a);
    let (rb, vb) = token_rank(b);
    ra.cmp(&rb)
        .then(va.cmp(&vb))
        .then_with(|| a.base.len().cmp(&b.base.len()))
        .then_with(|| a.base.as_bytes().cmp(b.base.as_bytes()))
        .then_with(|| match (&a.left, &b.left) {
            (Some(x), Some(y)) => preorder_cmp(x, y),
            (x, y) => x.is_some().cmp(&y.is_some()),
        })
        .then_with(|| match (&a.right, &b.right) {
            (Some(x), Some(y)) => preorder_cmp(x, y),
            (x, y) => x.is_some().cmp(&y.is_some()),
        })
}

/// The total order used to pick normal forms: smaller trees first, then a
/// preorder token comparison where constants precede variables, which
/// precede operators; constants compare by value.
pub fn expr_cmp(a: &Expr, b: &Expr) -> Ordering {
    a.tree_size().cmp(&b.tree_size()).then_with(|| preorder_cmp(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var("x")
    }

    #[test]
    fn sizes_and_subexpressions() {
        assert_eq!(x().tree_size(), 1);
        assert_eq!(x().subexpressions().len(), 1);
        let add = Expr::binary(Op::Add, x(), Expr::var("y"));
        assert_eq!(add.tree_size(), 3);
        let e = Expr::binary(Op::Eq, add, Expr::var("z"));
        assert_eq!(e.subexpressions().len(), 5);
    }

    #[test]
    fn flatten_nests_to_the_right() {
        let (a, b, c) = (Expr::var("a"), Expr::var("b"), Expr::var("c"));
        assert_eq!(flatten("AND", std::slice::from_ref(&a)).unwrap(), a);
        assert_eq!(
            flatten("AND", &[a.clone(), b.clone()]).unwrap(),
            Expr::binary(Op::And, a.clone(), b.clone())
        );
        assert_eq!(
            flatten("AND", &[a.clone(), b.clone(), c.clone()]).unwrap(),
            Expr::binary(Op::And, a, Expr::binary(Op::And, b, c))
        );
        assert_eq!(flatten("AND", &[]), Err(ExprError::EmptyList));
    }

    #[test]
    fn fresh_is_deterministic_and_prefixed() {
        assert_eq!(fresh("f/arg0"), fresh("f/arg0"));
        assert_ne!(fresh("f/arg0"), fresh("f/arg1"));
        assert!(fresh("f/arg0").base.starts_with("$fresh_"));
    }

    #[test]
    fn parse_and_print() {
        let e = Expr::parse("(EQ (ADD x 0x5) 0xc)").unwrap();
        assert_eq!(e.to_string(), "(EQ (ADD x 0x5) 0xc)");
        assert_eq!(Expr::parse("(isZero x)").unwrap().base, "ISZERO");
        assert!(Expr::parse("(FOO x y)").is_err());
        assert!(Expr::parse("(ADD x)").is_err());
        assert_eq!(
            e.to_datum().to_string(),
            r#"["EQ",["ADD",["x",nil,nil],["0x5",nil,nil]],["0xc",nil,nil]]"#
        );
        assert_eq!(Expr::from_datum(&e.to_datum()).unwrap(), e);
    }

    #[test]
    fn ordering_prefers_small_then_constants() {
        let c = Expr::num(5);
        let v = x();
        assert_eq!(expr_cmp(&c, &v), Ordering::Less);
        assert_eq!(expr_cmp(&Expr::num(2), &Expr::num(10)), Ordering::Less);
        let big = Expr::binary(Op::Add, x(), Expr::num(0));
        assert_eq!(expr_cmp(&v, &big), Ordering::Less);
        assert_eq!(Expr::leaf("0x05").canonical(), Expr::num(5));
    }
}
