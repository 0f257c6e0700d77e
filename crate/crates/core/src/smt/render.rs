// SPDX-License-Identifier: Apache-2.0

//! Expression to SMT-LIB2 translation.

use std::collections::{BTreeMap, BTreeSet};

use ethnum::U256;

use super::magic::MagicPool;
use super::SmtError;
use crate::expr::ops::{mask, Op};
use crate::expr::{eval::check_width, Expr};

/// A rendered query together with what produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmtQuery {
    pub constraint: Expr,
    pub bound_vars: Vec<String>,
    pub lets: Vec<(String, Expr)>,
    pub logic: String,
    pub width: u32,
    /// Declared variables that are neither let-bound nor bound; these are
    /// the ones a model reports.
    pub free_vars: Vec<String>,
    pub text: String,
}

pub fn render_const(v: U256, width: u32) -> String {
    let v = v & mask(width);
    if width.is_multiple_of(4) {
        format!("#x{:0w$x}", v, w = (width / 4) as usize)
    } else {
        format!("#b{:0w$b}", v, w = width as usize)
    }
}

fn is_simple_symbol(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with(|c: char| c.is_ascii_digit())
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c))
}

/// A variable name as an SMT-LIB symbol, quoted when needed.
pub fn symbol(s: &str) -> String {
    if is_simple_symbol(s) {
        s.to_string()
    } else {
        format!("|{}|", s.replace('|', ""))
    }
}

fn boolean(test: String, width: u32) -> String {
    format!(
        "(ite {test} {} {})",
        render_const(U256::ONE, width),
        render_const(U256::ZERO, width)
    )
}

/// Templates for operators without a direct SMT-LIB counterpart.
pub fn inline_operator(op: &str, l: &str, r: &str) -> Result<String, SmtError> {
    inline_operator_width(op, l, r, 256)
}

pub fn inline_operator_width(op: &str, l: &str, r: &str, width: u32) -> Result<String, SmtError> {
    let o = Op::from_name(op).ok_or_else(|| crate::expr::ExprError::UnknownOperator(op.to_string()))?;
    let zero = render_const(U256::ZERO, width);
    Ok(match o {
        Op::IsZero => boolean(format!("(= {l} {zero})"), width),
        Op::Eq => boolean(format!("(= {l} {r})"), width),
        Op::Lt => boolean(format!("(bvult {l} {r})"), width),
        Op::Gt => boolean(format!("(bvugt {l} {r})"), width),
        Op::Slt => boolean(format!("(bvslt {l} {r})"), width),
        Op::Div => format!("(ite (= {r} {zero}) {zero} (bvudiv {l} {r}))"),
        Op::Mod => format!("(ite (= {r} {zero}) {zero} (bvurem {l} {r}))"),
        _ => return Err(SmtError::NoTemplate(op.to_string())),
    })
}

fn direct_name(op: Op) -> Option<&'static str> {
    Some(match op {
        Op::Add => "bvadd",
        Op::Sub => "bvsub",
        Op::Mul => "bvmul",
        Op::And => "bvand",
        Op::Or => "bvor",
        Op::Xor => "bvxor",
        Op::Not => "bvnot",
        Op::Shl => "bvshl",
        Op::Shr => "bvlshr",
        _ => return None,
    })
}

struct Renderer {
    width: u32,
    exp_lets: usize,
}

impl Renderer {
    fn expr(&mut self, e: &Expr) -> Result<String, SmtError> {
        if e.is_leaf() {
            return Ok(match e.const_value() {
                Some(v) => render_const(v, self.width),
                None if e.is_const() => return Err(crate::expr::ExprError::BadConstant(e.base.clone()).into()),
                None => symbol(&e.base),
            });
        }
        let op = e
            .op()
            .ok_or_else(|| crate::expr::ExprError::UnknownOperator(e.base.clone()))?;
        let kids: Vec<&Expr> = e.children().collect();
        let want = if op.is_unary() { 1 } else { 2 };
        if kids.len() != want {
            return Err(crate::expr::ExprError::Malformed(format!("`{}` with {} operands", e.base, kids.len())).into());
        }
        if op == Op::Exp {
            return self.exp(kids[0], kids[1]);
        }
        let l = self.expr(kids[0])?;
        let r = if want == 2 { self.expr(kids[1])? } else { String::new() };
        if let Some(f) = direct_name(op) {
            return Ok(if want == 1 {
                format!("({f} {l})")
            } else {
                format!("({f} {l} {r})")
            });
        }
        if matches!(op, Op::Div | Op::Mod) && kids[1].const_value().is_some_and(|c| c & mask(self.width) != 0) {
            let f = if op == Op::Div { "bvudiv" } else { "bvurem" };
            return Ok(format!("({f} {l} {r})"));
        }
        inline_operator_width(&e.base, &l, &r, self.width)
    }

    fn exp(&mut self, base: &Expr, exponent: &Expr) -> Result<String, SmtError> {
        let w = self.width;
        if let Some(k) = exponent.const_value() {
            let k = k & mask(w);
            let b = self.expr(base)?;
            if k == 0 {
                return Ok(render_const(U256::ONE, w));
            }
            // Square-and-multiply over let-bound powers.
            let id = self.exp_lets;
            self.exp_lets += 1;
            let bits = 256 - k.leading_zeros();
            let mut lets = Vec::new();
            lets.push(format!("(let (($exp{id}_0 {b}))"));
            for i in 1..bits {
                lets.push(format!(
                    "(let (($exp{id}_{i} (bvmul $exp{id}_{p} $exp{id}_{p})))",
                    p = i - 1
                ));
            }
            let factors: Vec<String> = (0..bits)
                .filter(|i| (k >> i) & 1 == 1)
                .map(|i| format!("$exp{id}_{i}"))
                .collect();
            let body = factors[1..]
                .iter()
                .fold(factors[0].clone(), |acc, f| format!("(bvmul {acc} {f})"));
            return Ok(format!("{} {body}{}", lets.join(" "), ")".repeat(lets.len())));
        }
        let x = self.expr(exponent)?;
        match base.const_value().map(|b| b & mask(w)) {
            Some(b) if b == 2 => Ok(format!("(bvshl {} {x})", render_const(U256::ONE, w))),
            Some(b) if b == 1 => Ok(render_const(U256::ONE, w)),
            Some(b) if b == 0 => Ok(inline_operator_width("ISZERO", &x, "", w)?),
            _ => Err(SmtError::UnsupportedExp(base.to_string())),
        }
    }
}

/// Renders one expression as an SMT-LIB term at `width` bits.
pub fn render_expr(e: &Expr, width: u32) -> Result<String, SmtError> {
    check_width(width)?;
    Renderer { width, exp_lets: 0 }.expr(e)
}

/// Orders lets so every binding only mentions earlier ones. Among ready
/// bindings the one listed last goes first, so cons lists built by
/// prepending read outermost-first.
fn order_lets(lets: &[(String, Expr)]) -> Result<Vec<usize>, SmtError> {
    let names: BTreeMap<&str, usize> = lets.iter().enumerate().map(|(i, (v, _))| (v.as_str(), i)).collect();
    if names.len() != lets.len() {
        let mut seen = BTreeSet::new();
        for (v, _) in lets {
            if !seen.insert(v) {
                return Err(SmtError::DuplicateLet(v.clone()));
            }
        }
    }
    let deps: Vec<BTreeSet<usize>> = lets
        .iter()
        .map(|(_, e)| e.vars().iter().filter_map(|v| names.get(v.as_str()).copied()).collect())
        .collect();
    let mut done = vec![false; lets.len()];
    let mut order = Vec::new();
    while order.len() < lets.len() {
        let next = (0..lets.len())
            .rev()
            .find(|&i| !done[i] && deps[i].iter().all(|d| done[*d]));
        match next {
            Some(i) => {
                done[i] = true;
                order.push(i);
            }
            None => {
                let stuck = (0..lets.len()).find(|&i| !done[i]).unwrap();
                return Err(SmtError::CyclicLets(lets[stuck].0.clone()));
            }
        }
    }
    Ok(order)
}

/// [`print_to_smt_width`] at 256 bits.
pub fn print_to_smt(
    constraint: &Expr,
    bound_vars: &[String],
    lets: &[(String, Expr)],
    pool: &MagicPool,
) -> Result<SmtQuery, SmtError> {
    print_to_smt_width(constraint, bound_vars, lets, pool, 256)
}

/// Renders `constraint = 1` under `lets`, pinning each bound variable to a
/// magic constant.
pub fn print_to_smt_width(
    constraint: &Expr,
    bound_vars: &[String],
    lets: &[(String, Expr)],
    pool: &MagicPool,
    width: u32,
) -> Result<SmtQuery, SmtError> {
    check_width(width)?;
    constraint.validate()?;
    for (_, e) in lets {
        e.validate()?;
    }
    let order = order_lets(lets)?;
    let let_names: BTreeSet<&str> = lets.iter().map(|(v, _)| v.as_str()).collect();
    let bound: BTreeSet<&str> = bound_vars.iter().map(String::as_str).collect();
    let mut declared: BTreeSet<String> = constraint.vars();
    for (_, e) in lets {
        declared.extend(e.vars());
    }
    declared.retain(|v| !let_names.contains(v.as_str()));
    declared.extend(bound_vars.iter().cloned());
    let free_vars: Vec<String> = declared
        .iter()
        .filter(|v| !bound.contains(v.as_str()))
        .cloned()
        .collect();

    let sort = format!("(_ BitVec {width})");
    let mut text = String::new();
    for v in &declared {
        text.push_str(&format!("(declare-const {} {sort})\n", symbol(v)));
    }
    let mut r = Renderer { width, exp_lets: 0 };
    let mut body = format!("(= {} {})", render_const(U256::ONE, width), r.expr(constraint)?);
    for &i in order.iter().rev() {
        let (v, e) = &lets[i];
        body = format!("(let (({} {})) {body})", symbol(v), r.expr(e)?);
    }
    text.push_str(&format!("(assert {body})\n"));
    for (i, b) in bound_vars.iter().enumerate() {
        let m = pool.get(i, width)?;
        text.push_str(&format!("(assert (= {} {}))\n", symbol(b), render_const(m, width)));
    }
    Ok(SmtQuery {
        constraint: constraint.clone(),
        bound_vars: bound_vars.to_vec(),
        lets: lets.to_vec(),
        logic: "QF_BV".into(),
        width,
        free_vars,
        text,
    })
}
