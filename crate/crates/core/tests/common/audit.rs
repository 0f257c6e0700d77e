// SPDX-License-Identifier: Apache-2.0

//! Width-4 soundness audit of a native solver run against the nibble
//! evaluator.

use std::collections::BTreeMap;

use datasym::expr::ops::ALL_OPS;
use datasym::expr::{Expr, Op};
use datasym::native::NativeRun;
use rand::Rng;

use super::nibble::{self, Tables};

#[derive(Debug, Default)]
pub struct Findings {
    pub equals_checked: usize,
    pub unsound_equals: Vec<(Expr, Expr)>,
    pub unsound_normal_forms: Vec<(Expr, Expr)>,
    pub unsound_conditionals: Vec<(Expr, Expr, Expr)>,
    pub unsound_solutions: Vec<(Expr, String, Expr)>,
    pub solutions_checked: usize,
}

impl Findings {
    pub fn assert_clean(&self) {
        assert!(
            self.unsound_equals.is_empty(),
            "{:?}",
            &self.unsound_equals[..self.unsound_equals.len().min(5)]
        );
        assert!(self.unsound_normal_forms.is_empty(), "{:?}", self.unsound_normal_forms);
        assert!(self.unsound_conditionals.is_empty(), "{:?}", self.unsound_conditionals);
        assert!(self.unsound_solutions.is_empty(), "{:?}", self.unsound_solutions);
    }
}

/// Checks one width-4 run against the nibble oracle.
pub fn audit(run: &NativeRun, seeds: &[Expr], t: &mut Tables, f: &mut Findings) {
    for (a, b) in run.equals().unwrap() {
        f.equals_checked += 1;
        if !t.same(&a, &b) {
            f.unsound_equals.push((a, b));
        }
    }
    let nf = run.normal_forms().unwrap();
    let mut reps: BTreeMap<Expr, usize> = BTreeMap::new();
    for (a, n) in &nf {
        *reps.entry(a.clone()).or_default() += 1;
        if !t.same(a, n) || n.tree_size() > a.tree_size() || nf.get(n) != Some(n) {
            f.unsound_normal_forms.push((a.clone(), n.clone()));
        }
    }
    assert!(reps.values().all(|c| *c == 1), "normal form is a function");
    for (e, r, guard) in run.conditional_equals().unwrap() {
        let (te, tr, tg) = (t.get(&e).to_vec(), t.get(&r).to_vec(), t.get(&guard).to_vec());
        if (0..nibble::ENVS).any(|i| tg[i] == 1 && te[i] != tr[i]) {
            f.unsound_conditionals.push((e, r, guard));
        }
    }
    for s in seeds {
        for (x, v) in run.solutions(&s.canonical()).unwrap() {
            f.solutions_checked += 1;
            if !t.get(&s.subst(&x, &v)).iter().all(|r| *r == 1) {
                f.unsound_solutions.push((s.clone(), x, v));
            }
        }
    }
}

pub const LEAF_CONSTS: [u64; 6] = [0, 1, 2, 3, 8, 0xf];

pub fn random_expr(rng: &mut impl Rng, budget: usize, vars: usize) -> Expr {
    if budget < 3 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.5) {
            Expr::var(nibble::VARS[rng.gen_range(0..vars)])
        } else {
            Expr::num(LEAF_CONSTS[rng.gen_range(0..LEAF_CONSTS.len())])
        };
    }
    let op = ALL_OPS[rng.gen_range(0..ALL_OPS.len())];
    if op.is_unary() {
        return Expr::unary(op, random_expr(rng, budget - 1, vars));
    }
    let left = rng.gen_range(1..budget - 1);
    Expr::binary(
        op,
        random_expr(rng, left, vars),
        random_expr(rng, budget - 1 - left, vars),
    )
}

/// Seeds that exercise each axiom family at least once.
pub fn axiom_seeds() -> Vec<Expr> {
    [
        "(ADD (ADD x y) z)",
        "(ADD x (ADD y z))",
        "(MUL x 0x1)",
        "(MUL 0x0 x)",
        "(ADD x 0x0)",
        "(SUB x x)",
        "(XOR x x)",
        "(AND x x)",
        "(OR x x)",
        "(EQ x x)",
        "(LT x x)",
        "(MUL x (ADD y z))",
        "(MUL (SUB y z) x)",
        "(AND x (OR y z))",
        "(OR (XOR y z) x)",
        "(SHL (ADD x y) z)",
        "(SHR (AND x y) z)",
        "(SUB (ADD x y) y)",
        "(ADD (SUB x y) y)",
        "(XOR (XOR x y) y)",
        "(AND (LT x y) (GT x y))",
        "(AND (EQ x y) (LT x y))",
        "(LT x y)",
        "(GT y x)",
        "(MUL x 0x2)",
        "(DIV x 0x8)",
        "(DIV (MUL x 0x2) 0x2)",
        "(DIV (MUL x 0x4) 0x4)",
        "(SHL x 0x1)",
        "(SHR x 0x3)",
        "(ISZERO (ISZERO (EQ x y)))",
        "(NOT (NOT x))",
        "(OR x 0xf)",
        "(AND x 0x0)",
        "(EXP x 0x0)",
        "(EXP x 0x1)",
        "(MOD x 0x1)",
        "(SUB 0x0 x)",
        "(EQ (ADD x 0x5) 0xc)",
        "(EQ (SUB 0x3 x) 0x1)",
        "(EQ (XOR 0x3 x) y)",
        "(ISZERO (LT x 0x3))",
    ]
    .iter()
    .map(|s| Expr::parse(s).unwrap())
    .collect()
}

/// `op(x, r) = rhs` and `op(r, x) = rhs` for every 4-bit `r` and `rhs`.
pub fn linear_seeds(op: Op) -> Vec<Expr> {
    let mut seeds = Vec::new();
    for r in 0..16u64 {
        for rhs in 0..16u64 {
            seeds.push(Expr::binary(
                Op::Eq,
                Expr::binary(op, Expr::var("x"), Expr::num(r)),
                Expr::num(rhs),
            ));
            seeds.push(Expr::binary(
                Op::Eq,
                Expr::binary(op, Expr::num(r), Expr::var("x")),
                Expr::num(rhs),
            ));
        }
    }
    seeds
}
