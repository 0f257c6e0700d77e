// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::BTreeSet;

use datasym::engine::{Datum, Engine, EngineError, FactDb};
use datasym::expr::{Expr, Op};
use datasym::native::{parse_with_solver, NativeConfig, NativeInput, NativeSolver};
use ethnum::U256;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::audit::{audit, axiom_seeds, linear_seeds, random_expr, Findings};
use common::nibble::{self, Tables};

fn p(s: &str) -> Expr {
    Expr::parse(s).unwrap()
}

fn solver(width: u32, max_size: usize) -> NativeSolver {
    NativeSolver::new(NativeConfig { width, max_size }).unwrap()
}

#[test]
fn spec_examples() {
    let s = solver(256, 3);
    let universe = |e: &str| s.run(&NativeInput::from_seeds(vec![p(e)])).unwrap().universe().unwrap();
    assert!(universe("(ADD x 0x0)").contains(&p("x")));
    assert!(universe("(ADD 0x1 0x2)").contains(&p("0x3")));
    assert!(universe("(SUB x x)").contains(&p("0x0")));
    let s = solver(256, 10);
    assert_eq!(s.normalize(&p("(ADD x 0x0)")).unwrap(), p("x"));
    assert_eq!(s.normalize(&p("0x5")).unwrap(), p("0x5"));
    assert_eq!(s.normalize(&p("(ADD (SUB y y) x)")).unwrap(), p("x"));
    assert_eq!(s.normalize(&p("(MUL x 0x1)")).unwrap(), p("x"));
    let free: BTreeSet<String> = ["x".to_string()].into();
    for (eq, want) in [
        ("(EQ (ADD x 0x5) 0xc)", "0x7"),
        ("(EQ (OR x 0x0f) 0xff)", "0xff"),
        ("(EQ (MOD x 0x10) 0x3)", "0x13"),
    ] {
        let sols = s.solve_linear(&p(eq), &free).unwrap();
        assert!(sols.contains(&("x".to_string(), p(want))), "{eq}: {sols:?}");
    }
}

#[test]
fn rewrite_steps() {
    let s = solver(256, 10);
    let base = |e: &str| {
        s.run(&NativeInput::from_seeds(vec![p(e)]))
            .unwrap()
            .base_equals()
            .unwrap()
    };
    assert!(base("(ADD (ADD a b) c)").contains(&(p("(ADD (ADD a b) c)"), p("(ADD a (ADD b c))"))));
    assert!(base("(MUL x 0x1)").contains(&(p("(MUL x 0x1)"), p("x"))));
    // Only a guarded equality at any width: x * 2 overflows.
    let s4 = solver(4, 10);
    let run = s4
        .run(&NativeInput::from_seeds(vec![p("(DIV (MUL x 0x2) 0x2)")]))
        .unwrap();
    assert!(!run.equals().unwrap().contains(&(p("(DIV (MUL x 0x2) 0x2)"), p("x"))));
    let overflow = nibble::table(&p("(DIV (MUL x 0x2) 0x2)"));
    let ident = nibble::table(&p("x"));
    assert_ne!(overflow, ident);
}

#[test]
fn width4_soundness_on_axiom_seeds() {
    let s = solver(4, 7);
    let mut t = Tables::default();
    let mut f = Findings::default();
    for chunk in axiom_seeds().chunks(6) {
        let run = s.run(&NativeInput::from_seeds(chunk.to_vec())).unwrap();
        audit(&run, chunk, &mut t, &mut f);
    }
    f.assert_clean();
    assert!(f.equals_checked > 500, "{}", f.equals_checked);
    assert!(f.solutions_checked > 0);
}

#[test]
fn width4_soundness_on_random_seeds() {
    let s = solver(4, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut t = Tables::default();
    let mut f = Findings::default();
    for _ in 0..40 {
        let seeds: Vec<Expr> = (0..4).map(|_| random_expr(&mut rng, 7, 3)).collect();
        let run = s.run(&NativeInput::from_seeds(seeds.clone())).unwrap();
        audit(&run, &seeds, &mut t, &mut f);
    }
    f.assert_clean();
}

/// Every linear-table shape with every pair of constants.
#[test]
fn width4_linear_solutions_are_sound() {
    let s = solver(4, 7);
    let mut t = Tables::default();
    let mut f = Findings::default();
    let mut solved = 0;
    for op in [Op::Add, Op::Sub, Op::Xor, Op::Or, Op::Mod, Op::Mul] {
        let seeds = linear_seeds(op);
        for chunk in seeds.chunks(32) {
            let run = s.run(&NativeInput::from_seeds(chunk.to_vec())).unwrap();
            audit(&run, chunk, &mut t, &mut f);
            solved += chunk
                .iter()
                .filter(|e| !run.solutions(&e.canonical()).unwrap().is_empty())
                .count();
        }
    }
    f.assert_clean();
    // ADD and SUB in both positions and XOR always have a solution.
    assert!(solved >= 5 * 256, "{solved}");
}

#[test]
fn inequalities_get_boundary_witnesses() {
    let s = solver(8, 10);
    let free: BTreeSet<String> = ["x".to_string()].into();
    for e in [
        "(LT x 0x5)",
        "(GT x 0x5)",
        "(LT 0x5 x)",
        "(ISZERO (LT x 0x5))",
        "(SLT x 0x5)",
    ] {
        let sols = s.solve_linear(&p(e), &free).unwrap();
        assert!(!sols.is_empty(), "{e}");
        for (_, v) in sols {
            let c = v.const_value().unwrap();
            let env = [("x".to_string(), c)].into();
            assert_eq!(
                datasym::expr::eval_concrete(&p(e), &env, 8).unwrap(),
                U256::ONE,
                "{e} with {v}"
            );
        }
    }
    assert!(s.solve_linear(&p("(LT x 0x0)"), &free).unwrap().is_empty());
}

#[test]
fn oversized_seeds_are_rejected() {
    let s = solver(256, 5);
    let big = p("(ADD (ADD x y) (ADD z w))");
    let err = s.run(&NativeInput::from_seeds(vec![big])).unwrap_err();
    assert!(matches!(
        err,
        datasym::native::NativeError::SeedTooLarge { size: 7, bound: 5 }
    ));
}

/// The component instantiated twice: round two solves an equation built
/// from round one's answer.
#[test]
fn two_rounds_chain() {
    let src = r#"
        .include "solver.dl"
        .decl Seed(e: Expr)
        .decl Free(v: symbol)
        .input Seed, Free
        .decl r0.ValueForFreeVariable(x: Expr, v: Expr)
        .comp Round : NativeSolver {
            SeedExpression(e) :- Seed(e).
            SeedExpression(["EQ", ["ADD", ["y", nil, nil], v], ["0x9", nil, nil]]) :-
                $PREV.ValueForFreeVariable(["x", nil, nil], v).
            IsFreeVar(v) :- Free(v).
        }
        .init r = Round[2]
    "#;
    let program = parse_with_solver(src).unwrap();
    let mut engine = Engine::new();
    datasym::expr::functors::register(&mut engine, 256).unwrap();
    let mut db = FactDb::for_program(&program);
    for (rel, rows) in datasym::native::operator_facts(256, 10) {
        engine.insert_rows(&mut db, rel, &rows).unwrap();
    }
    let seed = p("(EQ (ADD x 0x5) 0xc)").to_datum();
    engine.insert_rows(&mut db, "Seed", &[vec![seed]]).unwrap();
    engine
        .insert_rows(&mut db, "Free", &[vec![Datum::sym("x")], vec![Datum::sym("y")]])
        .unwrap();
    let out = engine.evaluate(&program, db).unwrap();
    let values = |rel: &str| -> BTreeSet<(Expr, Expr)> {
        engine
            .rows(&out, rel)
            .unwrap()
            .iter()
            .map(|r| (Expr::from_datum(&r[0]).unwrap(), Expr::from_datum(&r[1]).unwrap()))
            .collect()
    };
    assert_eq!(values("r1.ValueForFreeVariable"), BTreeSet::from([(p("x"), p("0x7"))]));
    assert!(values("r2.ValueForFreeVariable").contains(&(p("y"), p("0x2"))));
}

#[test]
fn normalize_feeding_its_own_input_is_rejected() {
    let mut engine = Engine::new();
    let s = std::sync::Arc::new(solver(256, 10));
    datasym::native::register_normalize(&mut engine, s.clone()).unwrap();
    let src = r#"
        .type Expr = [base: symbol, left: Expr, right: Expr]
        .decl E(e: Expr)
        E(["ADD", ["x", nil, nil], ["0x0", nil, nil]]).
        E(@normalize(e)) :- E(e).
    "#;
    let program = datasym::engine::parse_program(src).unwrap();
    let err = engine.evaluate(&program, FactDb::for_program(&program)).unwrap_err();
    assert!(matches!(err, EngineError::Stratification { .. }), "{err}");
    let ok = r#"
        .type Expr = [base: symbol, left: Expr, right: Expr]
        .decl E(e: Expr)
        .decl N(e: Expr)
        E(["ADD", ["x", nil, nil], ["0x0", nil, nil]]).
        N(@normalize(e)) :- E(e).
    "#;
    let program = datasym::engine::parse_program(ok).unwrap();
    let out = engine.evaluate(&program, FactDb::for_program(&program)).unwrap();
    assert_eq!(
        engine.rows(&out, "N").unwrap(),
        BTreeSet::from([vec![p("x").to_datum()]])
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normalization_is_sound_and_idempotent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_expr(&mut rng, 6, 2);
        let s = solver(4, 7);
        let n = s.normalize(&e).unwrap();
        prop_assert_eq!(nibble::table(&n), nibble::table(&e));
        prop_assert!(n.tree_size() <= e.tree_size());
        prop_assert_eq!(s.normalize(&n).unwrap(), n);
    }
}
