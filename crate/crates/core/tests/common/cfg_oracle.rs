// SPDX-License-Identifier: Apache-2.0

//! Random SSA DAGs and a concrete path oracle over 8-bit values.

use std::collections::{BTreeMap, BTreeSet};

use datasym::analyses::{Block, Branch, Cfg, Function, Instr};
use datasym::engine::{Datum, Engine, FactDb};
use datasym::expr::{eval_concrete, flatten, Env, Expr, Op};
use ethnum::U256;
use rand::Rng;

pub const ARITH: [Op; 6] = [Op::Add, Op::Sub, Op::Mul, Op::And, Op::Or, Op::Xor];
pub const CMP: [Op; 4] = [Op::Eq, Op::Lt, Op::Gt, Op::Slt];

fn apply(op: Op, a: u8, b: u8) -> u8 {
    match op {
        Op::Add => a.wrapping_add(b),
        Op::Sub => a.wrapping_sub(b),
        Op::Mul => a.wrapping_mul(b),
        Op::And => a & b,
        Op::Or => a | b,
        Op::Xor => a ^ b,
        Op::Eq => (a == b) as u8,
        Op::Lt => (a < b) as u8,
        Op::Gt => (a > b) as u8,
        Op::Slt => ((a as i8) < (b as i8)) as u8,
        other => panic!("oracle does not model {other:?}"),
    }
}

fn reaches(succ: &BTreeMap<usize, Vec<usize>>, from: usize, to: usize) -> bool {
    let mut stack = vec![from];
    let mut seen = BTreeSet::new();
    while let Some(b) = stack.pop() {
        if b == to {
            return true;
        }
        if seen.insert(b) {
            stack.extend(succ.get(&b).into_iter().flatten().copied());
        }
    }
    false
}

/// A single-function DAG over blocks `b0..bn` in topological order. Every
/// operand is defined in a dominating block, and phi nodes only appear in
/// blocks with exactly two predecessors that cannot reach each other.
pub fn random_cfg(rng: &mut impl Rng, max_blocks: usize, max_args: usize) -> Cfg {
    let n = rng.gen_range(2..=max_blocks);
    let nargs = rng.gen_range(1..=max_args);
    let args: Vec<String> = (0..nargs).map(|i| format!("a{i}")).collect();
    let mut succ: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n - 1 {
        let hi = (i + 3).min(n - 1);
        let t = rng.gen_range(i + 1..=hi);
        let f = rng.gen_range(i + 1..=hi);
        succ.insert(i, vec![t, f]);
    }
    let mut preds: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (p, ss) in &succ {
        for s in ss {
            preds.entry(*s).or_default().insert(*p);
        }
    }
    // Dominators; blocks unreachable from b0 dominate nothing useful.
    let all: BTreeSet<usize> = (0..n).collect();
    let mut dom: Vec<BTreeSet<usize>> = vec![all.clone(); n];
    dom[0] = BTreeSet::from([0]);
    for b in 1..n {
        let mut d = all.clone();
        for p in preds.get(&b).into_iter().flatten() {
            d = d.intersection(&dom[*p]).copied().collect();
        }
        if !preds.contains_key(&b) {
            d = BTreeSet::new();
        }
        d.insert(b);
        dom[b] = d;
    }
    let mut defined: Vec<Vec<String>> = vec![Vec::new(); n];
    let mut blocks = Vec::new();
    let mut counter = 0;
    let mut fresh = |p: &str| {
        counter += 1;
        format!("{p}{counter}")
    };
    for b in 0..n {
        let mut avail: Vec<String> = args.clone();
        for d in &dom[b] {
            if *d != b {
                avail.extend(defined[*d].iter().cloned());
            }
        }
        let mut instrs = Vec::new();
        let ps: Vec<usize> = preds.get(&b).into_iter().flatten().copied().collect();
        if ps.len() == 2 && rng.gen_bool(0.7) {
            let (p, q) = (ps[0], ps[ps.len() - 1]);
            if !reaches(&succ, p, q) && !reaches(&succ, q, p) && !defined[p].is_empty() && !defined[q].is_empty() {
                let vp = defined[p][rng.gen_range(0..defined[p].len())].clone();
                let vq = defined[q][rng.gen_range(0..defined[q].len())].clone();
                let to = fresh("t");
                instrs.push(Instr::Phi {
                    to: to.clone(),
                    from: vec![vp, vq],
                });
                avail.push(to.clone());
                defined[b].push(to);
            }
        }
        for _ in 0..rng.gen_range(0..=2) {
            let var = fresh("k");
            let value = U256::from(rng.gen_range(0..=255u8));
            instrs.push(Instr::Assign {
                var: var.clone(),
                value,
            });
            avail.push(var.clone());
            defined[b].push(var);
        }
        for _ in 0..rng.gen_range(0..=2) {
            let op = ARITH[rng.gen_range(0..ARITH.len())];
            let left = avail[rng.gen_range(0..avail.len())].clone();
            let right = avail[rng.gen_range(0..avail.len())].clone();
            let res = fresh("v");
            instrs.push(Instr::BinOp {
                op,
                left,
                right,
                res: res.clone(),
            });
            avail.push(res.clone());
            defined[b].push(res);
        }
        let branch = succ.get(&b).map(|ss| {
            let op = CMP[rng.gen_range(0..CMP.len())];
            let left = avail[rng.gen_range(0..avail.len())].clone();
            let right = avail[rng.gen_range(0..avail.len())].clone();
            let cond = fresh("c");
            instrs.push(Instr::BinOp {
                op,
                left,
                right,
                res: cond.clone(),
            });
            defined[b].push(cond.clone());
            Branch {
                cond,
                on_true: format!("b{}", ss[0]),
                on_false: Some(format!("b{}", ss[1])),
            }
        });
        blocks.push(Block {
            name: format!("b{b}"),
            instrs,
            branch,
        });
    }
    Cfg {
        functions: vec![Function {
            name: "f".into(),
            args,
            entry: "b0".into(),
        }],
        blocks,
    }
}

enum Step {
    Set(usize, u8),
    /// Target slot and `(predecessor block, source slot)` pairs.
    Phi(usize, Vec<(usize, usize)>),
    Bin(Op, usize, usize, usize),
}

struct Compiled {
    steps: Vec<Vec<Step>>,
    /// Condition slot, true target, optional false target.
    branches: Vec<Option<(usize, usize, Option<usize>)>>,
    slots: usize,
}

fn compile(cfg: &Cfg) -> Compiled {
    let f = &cfg.functions[0];
    let index: BTreeMap<&str, usize> = cfg
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (b.name.as_str(), i))
        .collect();
    let mut slots: BTreeMap<&str, usize> = BTreeMap::new();
    let mut definer: BTreeMap<&str, usize> = BTreeMap::new();
    for a in &f.args {
        let k = slots.len();
        slots.insert(a, k);
    }
    for (bi, b) in cfg.blocks.iter().enumerate() {
        for i in &b.instrs {
            let v = match i {
                Instr::Assign { var, .. } => var,
                Instr::Phi { to, .. } => to,
                Instr::BinOp { res, .. } => res,
            };
            let k = slots.len();
            slots.insert(v, k);
            definer.insert(v, bi);
        }
    }
    let steps = cfg
        .blocks
        .iter()
        .map(|b| {
            b.instrs
                .iter()
                .map(|i| match i {
                    Instr::Assign { var, value } => Step::Set(slots[var.as_str()], value.as_u8()),
                    Instr::Phi { to, from } => Step::Phi(
                        slots[to.as_str()],
                        from.iter().map(|v| (definer[v.as_str()], slots[v.as_str()])).collect(),
                    ),
                    Instr::BinOp { op, left, right, res } => {
                        Step::Bin(*op, slots[left.as_str()], slots[right.as_str()], slots[res.as_str()])
                    }
                })
                .collect()
        })
        .collect();
    let branches = cfg
        .blocks
        .iter()
        .map(|b| {
            b.branch.as_ref().map(|br| {
                (
                    slots[br.cond.as_str()],
                    index[br.on_true.as_str()],
                    br.on_false.as_ref().map(|f| index[f.as_str()]),
                )
            })
        })
        .collect();
    Compiled {
        steps,
        branches,
        slots: slots.len(),
    }
}

/// Executes `cfg` concretely on every 8-bit input and records each
/// `(block, branches taken)` reached with fewer than `bound` branches.
pub fn oracle_reachable(cfg: &Cfg, bound: usize) -> BTreeSet<(String, usize)> {
    let f = &cfg.functions[0];
    let entry = cfg.blocks.iter().position(|b| b.name == f.entry).expect("entry block");
    let c = compile(cfg);
    let mut seen = vec![vec![false; bound.max(1)]; cfg.blocks.len()];
    let nargs = f.args.len();
    let mut regs = vec![0u8; c.slots];
    for input in 0..(1u32 << (8 * nargs)) {
        for (k, r) in regs.iter_mut().take(nargs).enumerate() {
            *r = (input >> (8 * k)) as u8;
        }
        let mut block = entry;
        let mut prev = usize::MAX;
        let mut depth = 0;
        loop {
            seen[block][depth] = true;
            for step in &c.steps[block] {
                match step {
                    Step::Set(r, v) => regs[*r] = *v,
                    Step::Phi(to, from) => {
                        let (_, src) = from.iter().find(|(b, _)| *b == prev).expect("phi source");
                        regs[*to] = regs[*src];
                    }
                    Step::Bin(op, l, r, res) => regs[*res] = apply(*op, regs[*l], regs[*r]),
                }
            }
            let Some((cond, on_true, on_false)) = c.branches[block] else {
                break;
            };
            if depth + 1 >= bound {
                break;
            }
            let next = match (regs[cond], on_false) {
                (1, _) => on_true,
                (0, Some(f)) => f,
                _ => break,
            };
            prev = block;
            block = next;
            depth += 1;
        }
    }
    let mut out = BTreeSet::new();
    for (bi, row) in seen.iter().enumerate() {
        for (d, hit) in row.iter().enumerate() {
            if *hit {
                out.insert((cfg.blocks[bi].name.clone(), d));
            }
        }
    }
    out
}

fn single(name: &str, instrs: Vec<Instr>, branch: Option<(&str, &str, Option<&str>)>) -> Block {
    Block {
        name: name.into(),
        instrs,
        branch: branch.map(|(c, t, f)| Branch {
            cond: c.into(),
            on_true: t.into(),
            on_false: f.map(str::to_string),
        }),
    }
}

fn konst(var: &str, value: u64) -> Instr {
    Instr::Assign {
        var: var.into(),
        value: U256::from(value),
    }
}

fn bin(op: Op, left: &str, right: &str, res: &str) -> Instr {
    Instr::BinOp {
        op,
        left: left.into(),
        right: right.into(),
        res: res.into(),
    }
}

/// `x > 200` then `x < 100`: each branch is feasible alone, both together
/// are not, so `b2` is unreachable while `b1` and `b4` are reachable.
pub fn contradictory_diamond() -> Cfg {
    Cfg {
        functions: vec![Function {
            name: "f".into(),
            args: vec!["x".into()],
            entry: "b0".into(),
        }],
        blocks: vec![
            single(
                "b0",
                vec![konst("k200", 200), bin(Op::Gt, "x", "k200", "c1")],
                Some(("c1", "b1", Some("b3"))),
            ),
            single(
                "b1",
                vec![konst("k100", 100), bin(Op::Lt, "x", "k100", "c2")],
                Some(("c2", "b2", Some("b3"))),
            ),
            single("b2", vec![], None),
            single(
                "b3",
                vec![konst("k100b", 100), bin(Op::Lt, "x", "k100b", "c3")],
                Some(("c3", "b4", None)),
            ),
            single("b4", vec![], None),
        ],
    }
}

pub fn list_items(mut d: &Datum) -> Vec<&Datum> {
    let mut out = Vec::new();
    while let Datum::Record(fields) = d {
        out.push(&fields[0]);
        d = &fields[1];
    }
    out
}

/// `(block, path-condition length)` for every derived `Reachable` tuple.
pub fn engine_reachable(engine: &Engine, db: &FactDb) -> BTreeSet<(String, usize)> {
    engine
        .rows(db, "Reachable")
        .unwrap()
        .into_iter()
        .map(|r| {
            let Datum::Symbol(b) = &r[2] else {
                panic!("block column")
            };
            (b.clone(), list_items(&r[1]).len())
        })
        .collect()
}

/// Checks every model against a path condition of its state; returns how
/// many models were checked.
pub fn check_models(engine: &Engine, db: &FactDb, width: u32) -> usize {
    let mut conds: BTreeMap<Datum, Vec<Expr>> = BTreeMap::new();
    for r in engine.rows(db, "Reachable").unwrap() {
        let items: Vec<Expr> = list_items(&r[1])
            .into_iter()
            .map(|d| Expr::from_datum(d).unwrap())
            .collect();
        if !items.is_empty() {
            conds
                .entry(r[0].clone())
                .or_default()
                .push(flatten("AND", &items).unwrap());
        }
    }
    let models = engine.rows(db, "Models").unwrap();
    for m in &models {
        let mut env = Env::new();
        for pair in list_items(&m[1]) {
            let Datum::Record(kv) = pair else { panic!("model pair") };
            let (Datum::Symbol(k), Datum::Symbol(v)) = (&kv[0], &kv[1]) else {
                panic!("model pair")
            };
            env.insert(k.clone(), datasym::expr::parse_const(v).unwrap());
        }
        let cs = &conds[&m[0]];
        assert!(
            cs.iter().any(|c| eval_concrete(c, &env, width) == Ok(U256::ONE)),
            "model {env:?} satisfies no path condition of its state"
        );
    }
    assert_eq!(
        models.iter().map(|m| &m[0]).collect::<BTreeSet<_>>().len(),
        conds.len(),
        "every state with a path condition has a model"
    );
    models.len()
}
