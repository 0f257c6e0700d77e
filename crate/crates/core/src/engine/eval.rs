// SPDX-License-Identifier: Apache-2.0

//! Semi-naive and naive fixpoint evaluation.
//!
//! Each round is split into tasks: a task is one rule variant restricted to a
//! chunk of the candidate tuples of its first scan. The task list depends only
//! on the database, never on the worker count. Workers intern into private
//! overlays and the outputs are merged in task order, so any number of
//! workers produces the same tables and relations as a single one.

use std::sync::atomic::{AtomicUsize, Ordering};
#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;
#[cfg(target_arch = "wasm32")]
use web_time::Instant;

use rustc_hash::FxHashMap;

use super::ast::{ArithOp, CmpOp, Literal, Program};
use super::error::{EngineError, Result};
use super::functor::Registry;
use super::plan::{schedule, CTerm, Compiled, Compiler, Pat, Scan, Step, Version};
use super::relation::{FactDb, Tuple};
use super::stratify::stratify;
use super::value::{Interner, Overlay, OverlayData, Tables, Value};

const CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Ranges {
    old_end: u32,
    delta_end: u32,
}

impl Ranges {
    fn full(len: usize) -> Self {
        Ranges {
            old_end: len as u32,
            delta_end: len as u32,
        }
    }

    fn get(&self, v: Version) -> std::ops::Range<u32> {
        match v {
            Version::Old => 0..self.old_end,
            Version::Delta => self.old_end..self.delta_end,
            Version::Full => 0..self.delta_end,
        }
    }
}

/// Timing and size information for one evaluated stratum.
#[derive(Clone, Debug)]
pub struct StratumStats {
    pub relations: Vec<String>,
    pub rounds: usize,
    pub tuples: usize,
    pub millis: f64,
}

/// `(task id, output)` pairs from one worker, plus that worker's overlay.
type WorkerOutput = (Vec<(usize, Result<Vec<(usize, Tuple)>>)>, OverlayData);

pub(crate) struct EvalConfig {
    pub jobs: usize,
    pub tuple_limit: usize,
}

struct Ctx<'a> {
    db: &'a FactDb,
    ranges: &'a [Ranges],
    functors: &'a Registry,
}

fn arith(op: ArithOp, a: Value, b: Value) -> Result<Value> {
    let (Value::Number(x), Value::Number(y)) = (a, b) else {
        return Err(EngineError::TypeMismatch {
            expected: "number",
            found: format!("{a:?} {op:?} {b:?}"),
        });
    };
    Ok(Value::Number(match op {
        ArithOp::Add => x.wrapping_add(y),
        ArithOp::Sub => x.wrapping_sub(y),
        ArithOp::Mul => x.wrapping_mul(y),
        ArithOp::Div | ArithOp::Mod if y == 0 => return Err(EngineError::Arithmetic("division by zero".into())),
        ArithOp::Div => x / y,
        ArithOp::Mod => x % y,
    }))
}

fn compare(op: CmpOp, a: Value, b: Value) -> Result<bool> {
    match op {
        CmpOp::Eq => return Ok(a == b),
        CmpOp::Ne => return Ok(a != b),
        _ => {}
    }
    let (Value::Number(x), Value::Number(y)) = (a, b) else {
        return Err(EngineError::TypeMismatch {
            expected: "number",
            found: format!("{a:?} {op} {b:?}"),
        });
    };
    Ok(match op {
        CmpOp::Lt => x < y,
        CmpOp::Le => x <= y,
        CmpOp::Gt => x > y,
        CmpOp::Ge => x >= y,
        CmpOp::Eq | CmpOp::Ne => unreachable!(),
    })
}

fn eval_term(t: &CTerm, slots: &[Value], ctx: &Ctx, it: &mut dyn Interner) -> Result<Value> {
    Ok(match t {
        CTerm::Var(s) => slots[*s],
        CTerm::Const(v) => *v,
        CTerm::Record(ts) => {
            let mut vals = Vec::with_capacity(ts.len());
            for t in ts {
                vals.push(eval_term(t, slots, ctx, it)?);
            }
            it.pack(&vals)
        }
        CTerm::Call(f, ts) => {
            let mut vals = Vec::with_capacity(ts.len());
            for t in ts {
                vals.push(eval_term(t, slots, ctx, it)?);
            }
            ctx.functors.call(*f, &vals, it)?
        }
        CTerm::Arith(op, a, b) => {
            let a = eval_term(a, slots, ctx, it)?;
            let b = eval_term(b, slots, ctx, it)?;
            arith(*op, a, b)?
        }
    })
}

fn match_pat(p: &Pat, v: Value, slots: &mut [Value], ctx: &Ctx, it: &mut dyn Interner) -> Result<bool> {
    match p {
        Pat::Wild => Ok(true),
        Pat::Bind(s) => {
            slots[*s] = v;
            Ok(true)
        }
        Pat::Check(t) => Ok(eval_term(t, slots, ctx, it)? == v),
        Pat::Record(ps) => {
            let fields: Vec<Value> = match v {
                Value::Record(_) | Value::Nil => it.unpack(v)?.to_vec(),
                _ => return Ok(false),
            };
            if fields.len() != ps.len() {
                return Ok(false);
            }
            for (p, f) in ps.iter().zip(fields) {
                if !match_pat(p, f, slots, ctx, it)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

fn match_rest(scan: &Scan, tuple: &[Value], slots: &mut [Value], ctx: &Ctx, it: &mut dyn Interner) -> Result<bool> {
    for (col, p) in &scan.rest {
        if !match_pat(p, tuple[*col], slots, ctx, it)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn key_of(scan: &Scan, slots: &[Value], ctx: &Ctx, it: &mut dyn Interner) -> Result<Vec<Value>> {
    scan.key.iter().map(|t| eval_term(t, slots, ctx, it)).collect()
}

fn run(
    c: &Compiled,
    step: usize,
    slots: &mut [Value],
    ctx: &Ctx,
    it: &mut dyn Interner,
    out: &mut Vec<(usize, Tuple)>,
) -> Result<()> {
    let Some(s) = c.steps.get(step) else {
        for (rel, args) in &c.heads {
            let mut t = Vec::with_capacity(args.len());
            for a in args {
                t.push(eval_term(a, slots, ctx, it)?);
            }
            out.push((*rel, t.into_boxed_slice()));
        }
        return Ok(());
    };
    match s {
        Step::Scan(scan) => {
            let key = key_of(scan, slots, ctx, it)?;
            if key.iter().any(|v| v.is_pending()) {
                return Ok(());
            }
            let rel = ctx.db.relation_at(scan.rel);
            let range = ctx.ranges[scan.rel].get(scan.version);
            for pos in rel.lookup(&scan.key_cols, &key, range) {
                let tuple = rel.get(pos);
                if match_rest(scan, tuple, slots, ctx, it)? {
                    run(c, step + 1, slots, ctx, it, out)?;
                }
            }
        }
        Step::Not(scan) => {
            let key = key_of(scan, slots, ctx, it)?;
            if !key.iter().any(|v| v.is_pending()) {
                let rel = ctx.db.relation_at(scan.rel);
                let range = ctx.ranges[scan.rel].get(Version::Full);
                for pos in rel.lookup(&scan.key_cols, &key, range) {
                    if match_rest(scan, rel.get(pos), slots, ctx, it)? {
                        return Ok(());
                    }
                }
            }
            run(c, step + 1, slots, ctx, it, out)?;
        }
        Step::Filter(op, a, b) => {
            let a = eval_term(a, slots, ctx, it)?;
            let b = eval_term(b, slots, ctx, it)?;
            if compare(*op, a, b)? {
                run(c, step + 1, slots, ctx, it, out)?;
            }
        }
        Step::Match(p, t) => {
            let v = eval_term(t, slots, ctx, it)?;
            if match_pat(p, v, slots, ctx, it)? {
                run(c, step + 1, slots, ctx, it, out)?;
            }
        }
    }
    Ok(())
}

struct Task {
    variant: usize,
    /// Candidate positions of the first scan, or `None` to run the whole rule.
    cands: Option<Vec<u32>>,
}

fn run_task(task: &Task, variants: &[Compiled], ctx: &Ctx, it: &mut dyn Interner) -> Result<Vec<(usize, Tuple)>> {
    let c = &variants[task.variant];
    let mut slots = vec![Value::Nil; c.slots];
    let mut out = Vec::new();
    match &task.cands {
        None => run(c, 0, &mut slots, ctx, it, &mut out)?,
        Some(cands) => {
            let Step::Scan(scan) = &c.steps[0] else { unreachable!() };
            let rel = ctx.db.relation_at(scan.rel);
            for &pos in cands {
                if match_rest(scan, rel.get(pos), &mut slots, ctx, it)? {
                    run(c, 1, &mut slots, ctx, it, &mut out)?;
                }
            }
        }
    }
    Ok(out)
}

fn prepare_indexes(db: &mut FactDb, variants: &[Compiled]) {
    for c in variants {
        for s in &c.steps {
            if let Step::Scan(scan) | Step::Not(scan) = s {
                let rel = db.relation_at_mut(scan.rel);
                let full_key = scan.key_cols.len() == rel.arity();
                if !(full_key && scan.version != Version::Delta) {
                    rel.ensure_index(&scan.key_cols);
                }
            }
        }
    }
}

fn make_tasks(variants: &[Compiled], ctx: &Ctx, tables: &Tables) -> Result<Vec<Task>> {
    let mut tasks = Vec::new();
    let mut scratch = OverlayData::default();
    for (i, c) in variants.iter().enumerate() {
        match c.steps.first() {
            Some(Step::Scan(scan)) => {
                let mut it = Overlay {
                    global: tables,
                    data: &mut scratch,
                };
                let key = key_of(scan, &[], ctx, &mut it)?;
                if key.iter().any(|v| v.is_pending()) {
                    continue;
                }
                let range = ctx.ranges[scan.rel].get(scan.version);
                if range.is_empty() {
                    continue;
                }
                let cands: Vec<u32> = ctx
                    .db
                    .relation_at(scan.rel)
                    .lookup(&scan.key_cols, &key, range)
                    .collect();
                for chunk in cands.chunks(CHUNK) {
                    tasks.push(Task {
                        variant: i,
                        cands: Some(chunk.to_vec()),
                    });
                }
            }
            _ => tasks.push(Task {
                variant: i,
                cands: None,
            }),
        }
    }
    Ok(tasks)
}

/// Evaluates every variant once against the current database and returns the
/// derived tuples with global ordinals, in task order.
fn round(
    tables: &mut Tables,
    functors: &Registry,
    db: &FactDb,
    ranges: &[Ranges],
    variants: &[Compiled],
    jobs: usize,
) -> Result<Vec<(usize, Tuple)>> {
    let ctx = Ctx { db, ranges, functors };
    let tasks = make_tasks(variants, &ctx, tables)?;
    let workers = jobs.clamp(1, tasks.len().max(1));

    let mut results: Vec<WorkerOutput> = if workers == 1 {
        let mut data = OverlayData::default();
        let mut outs = Vec::with_capacity(tasks.len());
        {
            let mut it = Overlay {
                global: tables,
                data: &mut data,
            };
            for (i, t) in tasks.iter().enumerate() {
                let r = run_task(t, variants, &ctx, &mut it);
                let failed = r.is_err();
                outs.push((i, r));
                if failed {
                    break;
                }
            }
        }
        vec![(outs, data)]
    } else {
        let next = AtomicUsize::new(0);
        let global: &Tables = tables;
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    let (next, tasks, ctx) = (&next, &tasks, &ctx);
                    scope.spawn(move || {
                        let mut data = OverlayData::default();
                        let mut outs = Vec::new();
                        {
                            let mut it = Overlay {
                                global,
                                data: &mut data,
                            };
                            loop {
                                let i = next.fetch_add(1, Ordering::Relaxed);
                                if i >= tasks.len() {
                                    break;
                                }
                                outs.push((i, run_task(&tasks[i], variants, ctx, &mut it)));
                            }
                        }
                        (outs, data)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("evaluation worker panicked"))
                .collect()
        })
    };

    let mut order: Vec<(usize, usize, usize)> = Vec::new();
    for (w, (outs, _)) in results.iter().enumerate() {
        for (k, (task, _)) in outs.iter().enumerate() {
            order.push((*task, w, k));
        }
    }
    order.sort_unstable();
    let mut merged = Vec::new();
    for (_, w, k) in order {
        let (outs, data) = &mut results[w];
        let out = std::mem::replace(&mut outs[k].1, Ok(Vec::new()))?;
        for (rel, t) in out {
            let adopted: Tuple = t.iter().map(|v| tables.adopt(*v, data)).collect();
            merged.push((rel, adopted));
        }
    }
    Ok(merged)
}

fn insert_all(db: &mut FactDb, out: Vec<(usize, Tuple)>, limit: usize) -> Result<usize> {
    let mut added = 0;
    for (rel, t) in out {
        let r = db.relation_at_mut(rel);
        if r.insert(t) {
            added += 1;
            if r.len() > limit {
                return Err(EngineError::ResourceLimit {
                    relation: db.relations_slice().get_index(rel).unwrap().0.clone(),
                    limit,
                });
            }
        }
    }
    Ok(added)
}

pub(crate) fn evaluate(
    tables: &mut Tables,
    functors: &Registry,
    cfg: &EvalConfig,
    program: &Program,
    mut db: FactDb,
    naive: bool,
) -> Result<(FactDb, Vec<StratumStats>)> {
    let plan = stratify(program, functors)?;
    let mut rel_index: FxHashMap<String, usize> = FxHashMap::default();
    for (name, decl) in &program.relations {
        rel_index.insert(name.clone(), db.ensure_relation(name, decl.arity())?);
    }
    let nrel = db.relations_slice().len();
    let mut stats = Vec::new();

    for stratum in &plan.strata {
        let started = Instant::now();
        let members: Vec<usize> = stratum.relations.iter().map(|r| rel_index[r]).collect();
        let in_stratum = |name: &str| stratum.relations.iter().any(|r| r == name);
        let mut init = Vec::new();
        let mut recursive = Vec::new();
        for &ri in &stratum.rules {
            let rule = &program.rules[ri];
            let occurrences: Vec<usize> = rule
                .body
                .iter()
                .enumerate()
                .filter(|(_, l)| matches!(l, Literal::Positive(a) if in_stratum(&a.relation)))
                .map(|(i, _)| i)
                .collect();
            if naive || occurrences.is_empty() {
                let order = schedule(rule, None)?;
                let c = Compiler::new(tables, functors, &rel_index).compile(rule, &order, &|_| Version::Full)?;
                if naive {
                    recursive.push(c);
                } else {
                    init.push(c);
                }
                continue;
            }
            for (k, &lit) in occurrences.iter().enumerate() {
                let order = schedule(rule, Some(lit))?;
                let version = |j: usize| match occurrences.iter().position(|o| *o == j) {
                    Some(kj) if kj < k => Version::Old,
                    Some(kj) if kj == k => Version::Delta,
                    _ => Version::Full,
                };
                recursive.push(Compiler::new(tables, functors, &rel_index).compile(rule, &order, &version)?);
            }
        }

        let full_ranges =
            |db: &FactDb| -> Vec<Ranges> { (0..nrel).map(|i| Ranges::full(db.relation_at(i).len())).collect() };
        let mut rounds = 0;
        if naive {
            loop {
                rounds += 1;
                prepare_indexes(&mut db, &recursive);
                let ranges = full_ranges(&db);
                let out = round(tables, functors, &db, &ranges, &recursive, cfg.jobs)?;
                if insert_all(&mut db, out, cfg.tuple_limit)? == 0 {
                    break;
                }
            }
        } else {
            rounds += 1;
            prepare_indexes(&mut db, &init);
            let ranges = full_ranges(&db);
            let out = round(tables, functors, &db, &ranges, &init, cfg.jobs)?;
            insert_all(&mut db, out, cfg.tuple_limit)?;
            let mut ranges = full_ranges(&db);
            for &m in &members {
                ranges[m].old_end = 0;
            }
            while stratum.recursive && members.iter().any(|&m| ranges[m].old_end < ranges[m].delta_end) {
                rounds += 1;
                prepare_indexes(&mut db, &recursive);
                let out = round(tables, functors, &db, &ranges, &recursive, cfg.jobs)?;
                insert_all(&mut db, out, cfg.tuple_limit)?;
                for &m in &members {
                    ranges[m].old_end = ranges[m].delta_end;
                    ranges[m].delta_end = db.relation_at(m).len() as u32;
                }
            }
        }
        stats.push(StratumStats {
            relations: stratum.relations.clone(),
            rounds,
            tuples: members.iter().map(|m| db.relation_at(*m).len()).sum(),
            millis: started.elapsed().as_secs_f64() * 1e3,
        });
        log::debug!(
            "stratum {:?}: {} rounds, {:.1} ms",
            stratum.relations,
            rounds,
            started.elapsed().as_secs_f64() * 1e3
        );
    }
    Ok((db, stats))
}
