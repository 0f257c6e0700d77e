// SPDX-License-Identifier: Apache-2.0

//! Join planning: literal scheduling, safety checking, and compilation of a
//! rule body into a sequence of executable steps.
//!
//! Scheduling is greedy and left-to-right: ready filters and negations go
//! first, then equality bindings, then the positive atom with the most bound
//! arguments. The same scheduler decides safety, so a rule is safe exactly
//! when it can be scheduled.

use std::collections::BTreeSet;

use rustc_hash::FxHashMap;

use super::ast::{ArithOp, Atom, CmpOp, Literal, Rule, Term};
use super::error::{EngineError, Result};
use super::functor::Registry;
use super::value::{Tables, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Sched {
    Atom(usize),
    Not(usize),
    Filter(usize),
    /// Equality whose `lhs` (if true) or `rhs` is a pattern binding new variables.
    Match(usize, bool),
}

fn evaluable(t: &Term, bound: &BTreeSet<String>) -> bool {
    match t {
        Term::Var(v) => bound.contains(v),
        Term::Wildcard => false,
        Term::Number(_) | Term::Str(_) | Term::Nil => true,
        Term::Record(ts) | Term::Call(_, ts) => ts.iter().all(|t| evaluable(t, bound)),
        Term::Arith(_, a, b) => evaluable(a, bound) && evaluable(b, bound),
    }
}

fn patternable(t: &Term, bound: &BTreeSet<String>) -> bool {
    match t {
        Term::Var(_) | Term::Wildcard => true,
        Term::Record(ts) => ts.iter().all(|t| patternable(t, bound)),
        other => evaluable(other, bound),
    }
}

fn has_wildcard(t: &Term) -> bool {
    match t {
        Term::Wildcard => true,
        Term::Record(ts) | Term::Call(_, ts) => ts.iter().any(has_wildcard),
        Term::Arith(_, a, b) => has_wildcard(a) || has_wildcard(b),
        _ => false,
    }
}

fn term_vars(t: &Term) -> BTreeSet<String> {
    let mut s = BTreeSet::new();
    t.vars(&mut s);
    s
}

fn atom_vars(a: &Atom) -> BTreeSet<String> {
    let mut s = BTreeSet::new();
    a.args.iter().for_each(|t| t.vars(&mut s));
    s
}

fn bound_args(a: &Atom, bound: &BTreeSet<String>) -> usize {
    a.args
        .iter()
        .filter(|t| !matches!(t, Term::Wildcard) && evaluable(t, bound))
        .count()
}

/// Orders the body literals of `rule`. `forced` names a positive literal that
/// should be scanned first when possible (the delta atom of a semi-naive variant).
pub(crate) fn schedule(rule: &Rule, forced: Option<usize>) -> Result<Vec<Sched>> {
    let mut bound = BTreeSet::new();
    let mut done = vec![false; rule.body.len()];
    let mut order = Vec::new();

    for lit in &rule.body {
        if let Literal::Negative(a) = lit {
            if !lit.calls().is_empty() {
                return Err(EngineError::Safety {
                    span: a.span,
                    message: format!("functor calls are not allowed in negated literal `{}`", a.relation),
                });
            }
        }
    }

    if let Some(f) = forced {
        if let Literal::Positive(a) = &rule.body[f] {
            if a.args.iter().all(|t| patternable(t, &bound)) {
                done[f] = true;
                order.push(Sched::Atom(f));
                bound.extend(atom_vars(a));
            }
        }
    }

    while done.iter().any(|d| !d) {
        let pending = || (0..rule.body.len()).filter(|i| !done[*i]);
        // Functor calls wait until every scannable atom has been joined, so
        // they only see tuples that survive the joins.
        let atoms_left = pending().any(|i| match &rule.body[i] {
            Literal::Positive(a) => a.args.iter().all(|t| patternable(t, &bound)),
            _ => false,
        });
        let ready = |i: usize| !atoms_left || rule.body[i].calls().is_empty();
        let mut pick = None;
        for i in pending().filter(|i| ready(*i)) {
            if let Literal::Compare { lhs, rhs, .. } = &rule.body[i] {
                if evaluable(lhs, &bound) && evaluable(rhs, &bound) {
                    pick = Some(Sched::Filter(i));
                    break;
                }
            }
        }
        if pick.is_none() {
            pick = pending()
                .find(|i| match &rule.body[*i] {
                    Literal::Negative(a) => atom_vars(a).is_subset(&bound),
                    _ => false,
                })
                .map(Sched::Not);
        }
        if pick.is_none() {
            for i in pending().filter(|i| ready(*i)) {
                if let Literal::Compare {
                    op: CmpOp::Eq,
                    lhs,
                    rhs,
                    ..
                } = &rule.body[i]
                {
                    if evaluable(rhs, &bound) && patternable(lhs, &bound) {
                        pick = Some(Sched::Match(i, true));
                        break;
                    }
                    if evaluable(lhs, &bound) && patternable(rhs, &bound) {
                        pick = Some(Sched::Match(i, false));
                        break;
                    }
                }
            }
        }
        if pick.is_none() {
            let mut best: Option<(usize, usize)> = None;
            for i in pending() {
                if let Literal::Positive(a) = &rule.body[i] {
                    if a.args.iter().all(|t| patternable(t, &bound)) {
                        let score = bound_args(a, &bound);
                        if best.is_none_or(|(_, s)| score > s) {
                            best = Some((i, score));
                        }
                    }
                }
            }
            pick = best.map(|(i, _)| Sched::Atom(i));
        }
        let Some(step) = pick else {
            let i = pending().next().unwrap();
            let lit = &rule.body[i];
            let mut vars = BTreeSet::new();
            match lit {
                Literal::Positive(a) | Literal::Negative(a) => vars = atom_vars(a),
                Literal::Compare { lhs, rhs, .. } => {
                    lhs.vars(&mut vars);
                    rhs.vars(&mut vars);
                    if has_wildcard(lhs) || has_wildcard(rhs) {
                        return Err(EngineError::Safety {
                            span: lit.span(),
                            message: "wildcards are not allowed in comparisons".into(),
                        });
                    }
                }
            }
            let unbound: Vec<_> = vars.difference(&bound).cloned().collect();
            return Err(EngineError::Safety {
                span: lit.span(),
                message: format!("variables {unbound:?} are not bound by a positive literal"),
            });
        };
        match step {
            Sched::Atom(i) | Sched::Not(i) | Sched::Filter(i) | Sched::Match(i, _) => {
                done[i] = true;
                if let Sched::Atom(_) | Sched::Match(..) = step {
                    match &rule.body[i] {
                        Literal::Positive(a) => bound.extend(atom_vars(a)),
                        Literal::Compare { lhs, rhs, .. } => {
                            bound.extend(term_vars(lhs));
                            bound.extend(term_vars(rhs));
                        }
                        Literal::Negative(_) => {}
                    }
                }
            }
        }
        order.push(step);
    }

    for h in &rule.heads {
        for t in &h.args {
            if has_wildcard(t) {
                return Err(EngineError::Safety {
                    span: h.span,
                    message: format!("wildcard in head of `{}`", h.relation),
                });
            }
            if !evaluable(t, &bound) {
                let unbound: Vec<_> = term_vars(t).difference(&bound).cloned().collect();
                return Err(EngineError::Safety {
                    span: h.span,
                    message: format!(
                        "head variables {unbound:?} of `{}` are not bound by the body",
                        h.relation
                    ),
                });
            }
        }
    }
    Ok(order)
}

pub(crate) fn check_safety(rule: &Rule) -> Result<()> {
    schedule(rule, None).map(|_| ())
}

#[derive(Clone, Debug)]
pub(crate) enum CTerm {
    Var(usize),
    Const(Value),
    Record(Vec<CTerm>),
    Call(usize, Vec<CTerm>),
    Arith(ArithOp, Box<CTerm>, Box<CTerm>),
}

#[derive(Clone, Debug)]
pub(crate) enum Pat {
    Bind(usize),
    Check(CTerm),
    Wild,
    Record(Vec<Pat>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Version {
    Old,
    Delta,
    Full,
}

#[derive(Clone, Debug)]
pub(crate) struct Scan {
    pub rel: usize,
    pub version: Version,
    pub key_cols: Vec<usize>,
    pub key: Vec<CTerm>,
    pub rest: Vec<(usize, Pat)>,
}

#[derive(Clone, Debug)]
pub(crate) enum Step {
    Scan(Scan),
    Not(Scan),
    Filter(CmpOp, CTerm, CTerm),
    Match(Pat, CTerm),
}

#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    pub steps: Vec<Step>,
    pub heads: Vec<(usize, Vec<CTerm>)>,
    pub slots: usize,
}

pub(crate) struct Compiler<'a> {
    pub tables: &'a mut Tables,
    pub functors: &'a Registry,
    pub rel_index: &'a FxHashMap<String, usize>,
    slots: FxHashMap<String, usize>,
    bound: Vec<bool>,
}

impl<'a> Compiler<'a> {
    pub fn new(tables: &'a mut Tables, functors: &'a Registry, rel_index: &'a FxHashMap<String, usize>) -> Self {
        Compiler {
            tables,
            functors,
            rel_index,
            slots: FxHashMap::default(),
            bound: Vec::new(),
        }
    }

    fn slot(&mut self, v: &str) -> usize {
        if let Some(&s) = self.slots.get(v) {
            return s;
        }
        let s = self.slots.len();
        self.slots.insert(v.to_string(), s);
        self.bound.push(false);
        s
    }

    fn is_bound(&self, v: &str) -> bool {
        self.slots.get(v).is_some_and(|s| self.bound[*s])
    }

    fn evaluable(&self, t: &Term) -> bool {
        match t {
            Term::Var(v) => self.is_bound(v),
            Term::Wildcard => false,
            Term::Number(_) | Term::Str(_) | Term::Nil => true,
            Term::Record(ts) | Term::Call(_, ts) => ts.iter().all(|t| self.evaluable(t)),
            Term::Arith(_, a, b) => self.evaluable(a) && self.evaluable(b),
        }
    }

    fn term(&mut self, t: &Term) -> Result<CTerm> {
        use super::value::Interner;
        Ok(match t {
            Term::Var(v) => CTerm::Var(self.slot(v)),
            Term::Wildcard => unreachable!("wildcards are rejected by the scheduler"),
            Term::Number(n) => CTerm::Const(Value::Number(*n)),
            Term::Str(s) => CTerm::Const(self.tables.intern(s)),
            Term::Nil => CTerm::Const(Value::Nil),
            Term::Record(ts) => {
                let parts = ts.iter().map(|t| self.term(t)).collect::<Result<Vec<_>>>()?;
                if parts.iter().all(|p| matches!(p, CTerm::Const(_))) {
                    let vals: Vec<Value> = parts
                        .iter()
                        .map(|p| match p {
                            CTerm::Const(v) => *v,
                            _ => unreachable!(),
                        })
                        .collect();
                    CTerm::Const(self.tables.pack(&vals))
                } else {
                    CTerm::Record(parts)
                }
            }
            Term::Call(name, ts) => {
                let id = self.functors.lookup(name, ts.len())?;
                CTerm::Call(id, ts.iter().map(|t| self.term(t)).collect::<Result<_>>()?)
            }
            Term::Arith(op, a, b) => CTerm::Arith(*op, Box::new(self.term(a)?), Box::new(self.term(b)?)),
        })
    }

    fn pat(&mut self, t: &Term) -> Result<Pat> {
        Ok(match t {
            Term::Wildcard => Pat::Wild,
            Term::Var(v) if !self.is_bound(v) => {
                let s = self.slot(v);
                self.bound[s] = true;
                Pat::Bind(s)
            }
            Term::Record(ts) if !self.evaluable(t) => {
                Pat::Record(ts.iter().map(|t| self.pat(t)).collect::<Result<_>>()?)
            }
            other => Pat::Check(self.term(other)?),
        })
    }

    fn scan(&mut self, a: &Atom, version: Version) -> Result<Scan> {
        let rel = self.rel_index[&a.relation];
        let mut key_cols = Vec::new();
        let mut key = Vec::new();
        let mut rest_terms = Vec::new();
        for (i, t) in a.args.iter().enumerate() {
            if !matches!(t, Term::Wildcard) && self.evaluable(t) {
                key_cols.push(i);
                key.push(self.term(t)?);
            } else if !matches!(t, Term::Wildcard) {
                rest_terms.push((i, t));
            }
        }
        let mut rest = Vec::new();
        for (i, t) in rest_terms {
            rest.push((i, self.pat(t)?));
        }
        Ok(Scan {
            rel,
            version,
            key_cols,
            key,
            rest,
        })
    }

    /// Compiles `rule` following `order`; `version` gives the version of each
    /// positive body literal.
    pub fn compile(mut self, rule: &Rule, order: &[Sched], version: &dyn Fn(usize) -> Version) -> Result<Compiled> {
        let mut steps = Vec::new();
        for s in order {
            match *s {
                Sched::Atom(i) => {
                    let Literal::Positive(a) = &rule.body[i] else {
                        unreachable!()
                    };
                    steps.push(Step::Scan(self.scan(a, version(i))?));
                }
                Sched::Not(i) => {
                    let Literal::Negative(a) = &rule.body[i] else {
                        unreachable!()
                    };
                    steps.push(Step::Not(self.scan(a, Version::Full)?));
                }
                Sched::Filter(i) => {
                    let Literal::Compare { op, lhs, rhs, .. } = &rule.body[i] else {
                        unreachable!()
                    };
                    steps.push(Step::Filter(*op, self.term(lhs)?, self.term(rhs)?));
                }
                Sched::Match(i, lhs_is_pat) => {
                    let Literal::Compare { lhs, rhs, .. } = &rule.body[i] else {
                        unreachable!()
                    };
                    let (p, t) = if lhs_is_pat { (lhs, rhs) } else { (rhs, lhs) };
                    let t = self.term(t)?;
                    steps.push(Step::Match(self.pat(p)?, t));
                }
            }
        }
        let mut heads = Vec::new();
        for h in &rule.heads {
            let rel = self.rel_index[&h.relation];
            heads.push((rel, h.args.iter().map(|t| self.term(t)).collect::<Result<_>>()?));
        }
        Ok(Compiled {
            steps,
            heads,
            slots: self.slots.len(),
        })
    }
}
