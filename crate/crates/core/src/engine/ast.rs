// SPDX-License-Identifier: Apache-2.0

//! Syntax tree of the Datalog dialect.

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;

use super::error::Span;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ColumnType {
    Symbol,
    Number,
    /// A declared record type (or an alias that resolves to one).
    Record(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationDecl {
    pub name: String,
    pub columns: Vec<(String, ColumnType)>,
    pub span: Span,
}

impl RelationDecl {
    pub fn arity(&self) -> usize {
        self.columns.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordType {
    pub name: String,
    pub fields: Vec<(String, ColumnType)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Wildcard,
    Number(u64),
    Str(String),
    Nil,
    /// Record constructor (or destructuring pattern) `[t1, t2, ...]`.
    Record(Vec<Term>),
    /// Functor call `@name(args)`.
    Call(String, Vec<Term>),
    Arith(ArithOp, Box<Term>, Box<Term>),
}

impl Term {
    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Record(ts) | Term::Call(_, ts) => ts.iter().for_each(|t| t.vars(out)),
            Term::Arith(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            _ => {}
        }
    }

    pub fn calls(&self, out: &mut Vec<String>) {
        match self {
            Term::Call(name, ts) => {
                out.push(name.clone());
                ts.iter().for_each(|t| t.calls(out));
            }
            Term::Record(ts) => ts.iter().for_each(|t| t.calls(out)),
            Term::Arith(_, a, b) => {
                a.calls(out);
                b.calls(out);
            }
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub relation: String,
    pub args: Vec<Term>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Literal {
    Positive(Atom),
    Negative(Atom),
    Compare {
        op: CmpOp,
        lhs: Term,
        rhs: Term,
        span: Span,
    },
}

impl Literal {
    pub fn span(&self) -> Span {
        match self {
            Literal::Positive(a) | Literal::Negative(a) => a.span,
            Literal::Compare { span, .. } => *span,
        }
    }

    pub fn is_negated(&self) -> bool {
        matches!(self, Literal::Negative(_))
    }

    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Positive(a) | Literal::Negative(a) => Some(a),
            Literal::Compare { .. } => None,
        }
    }

    pub fn calls(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            Literal::Positive(a) | Literal::Negative(a) => a.args.iter().for_each(|t| t.calls(&mut out)),
            Literal::Compare { lhs, rhs, .. } => {
                lhs.calls(&mut out);
                rhs.calls(&mut out);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub heads: Vec<Atom>,
    pub body: Vec<Literal>,
    pub span: Span,
}

/// A component instantiation recorded for introspection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentInit {
    pub instance: String,
    pub component: String,
    /// `None` for a single instance, `Some(n)` for `Comp[n]`.
    pub count: Option<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct Program {
    pub relations: IndexMap<String, RelationDecl>,
    pub record_types: IndexMap<String, RecordType>,
    pub inputs: BTreeSet<String>,
    pub outputs: Vec<String>,
    pub rules: Vec<Rule>,
    pub components: Vec<ComponentInit>,
}

impl Program {
    /// EDB relations are exactly those with an input directive.
    pub fn is_edb(&self, relation: &str) -> bool {
        self.inputs.contains(relation)
    }

    pub fn idb_relations(&self) -> impl Iterator<Item = &str> {
        self.relations
            .keys()
            .filter(|r| !self.inputs.contains(*r))
            .map(String::as_str)
    }

    pub fn column_types(&self, relation: &str) -> Option<Vec<ColumnType>> {
        self.relations
            .get(relation)
            .map(|d| d.columns.iter().map(|(_, t)| t.clone()).collect())
    }
}
