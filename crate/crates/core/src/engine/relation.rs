// SPDX-License-Identifier: Apache-2.0

//! Append-only tuple storage with lazily built hash indexes.
//!
//! Tuples keep their insertion position forever, so the "old", "delta" and
//! "full" versions used by semi-naive evaluation are plain position ranges.

use std::hash::BuildHasherDefault;
use std::ops::Range;

use indexmap::{IndexMap, IndexSet};
use rustc_hash::{FxHashMap, FxHasher};

use super::ast::Program;
use super::error::{EngineError, Result};
use super::value::Value;

pub type Tuple = Box<[Value]>;

#[derive(Clone, Default)]
struct Index {
    upto: usize,
    map: FxHashMap<Box<[Value]>, Vec<u32>>,
}

#[derive(Clone, Default)]
pub struct Relation {
    arity: usize,
    tuples: IndexSet<Tuple, BuildHasherDefault<FxHasher>>,
    indexes: FxHashMap<Vec<usize>, Index>,
}

impl Relation {
    pub fn new(arity: usize) -> Self {
        Relation {
            arity,
            ..Default::default()
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Inserts a tuple; returns whether it was new.
    pub fn insert(&mut self, t: Tuple) -> bool {
        debug_assert_eq!(t.len(), self.arity);
        self.tuples.insert(t)
    }

    pub fn contains(&self, t: &[Value]) -> bool {
        self.tuples.contains(t)
    }

    pub fn get(&self, pos: u32) -> &[Value] {
        &self.tuples[pos as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Value]> {
        self.tuples.iter().map(|t| &**t)
    }

    /// Brings the index on `cols` up to date with the stored tuples.
    pub(crate) fn ensure_index(&mut self, cols: &[usize]) {
        if cols.is_empty() {
            return;
        }
        let idx = self.indexes.entry(cols.to_vec()).or_default();
        for pos in idx.upto..self.tuples.len() {
            let t = &self.tuples[pos];
            let key: Box<[Value]> = cols.iter().map(|c| t[*c]).collect();
            idx.map.entry(key).or_default().push(pos as u32);
        }
        idx.upto = self.tuples.len();
    }

    /// Positions within `range` whose `cols` equal `key`.
    pub(crate) fn lookup(&self, cols: &[usize], key: &[Value], range: Range<u32>) -> Candidates<'_> {
        if cols.is_empty() {
            return Candidates::Range(range);
        }
        if cols.len() == self.arity && range.start == 0 {
            // Full-key lookups go straight to the tuple set.
            let mut full = vec![Value::Nil; self.arity];
            for (c, v) in cols.iter().zip(key) {
                full[*c] = *v;
            }
            return match self.tuples.get_index_of(&full[..]) {
                Some(p) if (p as u32) < range.end => Candidates::One(Some(p as u32)),
                _ => Candidates::One(None),
            };
        }
        let idx = self.indexes.get(cols).expect("index prepared before evaluation");
        match idx.map.get(key) {
            None => Candidates::One(None),
            Some(ps) => {
                let lo = ps.partition_point(|p| *p < range.start);
                let hi = ps.partition_point(|p| *p < range.end);
                Candidates::Slice(ps[lo..hi].iter())
            }
        }
    }
}

pub(crate) enum Candidates<'a> {
    Range(Range<u32>),
    Slice(std::slice::Iter<'a, u32>),
    One(Option<u32>),
}

impl Iterator for Candidates<'_> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        match self {
            Candidates::Range(r) => r.next(),
            Candidates::Slice(s) => s.next().copied(),
            Candidates::One(o) => o.take(),
        }
    }
}

/// Relation contents by name. Values refer to the tables of the engine that
/// produced or loaded them.
#[derive(Clone, Default)]
pub struct FactDb {
    relations: IndexMap<String, Relation>,
}

impl std::fmt::Debug for FactDb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_map()
            .entries(self.relations.iter().map(|(k, r)| (k, r.len())))
            .finish()
    }
}

impl FactDb {
    /// An empty database with one relation per declaration of `program`.
    pub fn for_program(program: &Program) -> Self {
        let mut db = FactDb::default();
        for (name, decl) in &program.relations {
            db.relations.insert(name.clone(), Relation::new(decl.arity()));
        }
        db
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub(crate) fn relation_at(&self, i: usize) -> &Relation {
        &self.relations[i]
    }

    pub(crate) fn relation_at_mut(&mut self, i: usize) -> &mut Relation {
        &mut self.relations[i]
    }

    pub(crate) fn relations_slice(&self) -> &IndexMap<String, Relation> {
        &self.relations
    }

    pub(crate) fn ensure_relation(&mut self, name: &str, arity: usize) -> Result<usize> {
        if let Some((i, _, r)) = self.relations.get_full(name) {
            if r.arity != arity {
                return Err(EngineError::Arity {
                    span: Default::default(),
                    relation: name.to_string(),
                    expected: arity,
                    found: r.arity,
                });
            }
            return Ok(i);
        }
        Ok(self.relations.insert_full(name.to_string(), Relation::new(arity)).0)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(String::as_str)
    }

    pub fn len(&self, name: &str) -> usize {
        self.relations.get(name).map_or(0, Relation::len)
    }

    /// Inserts one tuple, creating the relation if needed.
    pub fn insert(&mut self, name: &str, tuple: Vec<Value>) -> Result<bool> {
        let i = self.ensure_relation(name, tuple.len())?;
        Ok(self.relations[i].insert(tuple.into_boxed_slice()))
    }

    pub fn tuples<'a>(&'a self, name: &str) -> Box<dyn Iterator<Item = &'a [Value]> + 'a> {
        match self.relations.get(name) {
            Some(r) => Box::new(r.iter()),
            None => Box::new(std::iter::empty()),
        }
    }
}
