// SPDX-License-Identifier: Apache-2.0

//! Runtime values and the symbol/record interning tables.
//!
//! Every value the engine stores is a small `Copy` word. Strings and tuples
//! are interned, so equality of two values is always decided by comparing
//! ordinals. During parallel evaluation workers intern into a private
//! [`Overlay`]; its provisional ("pending") ordinals are rewritten into global
//! ordinals when the worker output is merged, in a fixed order, which keeps
//! ordinal assignment independent of the worker count.

use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;

use super::error::EngineError;

const PENDING: u32 = 1 << 31;

/// A Datalog term value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    /// The empty record, also used as the list terminator.
    Nil,
    Number(u64),
    Symbol(u32),
    Record(u32),
}

impl Value {
    pub fn as_number(self) -> Option<u64> {
        match self {
            Value::Number(n) => Some(n),
            _ => None,
        }
    }

    pub(crate) fn is_pending(self) -> bool {
        match self {
            Value::Symbol(id) | Value::Record(id) => id & PENDING != 0,
            _ => false,
        }
    }
}

/// Interning operations available to rule evaluation and functors.
pub trait Interner {
    fn intern(&mut self, s: &str) -> Value;
    fn resolve(&self, v: Value) -> Result<&str, EngineError>;
    /// Packs a tuple into a record. The empty tuple is `Nil`.
    fn pack(&mut self, fields: &[Value]) -> Value;
    /// Unpacks a record; `Nil` unpacks to the empty tuple.
    fn unpack(&self, v: Value) -> Result<&[Value], EngineError>;
}

#[derive(Default, Clone)]
pub struct SymbolTable {
    strings: Vec<Arc<str>>,
    index: FxHashMap<Arc<str>, u32>,
}

impl SymbolTable {
    pub fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.index.get(s) {
            return id;
        }
        let id = self.strings.len() as u32;
        assert!(id < PENDING, "symbol table exhausted");
        let s: Arc<str> = Arc::from(s);
        self.strings.push(s.clone());
        self.index.insert(s, id);
        id
    }

    pub fn lookup(&self, s: &str) -> Option<u32> {
        self.index.get(s).copied()
    }

    pub fn resolve(&self, id: u32) -> Option<&str> {
        self.strings.get(id as usize).map(|s| &**s)
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }
}

#[derive(Default, Clone)]
pub struct RecordTable {
    records: Vec<Box<[Value]>>,
    index: FxHashMap<Box<[Value]>, u32>,
}

impl RecordTable {
    /// Interns a non-empty tuple of global values.
    pub fn pack(&mut self, fields: &[Value]) -> u32 {
        debug_assert!(!fields.is_empty());
        debug_assert!(fields.iter().all(|v| !v.is_pending()));
        if let Some(&id) = self.index.get(fields) {
            return id;
        }
        let id = self.records.len() as u32;
        assert!(id < PENDING, "record table exhausted");
        let boxed: Box<[Value]> = fields.into();
        self.records.push(boxed.clone());
        self.index.insert(boxed, id);
        id
    }

    pub fn lookup(&self, fields: &[Value]) -> Option<u32> {
        self.index.get(fields).copied()
    }

    pub fn unpack(&self, id: u32) -> Option<&[Value]> {
        self.records.get(id as usize).map(|r| &**r)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// The global interning state of one engine instance.
#[derive(Default, Clone)]
pub struct Tables {
    pub symbols: SymbolTable,
    pub records: RecordTable,
}

impl Interner for Tables {
    fn intern(&mut self, s: &str) -> Value {
        Value::Symbol(self.symbols.intern(s))
    }

    fn resolve(&self, v: Value) -> Result<&str, EngineError> {
        match v {
            Value::Symbol(id) => self.symbols.resolve(id).ok_or(EngineError::UnknownOrdinal(id)),
            other => Err(EngineError::TypeMismatch {
                expected: "symbol",
                found: format!("{other:?}"),
            }),
        }
    }

    fn pack(&mut self, fields: &[Value]) -> Value {
        if fields.is_empty() {
            Value::Nil
        } else {
            Value::Record(self.records.pack(fields))
        }
    }

    fn unpack(&self, v: Value) -> Result<&[Value], EngineError> {
        match v {
            Value::Nil => Ok(&[]),
            Value::Record(id) => self.records.unpack(id).ok_or(EngineError::UnknownRecordRef(id)),
            other => Err(EngineError::TypeMismatch {
                expected: "record",
                found: format!("{other:?}"),
            }),
        }
    }
}

/// Worker-private interning state layered over read-only global tables.
#[derive(Default)]
pub struct OverlayData {
    symbols: Vec<Arc<str>>,
    symbol_index: FxHashMap<Arc<str>, u32>,
    records: Vec<Box<[Value]>>,
    record_index: FxHashMap<Box<[Value]>, u32>,
}

pub struct Overlay<'a> {
    pub global: &'a Tables,
    pub data: &'a mut OverlayData,
}

impl Interner for Overlay<'_> {
    fn intern(&mut self, s: &str) -> Value {
        if let Some(id) = self.global.symbols.lookup(s) {
            return Value::Symbol(id);
        }
        if let Some(&id) = self.data.symbol_index.get(s) {
            return Value::Symbol(id);
        }
        let id = PENDING | self.data.symbols.len() as u32;
        let s: Arc<str> = Arc::from(s);
        self.data.symbols.push(s.clone());
        self.data.symbol_index.insert(s, id);
        Value::Symbol(id)
    }

    fn resolve(&self, v: Value) -> Result<&str, EngineError> {
        match v {
            Value::Symbol(id) if id & PENDING != 0 => self
                .data
                .symbols
                .get((id & !PENDING) as usize)
                .map(|s| &**s)
                .ok_or(EngineError::UnknownOrdinal(id)),
            other => self.global.resolve(other),
        }
    }

    fn pack(&mut self, fields: &[Value]) -> Value {
        if fields.is_empty() {
            return Value::Nil;
        }
        if !fields.iter().any(|v| v.is_pending()) {
            if let Some(id) = self.global.records.lookup(fields) {
                return Value::Record(id);
            }
        }
        if let Some(&id) = self.data.record_index.get(fields) {
            return Value::Record(id);
        }
        let id = PENDING | self.data.records.len() as u32;
        let boxed: Box<[Value]> = fields.into();
        self.data.records.push(boxed.clone());
        self.data.record_index.insert(boxed, id);
        Value::Record(id)
    }

    fn unpack(&self, v: Value) -> Result<&[Value], EngineError> {
        match v {
            Value::Record(id) if id & PENDING != 0 => self
                .data
                .records
                .get((id & !PENDING) as usize)
                .map(|r| &**r)
                .ok_or(EngineError::UnknownRecordRef(id)),
            other => self.global.unpack(other),
        }
    }
}

impl Tables {
    /// Rewrites a value produced against `overlay` into global ordinals.
    pub(crate) fn adopt(&mut self, v: Value, overlay: &OverlayData) -> Value {
        match v {
            Value::Symbol(id) if id & PENDING != 0 => {
                let s = overlay.symbols[(id & !PENDING) as usize].clone();
                Value::Symbol(self.symbols.intern(&s))
            }
            Value::Record(id) if id & PENDING != 0 => {
                let fields: Vec<Value> = overlay.records[(id & !PENDING) as usize]
                    .iter()
                    .map(|f| self.adopt(*f, overlay))
                    .collect();
                Value::Record(self.records.pack(&fields))
            }
            other => other,
        }
    }

    /// Converts a value into its structural form.
    pub fn datum(&self, v: Value) -> Result<Datum, EngineError> {
        datum_of(self, v)
    }

    /// Interns a structural value.
    pub fn value_of(&mut self, d: &Datum) -> Value {
        value_of(self, d)
    }
}

pub fn datum_of(interner: &dyn Interner, v: Value) -> Result<Datum, EngineError> {
    Ok(match v {
        Value::Nil => Datum::Nil,
        Value::Number(n) => Datum::Number(n),
        Value::Symbol(_) => Datum::Symbol(interner.resolve(v)?.to_string()),
        Value::Record(_) => Datum::Record(
            interner
                .unpack(v)?
                .iter()
                .map(|f| datum_of(interner, *f))
                .collect::<Result<_, _>>()?,
        ),
    })
}

pub fn value_of(interner: &mut dyn Interner, d: &Datum) -> Value {
    match d {
        Datum::Nil => Value::Nil,
        Datum::Number(n) => Value::Number(*n),
        Datum::Symbol(s) => interner.intern(s),
        Datum::Record(fields) => {
            let vals: Vec<Value> = fields.iter().map(|f| value_of(interner, f)).collect();
            interner.pack(&vals)
        }
    }
}

/// A structural (ordinal-free) view of a value, used for I/O and comparisons
/// across engine instances.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Datum {
    Nil,
    Number(u64),
    Symbol(String),
    Record(Vec<Datum>),
}

impl Datum {
    pub fn sym(s: impl Into<String>) -> Datum {
        Datum::Symbol(s.into())
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Datum::Symbol(s) => Some(s),
            _ => None,
        }
    }

    /// Builds a cons list `[x0, [x1, [... , nil]]]`.
    pub fn list(items: impl IntoIterator<Item = Datum, IntoIter: DoubleEndedIterator>) -> Datum {
        items
            .into_iter()
            .rev()
            .fold(Datum::Nil, |tail, head| Datum::Record(vec![head, tail]))
    }

    /// Iterates a cons list; `None` if the value is not a well-formed list.
    pub fn list_items(&self) -> Option<Vec<&Datum>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Datum::Nil => return Some(out),
                Datum::Record(f) if f.len() == 2 => {
                    out.push(&f[0]);
                    cur = &f[1];
                }
                _ => return None,
            }
        }
    }
}

impl fmt::Display for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Datum::Nil => f.write_str("nil"),
            Datum::Number(n) => write!(f, "{n}"),
            Datum::Symbol(s) => write!(f, "{}", serde_json::Value::String(s.clone())),
            Datum::Record(fields) => {
                f.write_str("[")?;
                for (i, x) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
        }
    }
}
