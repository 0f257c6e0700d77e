// SPDX-License-Identifier: Apache-2.0

//! Tab-separated fact files.
//!
//! Input relations are read from `<Relation>.facts`; output relations are
//! written to `<Relation>.csv` with rows sorted bytewise. Number columns are
//! decimal, symbol columns verbatim, and record columns use the bracketed
//! list syntax `["ADD",["x",nil,nil],["0x01",nil,nil]]`.

use std::fs;
use std::path::Path;

use super::ast::{ColumnType, Program};
use super::error::{EngineError, Result};
use super::relation::FactDb;
use super::value::{Datum, Tables, Value};

/// Prefix reserved for solver-introduced variables.
pub const FRESH_PREFIX: &str = "$fresh_";

/// Parses the bracketed record syntax.
pub fn parse_datum(s: &str) -> std::result::Result<Datum, String> {
    let mut p = DatumParser {
        s: s.as_bytes(),
        pos: 0,
    };
    let d = p.datum()?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(format!("trailing input at byte {}", p.pos));
    }
    Ok(d)
}

struct DatumParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl DatumParser<'_> {
    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn datum(&mut self) -> std::result::Result<Datum, String> {
        self.ws();
        match self.s.get(self.pos) {
            Some(b'[') => {
                self.pos += 1;
                let mut fields = Vec::new();
                self.ws();
                if self.s.get(self.pos) == Some(&b']') {
                    self.pos += 1;
                    return Ok(Datum::Nil);
                }
                loop {
                    fields.push(self.datum()?);
                    self.ws();
                    match self.s.get(self.pos) {
                        Some(b',') => self.pos += 1,
                        Some(b']') => {
                            self.pos += 1;
                            return Ok(Datum::Record(fields));
                        }
                        _ => return Err(format!("expected `,` or `]` at byte {}", self.pos)),
                    }
                }
            }
            Some(b'"') => {
                let start = self.pos;
                self.pos += 1;
                while self.pos < self.s.len() {
                    match self.s[self.pos] {
                        b'\\' => self.pos += 2,
                        b'"' => {
                            self.pos += 1;
                            let text = std::str::from_utf8(&self.s[start..self.pos]).map_err(|e| e.to_string())?;
                            return serde_json::from_str::<String>(text)
                                .map(Datum::Symbol)
                                .map_err(|e| e.to_string());
                        }
                        _ => self.pos += 1,
                    }
                }
                Err("unterminated string".into())
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                text.parse().map(Datum::Number).map_err(|e| e.to_string())
            }
            _ if self.s[self.pos..].starts_with(b"nil") => {
                self.pos += 3;
                Ok(Datum::Nil)
            }
            _ => Err(format!("unexpected input at byte {}", self.pos)),
        }
    }
}

fn check_reserved(d: &Datum, path: &Path) -> Result<()> {
    match d {
        Datum::Symbol(s) if s.starts_with(FRESH_PREFIX) => Err(EngineError::ReservedSymbol {
            path: path.to_path_buf(),
            symbol: s.clone(),
        }),
        Datum::Record(fs) => fs.iter().try_for_each(|f| check_reserved(f, path)),
        _ => Ok(()),
    }
}

/// Parses one fact file body into rows of structural values.
pub fn parse_facts(text: &str, types: &[ColumnType], relation: &str, path: &Path) -> Result<Vec<Vec<Datum>>> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != types.len() {
            return Err(EngineError::Arity {
                span: super::error::Span { line: n + 1, column: 1 },
                relation: relation.to_string(),
                expected: types.len(),
                found: cols.len(),
            });
        }
        let mut row = Vec::with_capacity(cols.len());
        for (col, ty) in cols.iter().zip(types) {
            let bad = |message: String| EngineError::FactFormat {
                path: path.to_path_buf(),
                line: n + 1,
                message,
            };
            let d = match ty {
                ColumnType::Number => Datum::Number(
                    col.parse()
                        .map_err(|_| bad(format!("expected a number, found `{col}`")))?,
                ),
                ColumnType::Symbol => Datum::Symbol(col.to_string()),
                ColumnType::Record(name) => {
                    let d = parse_datum(col).map_err(|e| bad(format!("malformed `{name}` record: {e}")))?;
                    if !matches!(d, Datum::Record(_) | Datum::Nil) {
                        return Err(bad(format!("expected a `{name}` record, found `{col}`")));
                    }
                    d
                }
            };
            check_reserved(&d, path)?;
            row.push(d);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads `<Relation>.facts` for every input relation of `program`. Missing
/// files are empty relations; a missing directory is an error.
pub fn load_facts(tables: &mut Tables, dir: &Path, program: &Program) -> Result<FactDb> {
    let meta = fs::metadata(dir).map_err(|source| EngineError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    if !meta.is_dir() {
        return Err(EngineError::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        });
    }
    let mut db = FactDb::for_program(program);
    for name in &program.inputs {
        let path = dir.join(format!("{name}.facts"));
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
            Err(source) => return Err(EngineError::Io { path, source }),
        };
        let types = program.column_types(name).unwrap();
        for row in parse_facts(&text, &types, name, &path)? {
            let vals: Vec<Value> = row.iter().map(|d| tables.value_of(d)).collect();
            db.insert(name, vals)?;
        }
    }
    Ok(db)
}

fn render(d: &Datum) -> String {
    match d {
        Datum::Symbol(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Renders a relation as sorted, newline-terminated, tab-separated rows.
pub fn render_relation(tables: &Tables, db: &FactDb, name: &str) -> Result<String> {
    let mut lines = Vec::new();
    for t in db.tuples(name) {
        let cols = t
            .iter()
            .map(|v| tables.datum(*v).map(|d| render(&d)))
            .collect::<Result<Vec<_>>>()?;
        lines.push(cols.join("\t"));
    }
    lines.sort_unstable();
    let mut out = String::new();
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    Ok(out)
}

/// Writes `<Relation>.csv` for every output relation of `program`.
pub fn dump_relations(tables: &Tables, db: &FactDb, program: &Program, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| EngineError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for name in &program.outputs {
        let path = dir.join(format!("{name}.csv"));
        let text = render_relation(tables, db, name)?;
        fs::write(&path, text).map_err(|source| EngineError::Io { path, source })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn datum_syntax_round_trips() {
        let src = r#"["ADD",["x",nil,nil],["0x01",nil,nil]]"#;
        let d = parse_datum(src).unwrap();
        assert_eq!(d.to_string(), src);
        assert_eq!(parse_datum("[]").unwrap(), Datum::Nil);
        assert_eq!(parse_datum("[1, \"a\\tb\"]").unwrap().to_string(), "[1,\"a\\tb\"]");
        assert!(parse_datum("[1,").is_err());
    }

    #[test]
    fn facts_are_typed() {
        let p = Path::new("X.facts");
        let types = [ColumnType::Symbol, ColumnType::Number];
        let rows = parse_facts("w\t3\n", &types, "X", p).unwrap();
        assert_eq!(rows, vec![vec![Datum::sym("w"), Datum::Number(3)]]);
        assert!(matches!(
            parse_facts("w\tv\n", &types, "X", p),
            Err(EngineError::FactFormat { line: 1, .. })
        ));
        assert!(matches!(
            parse_facts("w\n", &types, "X", p),
            Err(EngineError::Arity { .. })
        ));
        assert!(matches!(
            parse_facts("$fresh_a\t1\n", &types, "X", p),
            Err(EngineError::ReservedSymbol { .. })
        ));
    }
}
