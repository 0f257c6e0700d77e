// SPDX-License-Identifier: Apache-2.0

//! Query cache keyed by the SHA-256 of the rendered text, optionally
//! persisted as append-only `hash TAB status TAB model-json` lines.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::{SmtError, SmtResult, Status};
use crate::expr::{const_name, parse_const};

pub type Key = [u8; 32];

pub fn key_of(text: &str) -> Key {
    Sha256::digest(text.as_bytes()).into()
}

pub fn key_hex(k: &Key) -> String {
    k.iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_key(s: &str) -> Option<Key> {
    if s.len() != 64 {
        return None;
    }
    let mut k = [0u8; 32];
    for (i, b) in k.iter_mut().enumerate() {
        *b = u8::from_str_radix(s.get(2 * i..2 * i + 2)?, 16).ok()?;
    }
    Some(k)
}

#[derive(Default)]
pub struct QueryCache {
    map: Mutex<HashMap<Key, SmtResult>>,
    file: Option<(PathBuf, Mutex<File>)>,
}

impl QueryCache {
    pub fn in_memory() -> Self {
        QueryCache::default()
    }

    /// Loads `path` if it exists and appends new entries to it.
    pub fn persistent(path: &Path) -> Result<Self, SmtError> {
        let err = |e: std::io::Error| SmtError::Cache {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut map = HashMap::new();
        if path.exists() {
            let f = File::open(path).map_err(err)?;
            for (n, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let (k, r) = parse_line(&line).ok_or_else(|| SmtError::Cache {
                    path: path.display().to_string(),
                    message: format!("line {}: malformed entry", n + 1),
                })?;
                map.insert(k, r);
            }
        }
        let f = OpenOptions::new().create(true).append(true).open(path).map_err(err)?;
        Ok(QueryCache {
            map: Mutex::new(map),
            file: Some((path.to_path_buf(), Mutex::new(f))),
        })
    }

    pub fn get(&self, key: &Key) -> Option<SmtResult> {
        self.map.lock().unwrap().get(key).cloned()
    }

    /// Stores `r` unless an entry exists; returns the entry that is kept,
    /// so concurrent misses on one query agree.
    pub fn insert(&self, key: Key, r: SmtResult) -> Result<SmtResult, SmtError> {
        let mut map = self.map.lock().unwrap();
        if let Some(old) = map.get(&key) {
            return Ok(old.clone());
        }
        if let Some((path, f)) = &self.file {
            let mut f = f.lock().unwrap();
            writeln!(f, "{}", format_line(&key, &r)).map_err(|e| SmtError::Cache {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        }
        map.insert(key, r.clone());
        Ok(r)
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn format_line(k: &Key, r: &SmtResult) -> String {
    let model: Vec<[String; 2]> = r.model.iter().map(|(v, c)| [v.clone(), const_name(*c)]).collect();
    format!(
        "{}\t{}\t{}",
        key_hex(k),
        r.status,
        serde_json::to_string(&model).unwrap()
    )
}

fn parse_line(line: &str) -> Option<(Key, SmtResult)> {
    let mut parts = line.splitn(3, '\t');
    let k = parse_key(parts.next()?)?;
    let status = Status::parse(parts.next()?)?;
    let model: Vec<[String; 2]> = serde_json::from_str(parts.next()?).ok()?;
    let model = model
        .into_iter()
        .map(|[v, c]| Some((v, parse_const(&c).ok()?)))
        .collect::<Option<Vec<_>>>()?;
    Some((k, SmtResult { status, model }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ethnum::U256;

    #[test]
    fn persists_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.tsv");
        let k = key_of("(assert true)");
        let r = SmtResult::sat(vec![("x".into(), U256::from(7u8))]);
        {
            let c = QueryCache::persistent(&path).unwrap();
            assert!(c.get(&k).is_none());
            c.insert(k, r.clone()).unwrap();
            let other = SmtResult::new(Status::Unsat);
            assert_eq!(c.insert(k, other).unwrap(), r);
        }
        let c = QueryCache::persistent(&path).unwrap();
        assert_eq!(c.get(&k), Some(r));
        assert_eq!(c.len(), 1);
        std::fs::write(&path, "zz\tsat\t[]\n").unwrap();
        assert!(QueryCache::persistent(&path).is_err());
    }
}
