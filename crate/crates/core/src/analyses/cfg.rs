// SPDX-License-Identifier: Apache-2.0

//! An in-memory SSA control-flow graph that renders to symbolic execution
//! input facts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ethnum::U256;

use crate::engine::{Datum, Engine, EngineError, FactDb};
use crate::expr::{ops::mask, Expr, Op};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instr {
    Assign {
        var: String,
        value: U256,
    },
    Phi {
        to: String,
        from: Vec<String>,
    },
    BinOp {
        op: Op,
        left: String,
        right: String,
        res: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub cond: String,
    pub on_true: String,
    pub on_false: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub instrs: Vec<Instr>,
    pub branch: Option<Branch>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub args: Vec<String>,
    pub entry: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cfg {
    pub functions: Vec<Function>,
    pub blocks: Vec<Block>,
}

pub type Rows = BTreeMap<&'static str, Vec<Vec<Datum>>>;

fn sym(s: &str) -> Datum {
    Datum::sym(s)
}

impl Cfg {
    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn block_mut(&mut self, name: &str) -> &mut Block {
        if let Some(i) = self.blocks.iter().position(|b| b.name == name) {
            return &mut self.blocks[i];
        }
        self.blocks.push(Block {
            name: name.to_string(),
            ..Default::default()
        });
        self.blocks.last_mut().unwrap()
    }

    /// Every constant assigned anywhere, truncated to `width`.
    pub fn constants(&self, width: u32) -> Vec<U256> {
        let mut out = Vec::new();
        for b in &self.blocks {
            for i in &b.instrs {
                if let Instr::Assign { value, .. } = i {
                    out.push(*value & mask(width));
                }
            }
        }
        out
    }

    /// Input facts by relation name.
    pub fn rows(&self, width: u32) -> Rows {
        let mut r: Rows = BTreeMap::new();
        for name in [
            "FunctionArg",
            "EntryBlock",
            "Assign",
            "PHI",
            "BinOperation",
            "TrueEdge",
            "FalseEdge",
        ] {
            r.insert(name, Vec::new());
        }
        for f in &self.functions {
            for a in &f.args {
                r.get_mut("FunctionArg").unwrap().push(vec![sym(&f.name), sym(a)]);
            }
            r.get_mut("EntryBlock").unwrap().push(vec![sym(&f.name), sym(&f.entry)]);
        }
        for b in &self.blocks {
            let bn = sym(&b.name);
            for i in &b.instrs {
                match i {
                    Instr::Assign { var, value } => r.get_mut("Assign").unwrap().push(vec![
                        bn.clone(),
                        sym(var),
                        Expr::constant(*value & mask(width)).to_datum(),
                    ]),
                    Instr::Phi { to, from } => {
                        for f in from {
                            r.get_mut("PHI").unwrap().push(vec![bn.clone(), sym(to), sym(f)]);
                        }
                    }
                    Instr::BinOp { op, left, right, res } => r.get_mut("BinOperation").unwrap().push(vec![
                        bn.clone(),
                        sym(op.name()),
                        sym(left),
                        sym(right),
                        sym(res),
                    ]),
                }
            }
            if let Some(br) = &b.branch {
                r.get_mut("TrueEdge")
                    .unwrap()
                    .push(vec![bn.clone(), sym(&br.on_true), sym(&br.cond)]);
                if let Some(f) = &br.on_false {
                    r.get_mut("FalseEdge")
                        .unwrap()
                        .push(vec![bn.clone(), sym(f), sym(&br.cond)]);
                }
            }
        }
        r
    }

    pub fn insert_into(&self, engine: &mut Engine, db: &mut FactDb, width: u32) -> Result<(), EngineError> {
        for (rel, rows) in self.rows(width) {
            engine.insert_rows(db, rel, &rows)?;
        }
        Ok(())
    }

    /// Writes one `<Relation>.facts` file per input relation.
    pub fn write_facts(&self, dir: &Path, width: u32) -> std::io::Result<()> {
        write_rows(dir, &self.rows(width))
    }
}

/// Writes rows in the tab-separated fact format.
pub fn write_rows(dir: &Path, rows: &Rows) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for (rel, rows) in rows {
        let mut text = String::new();
        for row in rows {
            let cols: Vec<String> = row
                .iter()
                .map(|d| match d {
                    Datum::Symbol(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            text.push_str(&cols.join("\t"));
            text.push('\n');
        }
        fs::write(dir.join(format!("{rel}.facts")), text)?;
    }
    Ok(())
}
