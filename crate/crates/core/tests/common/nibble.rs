// SPDX-License-Identifier: Apache-2.0

//! A 4-bit expression evaluator written directly on `u8`, used as an
//! oracle independent of the library's evaluator.

use std::collections::BTreeMap;

use datasym::expr::Expr;

pub const VARS: [&str; 3] = ["x", "y", "z"];
pub const ENVS: usize = 16 * 16 * 16;

fn op(name: &str, a: u8, b: u8) -> u8 {
    let m = 0xf;
    let r = match name {
        "ADD" => a + b,
        "SUB" => a.wrapping_sub(b),
        "MUL" => a * b,
        "DIV" => a.checked_div(b).unwrap_or(0),
        "MOD" => a.checked_rem(b).unwrap_or(0),
        "EXP" => (0..b).fold(1u32, |acc, _| (acc * a as u32) & 0xf) as u8,
        "SHL" => {
            if b >= 4 {
                0
            } else {
                a << b
            }
        }
        "SHR" => {
            if b >= 4 {
                0
            } else {
                a >> b
            }
        }
        "AND" => a & b,
        "OR" => a | b,
        "XOR" => a ^ b,
        "NOT" => !a,
        "EQ" => (a == b) as u8,
        "LT" => (a < b) as u8,
        "GT" => (a > b) as u8,
        "SLT" => (((a << 4) as i8) < ((b << 4) as i8)) as u8,
        "ISZERO" => (a == 0) as u8,
        other => panic!("unknown operator {other}"),
    };
    r & m
}

fn constant(s: &str) -> u8 {
    let digits = s.trim_start_matches("0x").trim_start_matches('0');
    if digits.is_empty() {
        return 0;
    }
    // Truncate to the low nibble.
    u8::from_str_radix(&digits[digits.len() - 1..], 16).unwrap()
}

pub fn eval(e: &Expr, env: &[u8; 3]) -> u8 {
    match (&e.left, &e.right) {
        (None, None) => {
            if e.base.starts_with("0x") {
                constant(&e.base)
            } else {
                env[VARS.iter().position(|v| *v == e.base).expect("variable in x, y, z")]
            }
        }
        (Some(l), r) => {
            let a = eval(l, env);
            let b = r.as_ref().map_or(0, |r| eval(r, env));
            op(&e.base, a, b)
        }
        (None, Some(_)) => panic!("malformed expression"),
    }
}

pub fn env_of(i: usize) -> [u8; 3] {
    [(i & 0xf) as u8, ((i >> 4) & 0xf) as u8, ((i >> 8) & 0xf) as u8]
}

/// Values of `e` under every assignment of x, y and z.
pub fn table(e: &Expr) -> Vec<u8> {
    (0..ENVS).map(|i| eval(e, &env_of(i))).collect()
}

/// Memoized value tables.
#[derive(Default)]
pub struct Tables(BTreeMap<Expr, Vec<u8>>);

impl Tables {
    pub fn get(&mut self, e: &Expr) -> &[u8] {
        if !self.0.contains_key(e) {
            let t = table(e);
            self.0.insert(e.clone(), t);
        }
        &self.0[e]
    }

    pub fn same(&mut self, a: &Expr, b: &Expr) -> bool {
        self.get(a);
        self.get(b);
        self.0[a] == self.0[b]
    }
}
