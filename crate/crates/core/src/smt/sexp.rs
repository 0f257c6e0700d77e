// SPDX-License-Identifier: Apache-2.0

//! Just enough s-expression reading for solver responses.

use ethnum::U256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokens(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' | ')' => out.push(c.to_string()),
            c if c.is_whitespace() => {}
            '|' => {
                let mut t = String::new();
                for d in chars.by_ref() {
                    if d == '|' {
                        break;
                    }
                    t.push(d);
                }
                out.push(t);
            }
            '"' => {
                let mut t = String::from('"');
                for d in chars.by_ref() {
                    t.push(d);
                    if d == '"' {
                        break;
                    }
                }
                out.push(t);
            }
            _ => {
                let mut t = String::from(c);
                while let Some(&d) = chars.peek() {
                    if d == '(' || d == ')' || d.is_whitespace() {
                        break;
                    }
                    t.push(d);
                    chars.next();
                }
                out.push(t);
            }
        }
    }
    out
}

/// Parses every top-level s-expression in `s`.
pub fn parse_all(s: &str) -> Option<Vec<Sexp>> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for t in tokens(s) {
        match t.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let done = stack.pop()?;
                stack.last_mut()?.push(Sexp::List(done));
            }
            _ => stack.last_mut()?.push(Sexp::Atom(t)),
        }
    }
    if stack.len() != 1 {
        return None;
    }
    stack.pop()
}

/// `#x..`, `#b..` or `(_ bvN w)` literals.
pub fn bv_literal(s: &Sexp) -> Option<U256> {
    match s {
        Sexp::Atom(a) => {
            if let Some(h) = a.strip_prefix("#x") {
                U256::from_str_radix(h, 16).ok()
            } else if let Some(b) = a.strip_prefix("#b") {
                U256::from_str_radix(b, 2).ok()
            } else {
                None
            }
        }
        Sexp::List(items) => match &items[..] {
            [Sexp::Atom(u), Sexp::Atom(v), _] if u == "_" => U256::from_str_radix(v.strip_prefix("bv")?, 10).ok(),
            _ => None,
        },
    }
}

/// Pairs from a `get-value` response.
pub fn value_pairs(s: &str) -> Option<Vec<(String, U256)>> {
    let all = parse_all(s)?;
    let [Sexp::List(pairs)] = &all[..] else { return None };
    pairs
        .iter()
        .map(|p| match p {
            Sexp::List(kv) if kv.len() == 2 => match &kv[0] {
                Sexp::Atom(k) => Some((k.clone(), bv_literal(&kv[1])?)),
                _ => None,
            },
            _ => None,
        })
        .collect()
}
