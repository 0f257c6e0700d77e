// SPDX-License-Identifier: Apache-2.0

//! Parser for the Datalog dialect.
//!
//! ```text
//! .type Expr = [base: symbol, left: Expr, right: Expr]
//! .decl Edge(x: number, y: number)
//! .input Edge
//! .decl Path(x: number, y: number)
//! .output Path
//! Path(x, y) :- Edge(x, y).
//! Path(x, z) :- Path(x, y), Edge(y, z), x != z.
//!
//! .comp Round : Base { ... }
//! .init round = Round[3]
//! ```
//!
//! Inside a component body, relations declared by the component (or its
//! parent) are qualified with the instance name, and `$PREV.Name` refers to
//! relation `Name` of the previous instance (`inst0.Name` for the first one).

use std::collections::{BTreeSet, HashMap};

use indexmap::IndexMap;

use super::ast::*;
use super::error::{EngineError, Result, Span};
use super::plan;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(u64),
    Str(String),
    Directive(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Period,
    Colon,
    If,
    Bang,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    At,
    Pipe,
    Eof,
}

const DIRECTIVES: &[&str] = &["decl", "type", "input", "output", "comp", "init", "include"];

fn lex(src: &str) -> Result<Vec<(Tok, Span)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let ident_start = |c: char| c.is_ascii_alphabetic() || c == '_' || c == '$';
    let ident_char = |c: char| c.is_ascii_alphanumeric() || c == '_' || c == '$';

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, column: col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                bump!();
            }
            if i >= chars.len() {
                return Err(EngineError::syntax(span, "unterminated block comment"));
            }
            bump!();
            bump!();
            continue;
        }
        if c == '.' && chars.get(i + 1).is_some_and(|c| c.is_ascii_alphabetic()) {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_alphabetic() {
                j += 1;
            }
            let word: String = chars[i + 1..j].iter().collect();
            if DIRECTIVES.contains(&word.as_str()) {
                while i < j {
                    bump!();
                }
                out.push((Tok::Directive(word), span));
                continue;
            }
        }
        if ident_start(c) {
            let mut s = String::new();
            while i < chars.len() {
                let ch = chars[i];
                if ident_char(ch) || (ch == '.' && chars.get(i + 1).is_some_and(|n| ident_start(*n))) {
                    s.push(ch);
                    bump!();
                } else {
                    break;
                }
            }
            out.push((Tok::Ident(s), span));
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                bump!();
            }
            let n = s
                .parse::<u64>()
                .map_err(|_| EngineError::syntax(span, format!("number `{s}` out of range")))?;
            out.push((Tok::Number(n), span));
            continue;
        }
        if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                if i >= chars.len() {
                    return Err(EngineError::syntax(span, "unterminated string"));
                }
                let ch = chars[i];
                bump!();
                match ch {
                    '"' => break,
                    '\\' => {
                        let esc = *chars
                            .get(i)
                            .ok_or_else(|| EngineError::syntax(span, "unterminated string"))?;
                        bump!();
                        s.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                    }
                    other => s.push(other),
                }
            }
            out.push((Tok::Str(s), span));
            continue;
        }
        let two = |a: char, b: char| c == a && chars.get(i + 1) == Some(&b);
        let (tok, len) = if two(':', '-') {
            (Tok::If, 2)
        } else if two('!', '=') {
            (Tok::Ne, 2)
        } else if two('<', '=') {
            (Tok::Le, 2)
        } else if two('>', '=') {
            (Tok::Ge, 2)
        } else {
            let t = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                ',' => Tok::Comma,
                '.' => Tok::Period,
                ':' => Tok::Colon,
                '!' => Tok::Bang,
                '=' => Tok::Eq,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '%' => Tok::Percent,
                '@' => Tok::At,
                '|' => Tok::Pipe,
                other => return Err(EngineError::syntax(span, format!("unexpected character `{other}`"))),
            };
            (t, 1)
        };
        for _ in 0..len {
            bump!();
        }
        out.push((tok, span));
    }
    out.push((Tok::Eof, Span { line, column: col }));
    Ok(out)
}

#[derive(Clone, Debug)]
enum TypeDef {
    Record(Vec<(String, String)>),
    Alias(Vec<String>),
}

#[derive(Clone, Debug)]
enum Item {
    Decl(String, Vec<(String, String)>, Span),
    Type(String, TypeDef, Span),
    Input(Vec<(String, Span)>),
    Output(Vec<(String, Span)>),
    Rule(Rule),
    Comp {
        name: String,
        parent: Option<String>,
        items: Vec<Item>,
        span: Span,
    },
    Init {
        instance: String,
        comp: String,
        count: Option<usize>,
        span: Span,
    },
}

struct Parser<'r> {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    resolver: &'r mut dyn FnMut(&str) -> Option<String>,
    depth: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let span = self.span();
        let got = self.next();
        if got == want {
            Ok(())
        } else {
            Err(EngineError::syntax(span, format!("expected {what}, found {got:?}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        let span = self.span();
        match self.next() {
            Tok::Ident(s) => Ok(s),
            other => Err(EngineError::syntax(span, format!("expected {what}, found {other:?}"))),
        }
    }

    fn items(&mut self, until_brace: bool) -> Result<Vec<Item>> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof if !until_brace => return Ok(items),
                Tok::RBrace if until_brace => {
                    self.next();
                    return Ok(items);
                }
                Tok::Eof => return Err(EngineError::syntax(self.span(), "unterminated component body")),
                _ => items.extend(self.item()?),
            }
        }
    }

    fn item(&mut self) -> Result<Vec<Item>> {
        let span = self.span();
        if let Tok::Directive(d) = self.peek().clone() {
            self.next();
            return match d.as_str() {
                "decl" => self.decl(span).map(|i| vec![i]),
                "type" => self.type_def(span).map(|i| vec![i]),
                "input" => Ok(vec![Item::Input(self.name_list()?)]),
                "output" => Ok(vec![Item::Output(self.name_list()?)]),
                "comp" => self.comp(span).map(|i| vec![i]),
                "init" => self.init(span).map(|i| vec![i]),
                "include" => self.include(span),
                _ => unreachable!(),
            };
        }
        self.rule().map(|r| vec![Item::Rule(r)])
    }

    fn decl(&mut self, span: Span) -> Result<Item> {
        let name = self.ident("relation name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut cols = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let col = self.ident("column name")?;
                self.expect(Tok::Colon, "`:`")?;
                let ty = self.ident("column type")?;
                cols.push((col, ty));
                if *self.peek() == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(Item::Decl(name, cols, span))
    }

    fn type_def(&mut self, span: Span) -> Result<Item> {
        let name = self.ident("type name")?;
        self.expect(Tok::Eq, "`=`")?;
        if *self.peek() == Tok::LBracket {
            self.next();
            let mut fields = Vec::new();
            if *self.peek() != Tok::RBracket {
                loop {
                    let f = self.ident("field name")?;
                    self.expect(Tok::Colon, "`:`")?;
                    let t = self.ident("field type")?;
                    fields.push((f, t));
                    if *self.peek() == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RBracket, "`]`")?;
            Ok(Item::Type(name, TypeDef::Record(fields), span))
        } else {
            let mut alts = vec![self.ident("type")?];
            while *self.peek() == Tok::Pipe {
                self.next();
                alts.push(self.ident("type")?);
            }
            Ok(Item::Type(name, TypeDef::Alias(alts), span))
        }
    }

    fn name_list(&mut self) -> Result<Vec<(String, Span)>> {
        let mut out = Vec::new();
        loop {
            let span = self.span();
            out.push((self.ident("relation name")?, span));
            if *self.peek() == Tok::Comma {
                self.next();
            } else {
                return Ok(out);
            }
        }
    }

    fn comp(&mut self, span: Span) -> Result<Item> {
        let name = self.ident("component name")?;
        let parent = if *self.peek() == Tok::Colon {
            self.next();
            Some(self.ident("parent component")?)
        } else {
            None
        };
        self.expect(Tok::LBrace, "`{`")?;
        let items = self.items(true)?;
        Ok(Item::Comp {
            name,
            parent,
            items,
            span,
        })
    }

    fn init(&mut self, span: Span) -> Result<Item> {
        let instance = self.ident("instance name")?;
        self.expect(Tok::Eq, "`=`")?;
        let comp = self.ident("component name")?;
        let count = if *self.peek() == Tok::LBracket {
            self.next();
            let n = match self.next() {
                Tok::Number(n) => n as usize,
                other => {
                    return Err(EngineError::syntax(
                        span,
                        format!("expected instance count, found {other:?}"),
                    ))
                }
            };
            self.expect(Tok::RBracket, "`]`")?;
            Some(n)
        } else {
            None
        };
        Ok(Item::Init {
            instance,
            comp,
            count,
            span,
        })
    }

    fn include(&mut self, span: Span) -> Result<Vec<Item>> {
        let name = match self.next() {
            Tok::Str(s) => s,
            other => {
                return Err(EngineError::syntax(
                    span,
                    format!("expected include path, found {other:?}"),
                ))
            }
        };
        if self.depth > 16 {
            return Err(EngineError::syntax(span, "include nesting too deep"));
        }
        let text = (self.resolver)(&name).ok_or_else(|| EngineError::Include(name.clone()))?;
        let mut sub = Parser {
            toks: lex(&text)?,
            pos: 0,
            resolver: &mut *self.resolver,
            depth: self.depth + 1,
        };
        sub.items(false)
    }

    fn rule(&mut self) -> Result<Rule> {
        let span = self.span();
        let mut heads = vec![self.atom()?];
        while *self.peek() == Tok::Comma {
            self.next();
            heads.push(self.atom()?);
        }
        let mut body = Vec::new();
        if *self.peek() == Tok::If {
            self.next();
            loop {
                body.push(self.literal()?);
                if *self.peek() == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::Period, "`.` at end of rule")?;
        Ok(Rule { heads, body, span })
    }

    fn atom(&mut self) -> Result<Atom> {
        let span = self.span();
        let relation = self.ident("predicate name")?;
        self.expect(Tok::LParen, "`(`")?;
        let args = self.term_list(Tok::RParen)?;
        Ok(Atom { relation, args, span })
    }

    fn term_list(&mut self, close: Tok) -> Result<Vec<Term>> {
        let mut args = Vec::new();
        if *self.peek() == close {
            self.next();
            return Ok(args);
        }
        loop {
            args.push(self.term()?);
            match self.next() {
                Tok::Comma => continue,
                t if t == close => return Ok(args),
                other => {
                    return Err(EngineError::syntax(
                        self.toks[self.pos.saturating_sub(1)].1,
                        format!("expected `,` or {close:?}, found {other:?}"),
                    ))
                }
            }
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        let span = self.span();
        if *self.peek() == Tok::Bang {
            self.next();
            return Ok(Literal::Negative(self.atom()?));
        }
        if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::LParen {
            return Ok(Literal::Positive(self.atom()?));
        }
        let lhs = self.term()?;
        let op = match self.next() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            other => {
                return Err(EngineError::syntax(
                    span,
                    format!("expected comparison operator, found {other:?}"),
                ))
            }
        };
        let rhs = self.term()?;
        Ok(Literal::Compare { op, lhs, rhs, span })
    }

    fn term(&mut self) -> Result<Term> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.factor()?;
            lhs = Term::Arith(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Term> {
        let mut lhs = self.primary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                Tok::Percent => ArithOp::Mod,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.primary()?;
            lhs = Term::Arith(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn primary(&mut self) -> Result<Term> {
        let span = self.span();
        match self.next() {
            Tok::Ident(s) if s == "_" => Ok(Term::Wildcard),
            Tok::Ident(s) if s == "nil" => Ok(Term::Nil),
            Tok::Ident(s) => Ok(Term::Var(s)),
            Tok::Number(n) => Ok(Term::Number(n)),
            Tok::Str(s) => Ok(Term::Str(s)),
            Tok::LBracket => Ok(Term::Record(self.term_list(Tok::RBracket)?)),
            Tok::At => {
                let name = self.ident("functor name")?;
                self.expect(Tok::LParen, "`(`")?;
                Ok(Term::Call(name, self.term_list(Tok::RParen)?))
            }
            Tok::LParen => {
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::Pipe => {
                let t = self.term()?;
                self.expect(Tok::Pipe, "closing `|`")?;
                Ok(Term::Call("list_length".into(), vec![t]))
            }
            other => Err(EngineError::syntax(span, format!("expected a term, found {other:?}"))),
        }
    }
}

/// Parses a self-contained program (no includes).
pub fn parse_program(src: &str) -> Result<Program> {
    parse_program_with(src, &mut |_| None)
}

/// Parses a program, resolving `.include "name"` through `resolver`.
pub fn parse_program_with(src: &str, resolver: &mut dyn FnMut(&str) -> Option<String>) -> Result<Program> {
    let mut parser = Parser {
        toks: lex(src)?,
        pos: 0,
        resolver,
        depth: 0,
    };
    let items = parser.items(false)?;
    build(items)
}

struct Renamer<'a> {
    prefix: String,
    prev: Option<String>,
    local: &'a BTreeSet<String>,
}

impl Renamer<'_> {
    fn name(&self, n: &str, span: Span) -> Result<String> {
        if let Some(rest) = n.strip_prefix("$PREV.") {
            return match &self.prev {
                Some(p) => Ok(format!("{p}.{rest}")),
                None => Err(EngineError::syntax(
                    span,
                    "`$PREV` used in a component instantiated without a count",
                )),
            };
        }
        if self.local.contains(n) {
            Ok(format!("{}.{n}", self.prefix))
        } else {
            Ok(n.to_string())
        }
    }

    fn atom(&self, a: &Atom) -> Result<Atom> {
        Ok(Atom {
            relation: self.name(&a.relation, a.span)?,
            args: a.args.clone(),
            span: a.span,
        })
    }

    fn item(&self, item: &Item) -> Result<Item> {
        Ok(match item {
            Item::Decl(n, cols, span) => Item::Decl(self.name(n, *span)?, cols.clone(), *span),
            Item::Input(ns) => Item::Input(
                ns.iter()
                    .map(|(n, s)| Ok((self.name(n, *s)?, *s)))
                    .collect::<Result<_>>()?,
            ),
            Item::Output(ns) => Item::Output(
                ns.iter()
                    .map(|(n, s)| Ok((self.name(n, *s)?, *s)))
                    .collect::<Result<_>>()?,
            ),
            Item::Rule(r) => Item::Rule(Rule {
                heads: r.heads.iter().map(|a| self.atom(a)).collect::<Result<_>>()?,
                body: r
                    .body
                    .iter()
                    .map(|l| {
                        Ok(match l {
                            Literal::Positive(a) => Literal::Positive(self.atom(a)?),
                            Literal::Negative(a) => Literal::Negative(self.atom(a)?),
                            c => c.clone(),
                        })
                    })
                    .collect::<Result<_>>()?,
                span: r.span,
            }),
            other => other.clone(),
        })
    }
}

fn component_items(
    comps: &HashMap<String, (Option<String>, Vec<Item>, Span)>,
    name: &str,
    span: Span,
    seen: &mut Vec<String>,
) -> Result<Vec<Item>> {
    if seen.iter().any(|s| s == name) {
        return Err(EngineError::syntax(
            span,
            format!("component `{name}` inherits from itself"),
        ));
    }
    let (parent, items, _) = comps
        .get(name)
        .ok_or_else(|| EngineError::syntax(span, format!("unknown component `{name}`")))?;
    seen.push(name.to_string());
    let mut out = match parent {
        Some(p) => component_items(comps, p, span, seen)?,
        None => Vec::new(),
    };
    out.extend(items.iter().cloned());
    Ok(out)
}

fn build(items: Vec<Item>) -> Result<Program> {
    let mut comps: HashMap<String, (Option<String>, Vec<Item>, Span)> = HashMap::new();
    let mut flat = Vec::new();
    let mut inits = Vec::new();
    for item in items {
        match item {
            Item::Comp {
                name,
                parent,
                items,
                span,
            } => {
                if comps.insert(name.clone(), (parent, items, span)).is_some() {
                    return Err(EngineError::syntax(span, format!("component `{name}` defined twice")));
                }
            }
            Item::Init { .. } => {
                inits.push(item.clone());
                flat.push(item);
            }
            other => flat.push(other),
        }
    }

    let mut program = Program::default();
    let mut expanded = Vec::new();
    for item in flat {
        let Item::Init {
            instance,
            comp,
            count,
            span,
        } = item
        else {
            expanded.push(item);
            continue;
        };
        let body = component_items(&comps, &comp, span, &mut Vec::new())?;
        if body.iter().any(|i| matches!(i, Item::Comp { .. } | Item::Init { .. })) {
            return Err(EngineError::syntax(span, "nested components are not supported"));
        }
        let local: BTreeSet<String> = body
            .iter()
            .filter_map(|i| match i {
                Item::Decl(n, _, _) => Some(n.clone()),
                _ => None,
            })
            .collect();
        let instances: Vec<(String, Option<String>)> = match count {
            None => vec![(instance.clone(), None)],
            Some(n) => (1..=n)
                .map(|k| (format!("{instance}{k}"), Some(format!("{instance}{}", k - 1))))
                .collect(),
        };
        for (prefix, prev) in instances {
            let renamer = Renamer {
                prefix,
                prev,
                local: &local,
            };
            for i in &body {
                expanded.push(renamer.item(i)?);
            }
        }
        program.components.push(ComponentInit {
            instance,
            component: comp,
            count,
        });
    }

    let mut types: IndexMap<String, (TypeDef, Span)> = IndexMap::new();
    for item in &expanded {
        if let Item::Type(name, def, span) = item {
            types.insert(name.clone(), (def.clone(), *span));
        }
    }
    let resolve = |name: &str, span: Span| -> Result<ColumnType> {
        let mut cur = name.to_string();
        for _ in 0..64 {
            match cur.as_str() {
                "symbol" => return Ok(ColumnType::Symbol),
                "number" => return Ok(ColumnType::Number),
                _ => {}
            }
            match types.get(&cur) {
                Some((TypeDef::Record(_), _)) => return Ok(ColumnType::Record(cur)),
                Some((TypeDef::Alias(alts), _)) => cur = alts[0].clone(),
                None => return Err(EngineError::syntax(span, format!("unknown type `{cur}`"))),
            }
        }
        Err(EngineError::syntax(span, format!("cyclic type alias `{name}`")))
    };
    for (name, (def, span)) in &types {
        if let TypeDef::Record(fields) = def {
            let fields = fields
                .iter()
                .map(|(f, t)| Ok((f.clone(), resolve(t, *span)?)))
                .collect::<Result<_>>()?;
            program.record_types.insert(
                name.clone(),
                RecordType {
                    name: name.clone(),
                    fields,
                },
            );
        }
    }

    for item in expanded {
        match item {
            Item::Decl(name, cols, span) => {
                let columns = cols
                    .iter()
                    .map(|(c, t)| Ok((c.clone(), resolve(t, span)?)))
                    .collect::<Result<_>>()?;
                if program.relations.contains_key(&name) {
                    return Err(EngineError::syntax(span, format!("relation `{name}` declared twice")));
                }
                program
                    .relations
                    .insert(name.clone(), RelationDecl { name, columns, span });
            }
            Item::Input(ns) => program.inputs.extend(ns.into_iter().map(|(n, _)| n)),
            Item::Output(ns) => {
                for (n, _) in ns {
                    if !program.outputs.contains(&n) {
                        program.outputs.push(n);
                    }
                }
            }
            Item::Rule(r) => program.rules.push(r),
            Item::Type(..) | Item::Comp { .. } | Item::Init { .. } => {}
        }
    }

    validate(&program)?;
    Ok(program)
}

fn check_atom(program: &Program, atom: &Atom) -> Result<()> {
    let decl = program
        .relations
        .get(&atom.relation)
        .ok_or_else(|| EngineError::UnknownPredicate {
            span: atom.span,
            relation: atom.relation.clone(),
        })?;
    if decl.arity() != atom.args.len() {
        return Err(EngineError::Arity {
            span: atom.span,
            relation: atom.relation.clone(),
            expected: decl.arity(),
            found: atom.args.len(),
        });
    }
    Ok(())
}

/// Checks predicate references, arities, input-relation heads and rule safety.
pub fn validate(program: &Program) -> Result<()> {
    for name in program.inputs.iter().chain(program.outputs.iter()) {
        if !program.relations.contains_key(name) {
            return Err(EngineError::UnknownPredicate {
                span: Span::default(),
                relation: name.clone(),
            });
        }
    }
    for rule in &program.rules {
        for h in &rule.heads {
            check_atom(program, h)?;
            if program.is_edb(&h.relation) {
                return Err(EngineError::EdbHead {
                    span: h.span,
                    relation: h.relation.clone(),
                });
            }
        }
        for lit in &rule.body {
            if let Some(a) = lit.atom() {
                check_atom(program, a)?;
            }
        }
        plan::check_safety(rule)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DECLS: &str = ".decl P(x: number)\n.decl Q(x: number)\n.input Q\n";

    #[test]
    fn single_rule() {
        let p = parse_program(&format!("{DECLS}P(x) :- Q(x).")).unwrap();
        assert_eq!(p.rules.len(), 1);
        assert_eq!(p.rules[0].body.len(), 1);
        assert!(matches!(p.rules[0].body[0], Literal::Positive(_)));
    }

    #[test]
    fn unbound_negation_is_unsafe() {
        let err = parse_program(&format!("{DECLS}P(x) :- !Q(x).")).unwrap_err();
        assert!(matches!(err, EngineError::Safety { .. }), "{err}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_program(&format!("{DECLS}P(x) :- Q(x)")).unwrap_err();
        match err {
            EngineError::Syntax { span, .. } => assert_eq!(span.line, 4),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn arity_and_unknown_predicates() {
        assert!(matches!(
            parse_program(&format!("{DECLS}P(x) :- Q(x, x).")),
            Err(EngineError::Arity {
                expected: 1,
                found: 2,
                ..
            })
        ));
        assert!(matches!(
            parse_program(&format!("{DECLS}P(x) :- R(x).")),
            Err(EngineError::UnknownPredicate { .. })
        ));
    }

    #[test]
    fn input_relations_cannot_be_heads() {
        assert!(matches!(
            parse_program(&format!("{DECLS}Q(x) :- P(x).")),
            Err(EngineError::EdbHead { .. })
        ));
    }

    #[test]
    fn record_types_and_terms() {
        let src = r#"
            .type Base = symbol
            .type Expr = [base: Base, left: Expr, right: Expr]
            .decl E(e: Expr)
            .decl L(n: number)
            E(["0x1", nil, nil]).
            L(|[1, nil]| + 2 * 3) :- E(_).
        "#;
        let p = parse_program(src).unwrap();
        assert_eq!(p.record_types["Expr"].fields.len(), 3);
        assert_eq!(p.relations["E"].columns[0].1, ColumnType::Record("Expr".into()));
        assert_eq!(p.rules.len(), 2);
    }

    #[test]
    fn components_expand_with_previous_instance_links() {
        let src = r#"
            .decl r0.Out(x: number)
            r0.Out(1).
            .comp Step {
                .decl Out(x: number)
                Out(x + 1) :- $PREV.Out(x).
            }
            .init r = Step[3]
        "#;
        let p = parse_program(src).unwrap();
        assert!(p.relations.contains_key("r3.Out"));
        let last = p.rules.last().unwrap();
        assert_eq!(last.heads[0].relation, "r3.Out");
        assert_eq!(last.body[0].atom().unwrap().relation, "r2.Out");
        assert_eq!(p.components[0].count, Some(3));
    }

    #[test]
    fn component_inheritance_and_includes() {
        let lib = ".comp Base { .decl A(x: number) A(1). }";
        let src = r#"
            .include "lib.dl"
            .comp Derived : Base { .decl B(x: number) B(x) :- A(x). }
            .init d = Derived
        "#;
        let p = parse_program_with(src, &mut |n| (n == "lib.dl").then(|| lib.to_string())).unwrap();
        assert!(p.relations.contains_key("d.A"));
        assert_eq!(p.rules[1].body[0].atom().unwrap().relation, "d.A");
        assert!(matches!(
            parse_program(".include \"missing.dl\""),
            Err(EngineError::Include(_))
        ));
    }

    #[test]
    fn multi_head_rules_keep_their_heads() {
        let src = ".decl A(x: number)\n.decl B(x: number)\n.decl E(x: number)\n.input E\nA(x), B(x) :- E(x).";
        let p = parse_program(src).unwrap();
        assert_eq!(p.rules[0].heads.len(), 2);
    }
}
