// SPDX-License-Identifier: Apache-2.0
//! Random Datalog programs over a random graph, each paired with the answer
//! computed directly by graph search.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use datasym::analyses::cfg::Rows;
use datasym::engine::{parse_program, Datum, Engine, FactDb, Program};
use rand::seq::SliceRandom;
use rand::Rng;

pub type Graph = BTreeSet<(u64, u64)>;
pub type Expected = BTreeMap<&'static str, BTreeSet<Vec<u64>>>;

pub struct Case {
    pub src: String,
    pub edges: Graph,
    pub sources: BTreeSet<u64>,
    pub expected: Expected,
}

impl Case {
    pub fn program(&self) -> Program {
        parse_program(&self.src).unwrap_or_else(|e| panic!("{e}\n{}", self.src))
    }

    pub fn edb(&self, engine: &mut Engine, program: &Program) -> FactDb {
        let mut db = FactDb::for_program(program);
        let edges: Vec<Vec<Datum>> = self
            .edges
            .iter()
            .map(|&(a, b)| vec![Datum::Number(a), Datum::Number(b)])
            .collect();
        engine.insert_rows(&mut db, "E", &edges).unwrap();
        let srcs: Vec<Vec<Datum>> = self.sources.iter().map(|&s| vec![Datum::Number(s)]).collect();
        engine.insert_rows(&mut db, "Src", &srcs).unwrap();
        db
    }
}

pub fn random_graph<R: Rng>(rng: &mut R, nodes: u64, edges: usize) -> Graph {
    (0..edges)
        .map(|_| (rng.gen_range(0..nodes), rng.gen_range(0..nodes)))
        .collect()
}

fn succ(g: &Graph) -> BTreeMap<u64, Vec<u64>> {
    let mut m: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for &(a, b) in g {
        m.entry(a).or_default().push(b);
    }
    m
}

/// Nodes reachable from `from` in one or more steps, tagged with the parity
/// of some walk length (0 even, 1 odd).
fn walks(g: &Graph, from: u64) -> BTreeSet<(u64, u64)> {
    let s = succ(g);
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([(from, 0u64)]);
    while let Some((n, p)) = queue.pop_front() {
        for &m in s.get(&n).into_iter().flatten() {
            if seen.insert((m, 1 - p)) {
                queue.push_back((m, 1 - p));
            }
        }
    }
    seen
}

fn closure(g: &Graph) -> BTreeSet<(u64, u64)> {
    let nodes: BTreeSet<u64> = g.iter().flat_map(|&(a, b)| [a, b]).collect();
    nodes
        .iter()
        .flat_map(|&a| walks(g, a).into_iter().map(move |(b, _)| (a, b)))
        .collect()
}

fn pairs(s: impl IntoIterator<Item = (u64, u64)>) -> BTreeSet<Vec<u64>> {
    s.into_iter().map(|(a, b)| vec![a, b]).collect()
}

const DECLS: &str = ".decl E(a: number, b: number)\n.decl Src(a: number)\n.input E, Src\n";

/// Transitive closure written in one of three recursion shapes, optionally
/// with mutual recursion on walk parity and a symmetric filter.
pub fn transitive_closure<R: Rng>(rng: &mut R) -> Case {
    let nodes = rng.gen_range(2..24);
    let m = rng.gen_range(1..(3 * nodes as usize));
    let edges = random_graph(rng, nodes, m);
    let mut src = String::from(DECLS);
    src.push_str(".decl P(a: number, b: number)\n.output P\nP(x, y) :- E(x, y).\n");
    src.push_str(match rng.gen_range(0..3) {
        0 => "P(x, z) :- P(x, y), E(y, z).\n",
        1 => "P(x, z) :- E(x, y), P(y, z).\n",
        _ => "P(x, z) :- P(x, y), P(y, z).\n",
    });
    let tc = closure(&edges);
    let mut expected = Expected::new();
    expected.insert("P", pairs(tc.iter().copied()));
    if rng.gen_bool(0.5) {
        src.push_str(
            ".decl Odd(a: number, b: number)\n.decl Even(a: number, b: number)\n.output Odd, Even\n\
             Odd(x, y) :- E(x, y).\nEven(x, z) :- Odd(x, y), E(y, z).\nOdd(x, z) :- Even(x, y), E(y, z).\n",
        );
        let mut odd = BTreeSet::new();
        let mut even = BTreeSet::new();
        let ns: BTreeSet<u64> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        for &a in &ns {
            for (b, p) in walks(&edges, a) {
                if p == 1 {
                    odd.insert((a, b));
                } else {
                    even.insert((a, b));
                }
            }
        }
        expected.insert("Odd", pairs(odd));
        expected.insert("Even", pairs(even));
    }
    if rng.gen_bool(0.5) {
        src.push_str(".decl Cyc(a: number, b: number)\n.output Cyc\nCyc(x, y) :- P(x, y), P(y, x), x < y.\n");
        let cyc = tc.iter().filter(|&&(a, b)| a < b && tc.contains(&(b, a))).copied();
        expected.insert("Cyc", pairs(cyc));
    }
    Case {
        src,
        edges,
        sources: BTreeSet::new(),
        expected,
    }
}

/// Reachability from sources followed by two stratified negation layers.
pub fn negation<R: Rng>(rng: &mut R) -> Case {
    let nodes = rng.gen_range(2..30);
    let m = rng.gen_range(1..(2 * nodes as usize));
    let edges = random_graph(rng, nodes, m);
    let all: Vec<u64> = (0..nodes).collect();
    let k = rng.gen_range(1..4);
    let sources: BTreeSet<u64> = all.choose_multiple(rng, k).copied().collect();
    let src = format!(
        "{DECLS}.decl N(a: number)\n.decl R(a: number)\n.decl U(a: number)\n.decl Cut(a: number, b: number)\n\
         .decl Lone(a: number)\n.output R, U, Cut, Lone\n\
         N(x) :- E(x, _).\nN(y) :- E(_, y).\nR(x) :- Src(x).\nR(y) :- R(x), E(x, y).\n\
         U(x) :- N(x), !R(x).\nCut(x, y) :- E(x, y), U(x), !U(y).\nLone(x) :- U(x), !Cut(x, _).\n"
    );
    let s = succ(&edges);
    let mut reach: BTreeSet<u64> = sources.clone();
    let mut queue: VecDeque<u64> = sources.iter().copied().collect();
    while let Some(n) = queue.pop_front() {
        for &m in s.get(&n).into_iter().flatten() {
            if reach.insert(m) {
                queue.push_back(m);
            }
        }
    }
    let ns: BTreeSet<u64> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    let u: BTreeSet<u64> = ns.difference(&reach).copied().collect();
    let cut: BTreeSet<(u64, u64)> = edges
        .iter()
        .filter(|(a, b)| u.contains(a) && !u.contains(b))
        .copied()
        .collect();
    let lone = u.iter().filter(|x| !cut.iter().any(|(a, _)| a == *x));
    let mut expected = Expected::new();
    expected.insert("R", reach.iter().map(|&x| vec![x]).collect());
    expected.insert("U", u.iter().map(|&x| vec![x]).collect());
    expected.insert("Cut", pairs(cut.iter().copied()));
    expected.insert("Lone", lone.map(|&x| vec![x]).collect());
    Case {
        src,
        edges,
        sources,
        expected,
    }
}

pub fn numbers(rows: &BTreeSet<Vec<Datum>>) -> BTreeSet<Vec<u64>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|d| match d {
                    Datum::Number(n) => *n,
                    other => panic!("not a number: {other}"),
                })
                .collect()
        })
        .collect()
}

/// Checks semi-naive against naive evaluation and both against the graph
/// oracle. Returns a description of the first mismatch.
pub fn check_case(case: &Case) -> Result<(), String> {
    let program = case.program();
    let mut engine = Engine::new();
    let edb = case.edb(&mut engine, &program);
    let semi = engine.evaluate(&program, edb.clone()).map_err(|e| e.to_string())?;
    let naive = engine.naive_evaluate(&program, edb).map_err(|e| e.to_string())?;
    for rel in program.idb_relations() {
        let a = engine.rows(&semi, rel).unwrap();
        let b = engine.rows(&naive, rel).unwrap();
        if a != b {
            return Err(format!("{rel}: semi-naive and naive differ\n{}", case.src));
        }
    }
    for (rel, want) in &case.expected {
        let got = numbers(&engine.rows(&semi, rel).unwrap());
        if &got != want {
            return Err(format!("{rel}: got {got:?}, oracle {want:?}\n{}", case.src));
        }
    }
    Ok(())
}

fn sym(s: String) -> Datum {
    Datum::Symbol(s)
}

/// A random points-to fact base over a handful of variables, heaps, fields
/// and methods.
pub fn random_points_to<R: Rng>(rng: &mut R, size: usize) -> Rows {
    let var = |r: &mut R| sym(format!("v{}", r.gen_range(0..8)));
    let heap = |r: &mut R| sym(format!("h{}", r.gen_range(0..5)));
    let meth = |r: &mut R| sym(format!("m{}", r.gen_range(0..4)));
    let fld = |r: &mut R| sym(format!("f{}", r.gen_range(0..2)));
    let ty = |r: &mut R| sym(format!("T{}", r.gen_range(0..2)));
    let sig = |r: &mut R| sym(format!("s{}", r.gen_range(0..2)));
    let invo = |r: &mut R| sym(format!("i{}", r.gen_range(0..4)));
    let mut rows = Rows::new();
    rows.insert("EntryMethod", vec![vec![sym("m0".into())]]);
    for _ in 0..size {
        let (rel, row) = match rng.gen_range(0..11) {
            0 => ("Alloc", vec![var(rng), heap(rng), meth(rng)]),
            1 => ("Move", vec![var(rng), var(rng)]),
            2 => ("Store", vec![var(rng), fld(rng), var(rng)]),
            3 => ("Load", vec![var(rng), var(rng), fld(rng)]),
            4 => ("VCall", vec![var(rng), sig(rng), invo(rng), meth(rng)]),
            5 => ("HeapType", vec![heap(rng), ty(rng)]),
            6 => ("MethodLookup", vec![ty(rng), sig(rng), meth(rng)]),
            7 => ("ThisVar", vec![meth(rng), var(rng)]),
            8 => (
                "FormalArg",
                vec![meth(rng), Datum::Number(rng.gen_range(0..2)), var(rng)],
            ),
            9 => (
                "ActualArg",
                vec![invo(rng), Datum::Number(rng.gen_range(0..2)), var(rng)],
            ),
            _ => ("ActualReturn", vec![invo(rng), var(rng)]),
        };
        rows.entry(rel).or_default().push(row);
    }
    rows
}

pub fn fact_db(engine: &mut Engine, program: &Program, rows: &Rows) -> FactDb {
    let mut db = FactDb::for_program(program);
    for (rel, rs) in rows {
        engine.insert_rows(&mut db, rel, rs).unwrap();
    }
    db
}
