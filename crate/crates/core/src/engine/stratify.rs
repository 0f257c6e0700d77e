// SPDX-License-Identifier: Apache-2.0

//! Dependency analysis and stratification.

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rustc_hash::FxHashMap;

use super::ast::{Literal, Program};
use super::error::{EngineError, Result};
use super::functor::Registry;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratum {
    /// Mutually recursive IDB relations, in declaration order.
    pub relations: Vec<String>,
    /// Indices into `Program::rules` of the rules deriving these relations.
    pub rules: Vec<usize>,
    /// Whether some rule reads a relation of this stratum.
    pub recursive: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StratumPlan {
    pub strata: Vec<Stratum>,
}

impl StratumPlan {
    pub fn stratum_of(&self, relation: &str) -> Option<usize> {
        self.strata
            .iter()
            .position(|s| s.relations.iter().any(|r| r == relation))
    }
}

/// Orders IDB relations so that every negative dependency (negation or a
/// non-monotonic functor) points to a strictly earlier stratum.
pub fn stratify(program: &Program, functors: &Registry) -> Result<StratumPlan> {
    let mut graph: DiGraph<&str, bool> = DiGraph::new();
    let mut node: FxHashMap<&str, NodeIndex> = FxHashMap::default();
    for name in program.relations.keys() {
        node.insert(name, graph.add_node(name));
    }
    for rule in &program.rules {
        let non_monotonic = rule
            .body
            .iter()
            .flat_map(|l| l.calls())
            .chain(rule.heads.iter().flat_map(|h| {
                let mut out = Vec::new();
                h.args.iter().for_each(|t| t.calls(&mut out));
                out
            }))
            .any(|f| !functors.is_monotonic(&f));
        for h in &rule.heads {
            let to = node[h.relation.as_str()];
            for lit in &rule.body {
                if let Some(a) = lit.atom() {
                    let negative = non_monotonic || matches!(lit, Literal::Negative(_));
                    graph.add_edge(node[a.relation.as_str()], to, negative);
                }
            }
        }
        // Heads of one rule are derived together, so they must share a stratum.
        for w in rule.heads.windows(2) {
            let (a, b) = (node[w[0].relation.as_str()], node[w[1].relation.as_str()]);
            graph.add_edge(a, b, false);
            graph.add_edge(b, a, false);
        }
    }

    let sccs = tarjan_scc(&graph);
    let mut component = vec![0usize; graph.node_count()];
    for (i, scc) in sccs.iter().enumerate() {
        for n in scc {
            component[n.index()] = i;
        }
    }
    for e in graph.edge_indices() {
        let (a, b) = graph.edge_endpoints(e).unwrap();
        if graph[e] && component[a.index()] == component[b.index()] {
            return Err(EngineError::Stratification {
                from: graph[a].to_string(),
                to: graph[b].to_string(),
            });
        }
    }

    let mut plan = StratumPlan::default();
    // tarjan_scc yields components in reverse topological order.
    for scc in sccs.iter().rev() {
        let mut members: Vec<usize> = scc.iter().map(|n| n.index()).collect();
        members.sort_unstable();
        let relations: Vec<String> = members
            .iter()
            .map(|i| graph[NodeIndex::new(*i)].to_string())
            .filter(|r| !program.is_edb(r))
            .collect();
        if relations.is_empty() {
            continue;
        }
        let rules: Vec<usize> = program
            .rules
            .iter()
            .enumerate()
            .filter(|(_, r)| relations.contains(&r.heads[0].relation))
            .map(|(i, _)| i)
            .collect();
        let recursive = rules.iter().any(|&i| {
            program.rules[i]
                .body
                .iter()
                .filter_map(|l| l.atom())
                .any(|a| relations.contains(&a.relation))
        });
        plan.strata.push(Stratum {
            relations,
            rules,
            recursive,
        });
    }
    Ok(plan)
}
