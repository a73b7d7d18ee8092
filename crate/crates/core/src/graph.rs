//! Reachability over the rules automaton, ignoring actions.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Action, Edge, GameDescription, Name};

/// Adjacency by edge index.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    pub outgoing: BTreeMap<Name, Vec<usize>>,
    pub incoming: BTreeMap<Name, Vec<usize>>,
}

impl Graph {
    pub fn new(edges: &[Edge]) -> Graph {
        let mut g = Graph::default();
        for (i, e) in edges.iter().enumerate() {
            g.outgoing.entry(e.from.clone()).or_default().push(i);
            g.incoming.entry(e.to.clone()).or_default().push(i);
        }
        g
    }

    pub fn of(game: &GameDescription) -> Graph {
        Graph::new(&game.edges)
    }

    pub fn out_edges(&self, node: &str) -> &[usize] {
        self.outgoing.get(node).map(Vec::as_slice).unwrap_or_default()
    }

    pub fn in_edges(&self, node: &str) -> &[usize] {
        self.incoming.get(node).map(Vec::as_slice).unwrap_or_default()
    }

    /// Nodes reachable from `start` (inclusive).
    pub fn forward(&self, edges: &[Edge], start: &Name) -> BTreeSet<Name> {
        self.search(start, |n| self.out_edges(n).iter().map(|&i| &edges[i].to))
    }

    /// Nodes from which `target` is reachable (inclusive).
    pub fn backward(&self, edges: &[Edge], target: &Name) -> BTreeSet<Name> {
        self.search(target, |n| self.in_edges(n).iter().map(|&i| &edges[i].from))
    }

    fn search<'a, I>(&'a self, start: &Name, next: impl Fn(&Name) -> I) -> BTreeSet<Name>
    where
        I: Iterator<Item = &'a Name>,
    {
        let mut seen = BTreeSet::from([start.clone()]);
        let mut stack = vec![start.clone()];
        while let Some(n) = stack.pop() {
            for m in next(&n) {
                if seen.insert(m.clone()) {
                    stack.push(m.clone());
                }
            }
        }
        seen
    }

    /// Indices of edges lying on some walk from `from` to `to`.
    pub fn reduced(&self, edges: &[Edge], from: &Name, to: &Name) -> Vec<usize> {
        let fwd = self.forward(edges, from);
        let bwd = self.backward(edges, to);
        edges.iter().enumerate().filter(|(_, e)| fwd.contains(&e.from) && bwd.contains(&e.to)).map(|(i, _)| i).collect()
    }
}

/// Nodes a reachability check at `from -> to` may visit, including `from`.
pub fn reach_nodes(graph: &Graph, edges: &[Edge], from: &Name, to: &Name) -> BTreeSet<Name> {
    let mut nodes = BTreeSet::from([from.clone()]);
    for i in graph.reduced(edges, from, to) {
        nodes.insert(edges[i].from.clone());
        nodes.insert(edges[i].to.clone());
    }
    nodes
}

/// Edge indices whose reachability check can re-enter its own source node.
pub fn recursive_reach_edges(edges: &[Edge]) -> Vec<usize> {
    let graph = Graph::new(edges);
    let mut deps: BTreeMap<Name, BTreeSet<Name>> = BTreeMap::new();
    let mut checks = Vec::new();
    for (i, e) in edges.iter().enumerate() {
        if let Action::Reach { from, to, .. } = &e.action {
            let nodes = reach_nodes(&graph, edges, from, to);
            deps.entry(e.from.clone()).or_default().extend(nodes.iter().cloned());
            checks.push((i, nodes));
        }
    }
    let mut out = Vec::new();
    for (i, nodes) in checks {
        let source = &edges[i].from;
        let mut seen: BTreeSet<&Name> = nodes.iter().collect();
        let mut stack: Vec<&Name> = nodes.iter().collect();
        let mut recursive = false;
        while let Some(n) = stack.pop() {
            if n == source {
                recursive = true;
                break;
            }
            for m in deps.get(n).into_iter().flatten() {
                if seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        if recursive {
            out.push(i);
        }
    }
    out
}
