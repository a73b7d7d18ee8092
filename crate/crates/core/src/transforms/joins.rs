//! Passes that merge edges and nodes without touching expressions.

use std::collections::BTreeSet;

use crate::graph::Graph;
use crate::model::{Action, Edge, GameDescription, Name};

use super::pinned_nodes;

fn exclusive(a: &Action, b: &Action) -> bool {
    match (a, b) {
        (Action::Compare { lhs: l1, rhs: r1, op: o1 }, Action::Compare { lhs: l2, rhs: r2, op: o2 }) => {
            o1.negate() == *o2 && ((l1 == l2 && r1 == r2) || (l1 == r2 && r1 == l2))
        }
        (Action::Reach { from: f1, to: t1, negated: n1 }, Action::Reach { from: f2, to: t2, negated: n2 }) => {
            f1 == f2 && t1 == t2 && n1 != n2
        }
        _ => false,
    }
}

/// Parallel edges with a condition and its negation become one skip edge.
pub(super) fn join_exclusive_edges(g: &GameDescription) -> GameDescription {
    let mut joined = BTreeSet::new();
    let mut dropped = BTreeSet::new();
    for i in 0..g.edges.len() {
        if joined.contains(&i) || dropped.contains(&i) {
            continue;
        }
        let partner = (i + 1..g.edges.len()).find(|&j| {
            !joined.contains(&j)
                && !dropped.contains(&j)
                && g.edges[j].from == g.edges[i].from
                && g.edges[j].to == g.edges[i].to
                && exclusive(&g.edges[i].action, &g.edges[j].action)
        });
        if let Some(j) = partner {
            joined.insert(i);
            dropped.insert(j);
        }
    }
    let mut out = g.clone();
    out.edges = g
        .edges
        .iter()
        .enumerate()
        .filter(|(k, _)| !dropped.contains(k))
        .map(|(k, e)| {
            let action = if joined.contains(&k) { Action::Empty } else { e.action.clone() };
            Edge { action, ..e.clone() }
        })
        .collect();
    out
}

fn rename_endpoints(edges: &mut [Edge], from: &Name, to: &Name, sources: bool, targets: bool) {
    for e in edges {
        if sources && e.from == *from {
            e.from = to.clone();
        }
        if targets && e.to == *from {
            e.to = to.clone();
        }
    }
}

/// Two edges leaving the same node with the same action are joined: the
/// second target is folded into the first when nothing else enters it,
/// otherwise reached from the first through a skip edge.
pub(super) fn join_fork_prefixes(g: &GameDescription) -> GameDescription {
    let mut out = g.clone();
    while let Some(next) = fork_prefix_once(&out) {
        out = next;
    }
    out
}

fn fork_prefix_once(g: &GameDescription) -> Option<GameDescription> {
    let graph = Graph::of(g);
    let pinned = pinned_nodes(g);
    let movable = |n: &Name, source: &Name| n != source && !pinned.contains(n) && graph.in_edges(n).len() == 1;
    for (node, outs) in &graph.outgoing {
        for (x, &i) in outs.iter().enumerate() {
            for &j in &outs[x + 1..] {
                let (a, b) = (&g.edges[i], &g.edges[j]);
                if a.action != b.action {
                    continue;
                }
                let mut out = g.clone();
                if a.to == b.to {
                    out.edges.remove(j);
                    return Some(out);
                }
                let skip = a.action == Action::Empty || a.action.is_player_assignment();
                if skip || !movable(&a.to, node) {
                    continue;
                }
                out.edges.remove(j);
                if movable(&b.to, node) {
                    rename_endpoints(&mut out.edges, &b.to, &a.to, true, false);
                } else {
                    out.edges.insert(j, Edge::new(a.to.clone(), b.to.clone(), Action::Empty));
                }
                return Some(out);
            }
        }
    }
    None
}

/// Two nodes whose only way out is the same action into the same node are
/// merged.
pub(super) fn join_fork_suffixes(g: &GameDescription) -> GameDescription {
    let mut out = g.clone();
    while let Some(next) = fork_suffix_once(&out) {
        out = next;
    }
    out
}

fn fork_suffix_once(g: &GameDescription) -> Option<GameDescription> {
    let graph = Graph::of(g);
    let pinned = pinned_nodes(g);
    for (target, ins) in &graph.incoming {
        let single_exit = |i: usize| {
            let n = &g.edges[i].from;
            n != target && !pinned.contains(n) && graph.out_edges(n).len() == 1
        };
        for (x, &i) in ins.iter().enumerate() {
            if !single_exit(i) {
                continue;
            }
            for &j in &ins[x + 1..] {
                let (a, b) = (&g.edges[i], &g.edges[j]);
                if a.from == b.from || a.action != b.action || !single_exit(j) {
                    continue;
                }
                let mut out = g.clone();
                out.edges.remove(j);
                rename_endpoints(&mut out.edges, &b.from, &a.from, false, true);
                return Some(out);
            }
        }
    }
    None
}

/// Removes skip edges by merging their endpoints when one of them has no
/// other connection on that side.
pub(super) fn compact_skip_edges(g: &GameDescription) -> GameDescription {
    let mut out = g.clone();
    while let Some(next) = compact_skip_once(&out) {
        out = next;
    }
    out
}

fn compact_skip_once(g: &GameDescription) -> Option<GameDescription> {
    let graph = Graph::of(g);
    let pinned = pinned_nodes(g);
    for (i, e) in g.edges.iter().enumerate() {
        if e.action != Action::Empty {
            continue;
        }
        let mut out = g.clone();
        out.edges.remove(i);
        if e.from == e.to {
            return Some(out);
        }
        if !pinned.contains(&e.from) && graph.out_edges(&e.from).len() == 1 {
            rename_endpoints(&mut out.edges, &e.from, &e.to, false, true);
            return Some(out);
        }
        if !pinned.contains(&e.to) && graph.in_edges(&e.to).len() == 1 {
            rename_endpoints(&mut out.edges, &e.to, &e.from, true, false);
            return Some(out);
        }
    }
    None
}
