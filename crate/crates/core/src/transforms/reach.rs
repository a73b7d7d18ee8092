//! Passes over reachability checks.

use std::collections::{BTreeMap, BTreeSet};

use crate::diag::has_errors;
use crate::graph::{reach_nodes, Graph};
use crate::model::{builtin, strip_casts, Action, Edge, GameDescription, Name};
use crate::validate::validate_static;

use super::{Namer, PassId, ReadSets, TransformError};

/// Shrinks `? a -> b` past a lone unconditional first or last step of every
/// walk from `a` to `b`. A check whose endpoints meet is decided.
pub(super) fn compact_reachability(g: &GameDescription) -> GameDescription {
    let mut out = g.clone();
    let mut i = 0;
    while i < out.edges.len() {
        let Action::Reach { from, to, negated } = out.edges[i].action.clone() else {
            i += 1;
            continue;
        };
        if from == to {
            if negated {
                out.edges.remove(i);
            } else {
                out.edges[i].action = Action::Empty;
                i += 1;
            }
            continue;
        }
        let graph = Graph::of(&out);
        let sub = graph.reduced(&out.edges, &from, &to);
        let lone = |pick: &dyn Fn(&Edge) -> bool| -> Option<&Edge> {
            let mut it = sub.iter().map(|&j| &out.edges[j]).filter(|e| pick(e));
            match (it.next(), it.next()) {
                (Some(e), None) if e.action.is_unconditional_noop() && e.from != e.to => Some(e),
                _ => None,
            }
        };
        let new_from = lone(&|e| e.from == from).map(|e| e.to.clone());
        let new_to = lone(&|e| e.to == to).map(|e| e.from.clone());
        if let Some(f) = new_from {
            out.edges[i].action = Action::Reach { from: f, to, negated };
        } else if let Some(t) = new_to {
            out.edges[i].action = Action::Reach { from, to: t, negated };
        } else {
            i += 1;
        }
    }
    out
}

/// Replaces a positive check by a copy of its subautomaton walked inline.
///
/// Applies when no other check uses the subautomaton, it has no tags and no
/// player change, and every variable it writes is rewritten after the check
/// before it is read again and before the move ends.
pub(super) fn inline_reachability(g: &GameDescription) -> Result<GameDescription, TransformError> {
    let mut out = g.clone();
    let mut blocked = BTreeSet::new();
    let mut any = false;
    loop {
        let candidate = out.edges.iter().enumerate().find_map(|(i, e)| match &e.action {
            Action::Reach { from, to, negated: false }
                if !blocked.contains(&(from.clone(), to.clone(), e.to.clone())) =>
            {
                Some((i, from.clone(), to.clone()))
            }
            _ => None,
        });
        let Some((i, from, to)) = candidate else {
            break;
        };
        any = true;
        match inline_one(&out, i, &from, &to) {
            Some(next) => out = next,
            None => {
                blocked.insert((from, to, out.edges[i].to.clone()));
            }
        }
    }
    if any && out == *g {
        return Err(TransformError::PassPreconditionUnmet {
            pass: PassId::InlineReachability,
            reason: "variables written inside every subautomaton are read before being reassigned".into(),
        });
    }
    Ok(out)
}

fn inline_one(g: &GameDescription, i: usize, from: &Name, to: &Name) -> Option<GameDescription> {
    let check = &g.edges[i];
    let mut out = g.clone();
    if from == to {
        out.edges[i].action = Action::Empty;
        return Some(out);
    }
    let graph = Graph::of(g);
    // a subautomaton shared with another check would stay alive and grow the graph
    let nodes = reach_nodes(&graph, &g.edges, from, to);
    let shared = g.edges.iter().enumerate().any(|(j, e)| match &e.action {
        Action::Reach { from: f, to: t, .. } if j != i => !reach_nodes(&graph, &g.edges, f, t).is_disjoint(&nodes),
        _ => false,
    });
    if shared {
        return None;
    }
    let sub = graph.reduced(&g.edges, from, to);
    let mut written = BTreeSet::new();
    for &j in &sub {
        let a = &g.edges[j].action;
        if matches!(a, Action::Tag(_) | Action::VarTag(_)) || a.is_player_assignment() {
            return None;
        }
        written.extend(a.assigned_root().cloned());
    }
    let reads = ReadSets::new(g);
    for x in &written {
        if builtin::SPECIAL_VARIABLES.contains(&x.as_str()) || !dead_until_rewritten(g, &graph, &reads, &check.to, x) {
            return None;
        }
    }
    let mut namer = Namer::of(g);
    let mut copy: BTreeMap<Name, Name> = BTreeMap::new();
    let mut node = |n: &Name, namer: &mut Namer| {
        if n == to {
            return check.to.clone();
        }
        copy.entry(n.clone()).or_insert_with(|| namer.fresh(n)).clone()
    };
    let mut inlined = vec![Edge { action: Action::Empty, to: node(from, &mut namer), ..check.clone() }];
    for &j in &sub {
        let e = &g.edges[j];
        if e.from == *to {
            continue;
        }
        inlined.push(Edge { from: node(&e.from, &mut namer), to: node(&e.to, &mut namer), ..e.clone() });
    }
    out.edges.splice(i..=i, inlined);
    (!has_errors(&validate_static(&out))).then_some(out)
}

/// Whether every walk from `start` overwrites `x` before reading it and
/// before any player change.
fn dead_until_rewritten(g: &GameDescription, graph: &Graph, reads: &ReadSets, start: &Name, x: &Name) -> bool {
    let mut seen = BTreeSet::from([start.clone()]);
    let mut stack = vec![start.clone()];
    while let Some(n) = stack.pop() {
        for &j in graph.out_edges(&n) {
            let e = &g.edges[j];
            if reads.of(&e.action).contains(x) || e.action.is_player_assignment() {
                return false;
            }
            let overwrites =
                matches!(&e.action, Action::Assign { lhs, .. } if strip_casts(lhs).as_ref_name() == Some(x));
            if !overwrites && seen.insert(e.to.clone()) {
                stack.push(e.to.clone());
            }
        }
    }
    true
}
