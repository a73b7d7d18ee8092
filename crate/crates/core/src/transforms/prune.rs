//! Removal of dead edges, constants and variables.

use std::collections::BTreeSet;

use crate::graph::Graph;
use crate::model::{builtin, Action, Edge, Expr, ExprKind, GameDescription, Name, Value};

/// Keeps the edges that can be walked from `begin` (directly or inside a
/// reachability check) and that lead on to `end` or to a check target.
pub(super) fn prune_unreachable_nodes(g: &GameDescription) -> GameDescription {
    let graph = Graph::of(g);
    let begin = Name::new(builtin::BEGIN);
    let mut fwd = BTreeSet::from([begin.clone()]);
    let mut stack = vec![begin];
    while let Some(n) = stack.pop() {
        for &i in graph.out_edges(&n) {
            let e = &g.edges[i];
            let mut next = vec![&e.to];
            if let Action::Reach { from, .. } = &e.action {
                next.push(from);
            }
            for m in next {
                if fwd.insert(m.clone()) {
                    stack.push(m.clone());
                }
            }
        }
    }
    let mut targets = vec![Name::new(builtin::END)];
    for e in &g.edges {
        if let Action::Reach { to, .. } = &e.action {
            targets.push(to.clone());
        }
    }
    let mut bwd = BTreeSet::new();
    for t in targets {
        if !bwd.contains(&t) {
            bwd.extend(graph.backward(&g.edges, &t));
        }
    }
    let mut out = g.clone();
    out.edges.retain(|e| fwd.contains(&e.from) && bwd.contains(&e.to));
    out
}

/// References inside the keys of an assignment target.
fn target_key_refs(lhs: &Expr, out: &mut BTreeSet<Name>) {
    match &lhs.kind {
        ExprKind::Ref(_) => {}
        ExprKind::Access(base, key) => {
            target_key_refs(base, out);
            out.extend(key.refs());
        }
        ExprKind::Cast(_, inner) => target_key_refs(inner, out),
    }
}

fn value_refs(v: &Value, out: &mut BTreeSet<Name>) {
    match v {
        Value::Symbol(s) => {
            out.insert(s.clone());
        }
        Value::Map { default, entries } => {
            value_refs(default, out);
            for (_, v) in entries {
                value_refs(v, out);
            }
        }
    }
}

/// Drops constants nobody mentions and variables nobody reads. Writes to a
/// dropped variable become skips.
pub(super) fn prune_unused_consts_vars(g: &GameDescription) -> GameDescription {
    let mut out = g.clone();
    loop {
        let mut used = BTreeSet::new();
        for e in &out.edges {
            match &e.action {
                Action::Compare { lhs, rhs, .. } => {
                    used.extend(lhs.refs());
                    used.extend(rhs.refs());
                }
                Action::Assign { lhs, rhs } => {
                    target_key_refs(lhs, &mut used);
                    used.extend(rhs.refs());
                }
                Action::AnyAssign { lhs, .. } => target_key_refs(lhs, &mut used),
                Action::VarTag(v) => {
                    used.insert(v.clone());
                }
                _ => {}
            }
        }
        for d in out.constants.values() {
            value_refs(&d.value, &mut used);
        }
        for d in out.variables.values() {
            value_refs(&d.init, &mut used);
        }
        let dead_consts: Vec<Name> = out.constants.keys().filter(|c| !used.contains(*c)).cloned().collect();
        let dead_vars: BTreeSet<Name> = out
            .variables
            .keys()
            .filter(|v| !used.contains(*v) && !builtin::SPECIAL_VARIABLES.contains(&v.as_str()))
            .cloned()
            .collect();
        if dead_consts.is_empty() && dead_vars.is_empty() {
            return out;
        }
        for c in dead_consts {
            out.constants.remove(&c);
        }
        for v in &dead_vars {
            out.variables.remove(v);
        }
        for e in &mut out.edges {
            if e.action.assigned_root().is_some_and(|r| dead_vars.contains(r)) {
                *e = Edge { action: Action::Empty, ..e.clone() };
            }
        }
    }
}
