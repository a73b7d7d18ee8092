//! Passes that rewrite conditions and assignments.

use std::collections::{BTreeMap, BTreeSet};

use crate::diag::has_errors;
use crate::graph::Graph;
use crate::model::{
    builtin, canonicalize_value, infer_expr_type, map_lookup, strip_casts, type_equal, Action, CompareOp, Edge, Env,
    Expr, ExprKind, GameDescription, Name, TypeExpr, Value,
};
use crate::validate::validate_static;

use super::analysis::{analyze, ConstantValues, Def, Knowledge, ReachingDefinitions};
use super::{arrow_parts, is_symbol_literal, pinned_nodes, reach_edges, Namer, ReadSets, TransformError};

fn has_cast(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Ref(_) => false,
        ExprKind::Access(b, k) => has_cast(b) || has_cast(k),
        ExprKind::Cast(..) => true,
    }
}

fn literal<'a>(g: &GameDescription, e: &'a Expr) -> Option<&'a Name> {
    e.as_ref_name().filter(|n| is_symbol_literal(g, n))
}

/// Rewrites the keys of an assignment target, leaving its root alone.
fn map_target_keys(lhs: &Expr, f: &mut impl FnMut(&Expr) -> Expr) -> Expr {
    let kind = match &lhs.kind {
        ExprKind::Ref(n) => ExprKind::Ref(n.clone()),
        ExprKind::Access(base, key) => ExprKind::Access(Box::new(map_target_keys(base, f)), Box::new(f(key))),
        ExprKind::Cast(t, inner) => ExprKind::Cast(t.clone(), Box::new(map_target_keys(inner, f))),
    };
    Expr::new(kind, lhs.span)
}

/// Applies `f` to every expression the action reads.
fn map_reads(a: &Action, f: &mut impl FnMut(&Expr) -> Expr) -> Action {
    match a {
        Action::Compare { lhs, rhs, op } => Action::Compare { lhs: f(lhs), rhs: f(rhs), op: *op },
        Action::Assign { lhs, rhs } => Action::Assign { lhs: map_target_keys(lhs, f), rhs: f(rhs) },
        Action::AnyAssign { lhs, domain } => Action::AnyAssign { lhs: map_target_keys(lhs, f), domain: domain.clone() },
        other => other.clone(),
    }
}

/// `x == 1; x == 2` over `{1, 2, 3}` becomes `x != 3`: parallel equalities
/// against symbols are replaced by a chain of the complementary
/// inequalities when that chain is shorter.
pub(super) fn compact_comparisons(g: &GameDescription) -> GameDescription {
    let (env, _) = Env::new(g);
    let mut namer = Namer::of(g);
    let eq_literal = |a: &Action| -> Option<(Expr, Name)> {
        let Action::Compare { lhs, rhs, op: CompareOp::Eq } = a else {
            return None;
        };
        let (e, s) = match (literal(g, lhs), literal(g, rhs)) {
            (None, Some(s)) => (lhs, s),
            (Some(s), None) => (rhs, s),
            _ => return None,
        };
        (!has_cast(e)).then(|| (e.clone(), s.clone()))
    };

    // (from, to, compared expression, [(edge, literal)])
    type Group = (Name, Name, Expr, Vec<(usize, Name)>);
    let mut groups: Vec<Group> = Vec::new();
    for (i, edge) in g.edges.iter().enumerate() {
        if let Some((e, s)) = eq_literal(&edge.action) {
            match groups.iter_mut().find(|(f, t, x, _)| *f == edge.from && *t == edge.to && *x == e) {
                Some(group) => group.3.push((i, s)),
                None => groups.push((edge.from.clone(), edge.to.clone(), e, vec![(i, s)])),
            }
        }
    }

    let mut replace: BTreeMap<usize, Vec<Edge>> = BTreeMap::new();
    let mut drop = BTreeSet::new();
    for (from, to, e, members) in groups {
        if members.len() < 2 {
            continue;
        }
        let Ok(TypeExpr::Set(domain)) = infer_expr_type(&e, &env) else {
            continue;
        };
        let chosen: BTreeSet<&Name> = members.iter().map(|(_, s)| s).collect();
        if !chosen.iter().all(|s| domain.contains(s)) {
            continue;
        }
        let rest: Vec<&Name> = domain.iter().filter(|s| !chosen.contains(s)).collect();
        if rest.len() >= members.len() {
            continue;
        }
        let mut chain = Vec::new();
        if rest.is_empty() {
            chain.push(Edge::new(from.clone(), to.clone(), Action::Empty));
        } else {
            let mut at = from.clone();
            for (k, s) in rest.iter().enumerate() {
                let next = if k + 1 == rest.len() { to.clone() } else { namer.fresh(&from) };
                let action = Action::Compare { lhs: e.clone(), rhs: Expr::reference((*s).clone()), op: CompareOp::Ne };
                chain.push(Edge::new(at, next.clone(), action));
                at = next;
            }
        }
        replace.insert(members[0].0, chain);
        drop.extend(members[1..].iter().map(|(i, _)| *i));
    }

    let mut out = g.clone();
    out.edges.clear();
    for (i, e) in g.edges.iter().enumerate() {
        if let Some(chain) = replace.remove(&i) {
            out.edges.extend(chain);
        } else if !drop.contains(&i) {
            out.edges.push(e.clone());
        }
    }
    out
}

/// Replaces reads of variables with a known value, and accesses into
/// constants with known keys, by the symbols they denote. Comparisons
/// between two symbols are then decided.
pub(super) fn propagate_constants(g: &GameDescription) -> Result<GameDescription, TransformError> {
    let cv = ConstantValues::new(g);
    let know = analyze(g, &cv)?;
    let mut out = g.clone();
    out.edges.clear();
    for e in &g.edges {
        let k = &know[&e.from];
        if *k == Knowledge::Unreached {
            out.edges.push(e.clone());
            continue;
        }
        let mut fold = |x: &Expr| {
            x.rewrite(&mut |y: Expr| match cv.eval(&y, k) {
                Some(Value::Symbol(s)) if is_symbol_literal(g, &s) && y.as_ref_name() != Some(&s) => {
                    Expr::new(ExprKind::Ref(s), y.span)
                }
                _ => y,
            })
        };
        let action = map_reads(&e.action, &mut fold);
        let action = match &action {
            Action::Compare { lhs, rhs, op } => match (literal(g, lhs), literal(g, rhs)) {
                (Some(a), Some(b)) if (a == b) == (*op == CompareOp::Eq) => Action::Empty,
                (Some(_), Some(_)) => continue,
                _ => action,
            },
            _ => action,
        };
        out.edges.push(Edge { action, ..e.clone() });
    }
    Ok(out)
}

/// `c1[c2[k]]` over constants becomes `_c1_c2[k]` with a new constant
/// holding the composition.
pub(super) fn merge_accesses(g: &GameDescription) -> GameDescription {
    let (env, _) = Env::new(g);
    let mut namer = Namer::of(g);
    let mut out = g.clone();
    let mut merged: BTreeMap<(Name, Name), Option<Name>> = BTreeMap::new();

    let mut compose = |c1: &Name, c2: &Name, out: &mut GameDescription| -> Option<Name> {
        if let Some(done) = merged.get(&(c1.clone(), c2.clone())) {
            return done.clone();
        }
        let result = (|| {
            let (t1, v1) = env.constants.get(c1)?;
            let (t2, v2) = env.constants.get(c2)?;
            let (TypeExpr::Arrow(src2, _), TypeExpr::Arrow(src1, dest1)) = (t2, t1) else {
                return None;
            };
            let keys = src2.as_set()?;
            let inner = src1.as_set()?;
            let mut entries = Vec::with_capacity(keys.len());
            for k in keys {
                let Value::Symbol(mid) = map_lookup(v2, k) else {
                    return None;
                };
                if !inner.contains(mid) {
                    return None;
                }
                entries.push((k.clone(), map_lookup(v1, mid).clone()));
            }
            let default = entries.first()?.1.clone();
            let resolved = TypeExpr::Arrow(src2.clone(), dest1.clone());
            let value = canonicalize_value(&resolved, &Value::map(default, entries)).ok()?;
            let (source, _) = arrow_parts(g, &g.constants[c2].ty)?;
            let (_, dest) = arrow_parts(g, &g.constants[c1].ty)?;
            let name = namer.fresh(&format!("{c1}_{c2}"));
            out.add_constant(name.clone(), TypeExpr::arrow(source, dest), value);
            Some(name)
        })();
        merged.insert((c1.clone(), c2.clone()), result.clone());
        result
    };

    let edges = std::mem::take(&mut out.edges);
    for e in edges {
        let action = e.action.map_exprs(&mut |x: &Expr| {
            x.rewrite(&mut |y: Expr| {
                let ExprKind::Access(base, key) = &y.kind else {
                    return y;
                };
                let (Some(c1), ExprKind::Access(inner, k)) = (base.as_ref_name(), &key.kind) else {
                    return y;
                };
                let Some(c2) = inner.as_ref_name() else {
                    return y;
                };
                if !g.constants.contains_key(c1) || !g.constants.contains_key(c2) {
                    return y;
                }
                match compose(c1, c2, &mut out) {
                    Some(name) => Expr::new(ExprKind::Access(Box::new(Expr::reference(name)), k.clone()), y.span),
                    None => y,
                }
            })
        });
        out.edges.push(Edge { action, ..e });
    }
    out
}

/// `x == x` and `x = x` become skips; `x != x` edges disappear.
pub(super) fn skip_self_assign_compare(g: &GameDescription) -> GameDescription {
    let mut out = g.clone();
    out.edges.clear();
    for e in &g.edges {
        let action = match &e.action {
            Action::Compare { lhs, rhs, op } if lhs == rhs => match op {
                CompareOp::Eq => Action::Empty,
                CompareOp::Ne => continue,
            },
            Action::Assign { lhs, rhs } if lhs == rhs && !e.action.is_player_assignment() => Action::Empty,
            other => other.clone(),
        };
        out.edges.push(Edge { action, ..e.clone() });
    }
    out
}

/// Inlines `x = expr` into the reads of `x` it reaches, when every such read
/// sees only this definition, no variable of `expr` changes in between and
/// the old value of `x` is never read again.
pub(super) fn inline_assignment(g: &GameDescription) -> Result<GameDescription, TransformError> {
    let mut cur = g.clone();
    let mut tried = BTreeSet::new();
    while let Some(next) = inline_one(&cur, &mut tried)? {
        cur = next;
    }
    Ok(cur)
}

fn inline_one(g: &GameDescription, tried: &mut BTreeSet<usize>) -> Result<Option<GameDescription>, TransformError> {
    let graph = Graph::of(g);
    let in_checks = reach_edges(g, &graph);
    let reads = ReadSets::new(g);
    let mut defs = None;
    for (i, e) in g.edges.iter().enumerate() {
        let Action::Assign { lhs, rhs } = &e.action else {
            continue;
        };
        let Some(x) = strip_casts(lhs).as_ref_name() else {
            continue;
        };
        if !tried.insert(i)
            || builtin::SPECIAL_VARIABLES.contains(&x.as_str())
            || !g.variables.contains_key(x)
            || in_checks.contains(&i)
        {
            continue;
        }
        let used = rhs.refs();
        if used.contains(x) {
            continue;
        }
        let Some(usages) = uses_until_killed(g, &graph, &in_checks, &reads, e, x, &used) else {
            continue;
        };
        if defs.is_none() {
            defs = Some(analyze(g, &ReachingDefinitions::new(g))?);
        }
        let rd = defs.as_ref().expect("computed above");
        let only_this = |node: &Name| rd[node].iter().filter(|(v, _)| v == x).map(|(_, d)| *d).eq([Def::Edge(i)]);
        if !usages.iter().all(|&j| only_this(&g.edges[j].from)) {
            continue;
        }
        let mut out = g.clone();
        for &j in &usages {
            let substitute = &mut |y: &Expr| {
                y.rewrite(&mut |z: Expr| match z.as_ref_name() {
                    Some(n) if n == x => rhs.clone(),
                    _ => z,
                })
            };
            out.edges[j].action = map_reads(&g.edges[j].action, substitute);
        }
        out.edges[i].action = Action::Empty;
        if !has_errors(&validate_static(&out)) {
            return Ok(Some(out));
        }
    }
    Ok(None)
}

/// Edges reading `x` after `def` and before `x` is overwritten, or `None` if
/// some read cannot be rewritten or a variable of the definition changes.
fn uses_until_killed(
    g: &GameDescription,
    graph: &Graph,
    in_checks: &BTreeSet<usize>,
    reads: &ReadSets,
    def: &Edge,
    x: &Name,
    used: &BTreeSet<Name>,
) -> Option<Vec<usize>> {
    let mut usages = Vec::new();
    let mut seen = BTreeSet::from([def.to.clone()]);
    let mut stack = vec![def.to.clone()];
    while let Some(n) = stack.pop() {
        for &j in graph.out_edges(&n) {
            let e = &g.edges[j];
            if in_checks.contains(&j) {
                return None;
            }
            let whole = matches!(&e.action, Action::Assign { lhs, .. } if strip_casts(lhs).as_ref_name() == Some(x));
            if reads.of(&e.action).contains(x) {
                match &e.action {
                    Action::Compare { .. } => {}
                    Action::Assign { lhs, .. } if whole || lhs.root_name() != Some(x) => {}
                    _ => return None,
                }
                usages.push(j);
            }
            if e.action.assigned_root().is_some_and(|r| used.contains(r)) {
                return None;
            }
            if !whole && seen.insert(e.to.clone()) {
                stack.push(e.to.clone());
            }
        }
    }
    usages.sort_unstable();
    usages.dedup();
    Some(usages)
}

/// Moves a condition shared by several two-step paths out of a node to the
/// first step of those paths. Changes which conditions are evaluated first, and
/// so which walks fail on an undefined access.
pub(super) fn reorder_conditions(g: &GameDescription) -> GameDescription {
    let graph = Graph::of(g);
    let pinned = pinned_nodes(g);
    let mut out = g.clone();
    let mut touched = BTreeSet::new();
    for from in g.nodes() {
        let mut paths: Vec<(usize, usize)> = Vec::new();
        for &i in graph.out_edges(&from) {
            let mid = &g.edges[i].to;
            if *mid == from || pinned.contains(mid) {
                continue;
            }
            if let ([_], [j]) = (graph.in_edges(mid), graph.out_edges(mid)) {
                let both = matches!(g.edges[i].action, Action::Compare { .. })
                    && matches!(g.edges[*j].action, Action::Compare { .. });
                if both && !touched.contains(&i) && !touched.contains(j) {
                    paths.push((i, *j));
                }
            }
        }
        // a label on several paths moves to the first step of each of them
        for &(i, j) in &paths {
            let label = &g.edges[j].action;
            if touched.contains(&i) || g.edges[i].action == *label {
                continue;
            }
            let shared =
                paths.iter().filter(|(a, b)| g.edges[*a].action == *label || g.edges[*b].action == *label).count();
            if shared >= 2 {
                out.edges[i].action = label.clone();
                out.edges[j].action = g.edges[i].action.clone();
                touched.extend([i, j]);
            }
        }
    }
    out
}

/// Wraps operands of comparisons and assignments in a cast to the alias
/// naming their type.
pub(super) fn add_explicit_casts(g: &GameDescription) -> GameDescription {
    let (env, _) = Env::new(g);
    let alias_for =
        |t: &TypeExpr| -> Option<Name> { env.types.iter().find(|(_, u)| type_equal(t, u)).map(|(n, _)| n.clone()) };
    let contains = |alias: &Name, s: &Name| match env.types.get(alias) {
        Some(TypeExpr::Set(members)) => members.contains(s),
        _ => false,
    };
    let wrap = |e: &Expr, alias: Option<Name>| match (&e.kind, alias) {
        (ExprKind::Cast(..), _) | (_, None) => e.clone(),
        (_, Some(a)) => Expr::cast(TypeExpr::Alias(a), e.clone()),
    };
    // a symbol takes the alias of the other side; anything else its own
    let operand = |e: &Expr, other: Option<&Name>| match literal(g, e) {
        Some(s) => wrap(e, other.filter(|a| contains(a, s)).cloned()),
        None => wrap(e, infer_expr_type(e, &env).ok().and_then(|t| alias_for(&t))),
    };
    let side_alias = |e: &Expr| match &e.kind {
        ExprKind::Cast(TypeExpr::Alias(a), _) => Some(a.clone()),
        _ if literal(g, e).is_some() => None,
        _ => infer_expr_type(e, &env).ok().and_then(|t| alias_for(&t)),
    };
    let mut out = g.clone();
    for e in &mut out.edges {
        e.action = match &e.action {
            Action::Compare { lhs, rhs, op } => {
                let (la, ra) = (side_alias(lhs), side_alias(rhs));
                Action::Compare { lhs: operand(lhs, ra.as_ref()), rhs: operand(rhs, la.as_ref()), op: *op }
            }
            Action::Assign { lhs, rhs } => {
                let la = side_alias(lhs);
                Action::Assign { lhs: lhs.clone(), rhs: operand(rhs, la.as_ref()) }
            }
            other => other.clone(),
        };
    }
    out
}
