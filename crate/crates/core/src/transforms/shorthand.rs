//! Expansion of `x = T(*)` and `$$ v` into plain edges.

use crate::model::{Action, CompareOp, Edge, Env, Expr, GameDescription, TypeExpr};

use super::{splice, Namer};

/// One edge per member of `T`, in declaration order.
pub(super) fn expand_any_assignment(g: &GameDescription) -> GameDescription {
    let (env, _) = Env::new(g);
    let mut out = g.clone();
    let mut i = 0;
    while i < out.edges.len() {
        let e = &out.edges[i];
        let Action::AnyAssign { lhs, domain } = &e.action else {
            i += 1;
            continue;
        };
        let Ok(TypeExpr::Set(members)) = env.resolve(domain) else {
            i += 1;
            continue;
        };
        let expanded: Vec<Edge> = members
            .iter()
            .map(|s| Edge {
                from: e.from.clone(),
                to: e.to.clone(),
                action: Action::Assign { lhs: lhs.clone(), rhs: Expr::reference(s.clone()) },
                span: e.span,
            })
            .collect();
        let n = expanded.len();
        splice(&mut out.edges, i, expanded);
        i += n;
    }
    out
}

/// `a, b: $$ v` becomes, for every member `s` of the type of `v`, a
/// comparison `v == T(s)` into a fresh node followed by `$ s`.
pub(super) fn expand_variable_tags(g: &GameDescription) -> GameDescription {
    let (env, _) = Env::new(g);
    let mut namer = Namer::of(g);
    let mut out = g.clone();
    let mut i = 0;
    while i < out.edges.len() {
        let e = &out.edges[i];
        let Action::VarTag(v) = &e.action else {
            i += 1;
            continue;
        };
        let (Some(TypeExpr::Set(members)), Some(decl)) = (env.variable_type(v), g.variables.get(v)) else {
            i += 1;
            continue;
        };
        let mut expanded = Vec::with_capacity(2 * members.len());
        for s in members {
            let mid = namer.fresh(&format!("{}_{s}", e.from));
            let symbol = Expr::reference(s.clone());
            let rhs = match &decl.ty {
                alias @ TypeExpr::Alias(_) => Expr::cast(alias.clone(), symbol),
                _ => symbol,
            };
            expanded.push(Edge {
                from: e.from.clone(),
                to: mid.clone(),
                action: Action::Compare { lhs: Expr::reference(v.clone()), rhs, op: CompareOp::Eq },
                span: e.span,
            });
            expanded.push(Edge { from: mid, to: e.to.clone(), action: Action::Tag(s.clone()), span: e.span });
        }
        let n = expanded.len();
        splice(&mut out.edges, i, expanded);
        i += n;
    }
    out
}

/// Both shorthand expansions; the engine only runs expanded descriptions.
pub fn expand_shorthands(g: &GameDescription) -> GameDescription {
    expand_variable_tags(&expand_any_assignment(g))
}
