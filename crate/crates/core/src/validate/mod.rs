//! Well-formedness checks and the proper-description model checker.

mod implicit;
mod proper;

use std::collections::BTreeSet;

use crate::diag::{Code, Diagnostic, Span};
use crate::graph::{recursive_reach_edges, Graph};
use crate::model::{
    assignable, builtin, infer_expr_type, strip_casts, Action, Env, Expr, GameDescription, Name, TypeExpr,
};

pub use implicit::inject_implicit_definitions;
pub use proper::{
    check_proper, replay_witness, reproduces, Condition, ConditionResult, ProperBudget, ProperReport, Verdict,
};

/// Static checks over a description with implicit definitions injected.
pub fn validate_static(g: &GameDescription) -> Vec<Diagnostic> {
    let (env, mut diags) = Env::new(g);
    let graph = Graph::of(g);

    for e in &g.edges {
        check_action(&env, g, &graph, &e.action, e.span, &mut diags);
    }
    for i in recursive_reach_edges(&g.edges) {
        let e = &g.edges[i];
        diags.push(Diagnostic::error(
            Code::RecursiveReachability,
            e.span,
            format!("reachability check `{}` can re-enter its own node `{}`", e.action, e.from),
        ));
    }
    if graph.out_edges(builtin::BEGIN).is_empty() {
        diags.push(Diagnostic::error(Code::MissingBegin, Span::default(), "no edge leaves `begin`"));
    }
    if graph.in_edges(builtin::END).is_empty() {
        diags.push(Diagnostic::error(Code::MissingEnd, Span::default(), "no edge enters `end`"));
    }
    diags.extend(end_without_keeper(g, &graph));
    diags
}

fn check_action(
    env: &Env,
    g: &GameDescription,
    graph: &Graph,
    action: &Action,
    span: Span,
    diags: &mut Vec<Diagnostic>,
) {
    let infer = |e: &Expr, diags: &mut Vec<Diagnostic>| match infer_expr_type(e, env) {
        Ok(t) => Some(t),
        Err(err) => {
            diags.push(err.at(e.span.or(span)));
            None
        }
    };
    match action {
        Action::Empty | Action::Tag(_) => {}
        Action::Compare { lhs, rhs, .. } => {
            let (l, r) = (infer(lhs, diags), infer(rhs, diags));
            if let (Some(l), Some(r)) = (l, r) {
                if !assignable(&l, &r) {
                    diags.push(Diagnostic::error(
                        Code::IncomparableTypes,
                        span,
                        format!("`{lhs}` and `{rhs}` have no value in common"),
                    ));
                }
            }
        }
        Action::Assign { lhs, rhs } => {
            let target_ok = check_target(env, lhs, span, diags);
            let (l, r) = (infer(lhs, diags), infer(rhs, diags));
            if let (true, Some(l), Some(r)) = (target_ok, l, r) {
                if !assignable(&l, &r) {
                    diags.push(Diagnostic::error(
                        Code::TypeMismatch,
                        span,
                        format!("`{rhs}` cannot be assigned to `{lhs}`"),
                    ));
                }
            }
        }
        Action::AnyAssign { lhs, domain } => {
            let target_ok = check_target(env, lhs, span, diags);
            let l = infer(lhs, diags);
            match env.resolve(domain) {
                Ok(d @ TypeExpr::Set(_)) => {
                    if let (true, Some(l)) = (target_ok, l) {
                        if !assignable(&l, &d) {
                            diags.push(Diagnostic::error(
                                Code::TypeMismatch,
                                span,
                                format!("no value of `{domain}` fits `{lhs}`"),
                            ));
                        }
                    }
                }
                Ok(_) => diags.push(Diagnostic::error(
                    Code::AnyAssignNotSet,
                    span,
                    format!("`{domain}(*)` needs a set type"),
                )),
                Err(err) => diags.push(err.at(span)),
            }
        }
        Action::VarTag(v) => match env.variable_type(v) {
            Some(TypeExpr::Set(_)) => {}
            Some(_) => diags.push(Diagnostic::error(
                Code::VarTagNotSet,
                span,
                format!("`$$ {v}` needs a variable of set type"),
            )),
            None if g.variables.contains_key(v) => {}
            None => diags.push(Diagnostic::error(Code::UnknownName, span, format!("`{v}` is not a variable"))),
        },
        Action::Reach { from, to, .. } => {
            if !graph.forward(&g.edges, from).contains(to) {
                diags.push(Diagnostic::error(
                    Code::ReachabilityImpossible,
                    span,
                    format!("`{to}` is not reachable from `{from}`"),
                ));
            }
        }
    }
}

/// The assignment target must be an access chain rooted at a variable.
fn check_target(env: &Env, lhs: &Expr, span: Span, diags: &mut Vec<Diagnostic>) -> bool {
    let root = strip_casts(lhs.root());
    match root.as_ref_name() {
        Some(n) if env.variables.contains_key(n) => true,
        _ => {
            diags.push(Diagnostic::error(
                Code::AssignToNonVariable,
                span,
                format!("`{lhs}` is not rooted at a variable"),
            ));
            false
        }
    }
}

/// Every walk into `end` should pass a `player = keeper` assignment after
/// its last tag or player change. Reported as warnings; the model checker
/// decides the exact property.
fn end_without_keeper(g: &GameDescription, graph: &Graph) -> Vec<Diagnostic> {
    let end = Name::new(builtin::END);
    let mut out = Vec::new();
    let mut seen = BTreeSet::from([end.clone()]);
    let mut stack = vec![end];
    while let Some(n) = stack.pop() {
        if &*n == builtin::BEGIN {
            out.push(Diagnostic::warning(
                Code::EndWithoutKeeper,
                Span::default(),
                "`end` is reachable from `begin` without a `player = keeper` assignment",
            ));
            continue;
        }
        for &i in graph.in_edges(&n) {
            let e = &g.edges[i];
            if is_keeper_assignment(&e.action) {
                continue;
            }
            if matches!(e.action, Action::Tag(_) | Action::VarTag(_)) || e.action.is_player_assignment() {
                out.push(Diagnostic::warning(
                    Code::EndWithoutKeeper,
                    e.span,
                    format!("`end` may be entered after `{}` without `player = keeper`", e.action),
                ));
                continue;
            }
            if seen.insert(e.from.clone()) {
                stack.push(e.from.clone());
            }
        }
    }
    out
}

fn is_keeper_assignment(a: &Action) -> bool {
    match a {
        Action::Assign { rhs, .. } if a.is_player_assignment() => {
            strip_casts(rhs).as_ref_name().is_some_and(|n| &**n == builtin::KEEPER)
        }
        _ => false,
    }
}

/// Injects implicit definitions and runs the static checks.
pub fn prepare(g: &GameDescription) -> Result<GameDescription, Vec<Diagnostic>> {
    let (g, mut diags) = inject_implicit_definitions(g);
    if !crate::diag::has_errors(&diags) {
        diags.extend(validate_static(&g));
    }
    if crate::diag::has_errors(&diags) {
        Err(diags)
    } else {
        Ok(g)
    }
}
