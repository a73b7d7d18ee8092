//! Passes that change how a description is written, not what it does.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{builtin, Action, Env, Expr, GameDescription, Name, Pragma, TypeExpr, Value};

use super::{arrow_parts, Namer};

fn rename_type(t: &TypeExpr, f: &impl Fn(&Name) -> Name) -> TypeExpr {
    match t {
        TypeExpr::Set(s) => TypeExpr::Set(s.iter().map(f).collect()),
        TypeExpr::Arrow(a, b) => TypeExpr::arrow(rename_type(a, f), rename_type(b, f)),
        TypeExpr::Alias(n) => TypeExpr::Alias(f(n)),
    }
}

fn rename_value(v: &Value, f: &impl Fn(&Name) -> Name) -> Value {
    match v {
        Value::Symbol(s) => Value::Symbol(f(s)),
        Value::Map { default, entries } => {
            Value::map(rename_value(default, f), entries.iter().map(|(k, v)| (f(k), rename_value(v, f))))
        }
    }
}

fn rename_expr(e: &Expr, f: &impl Fn(&Name) -> Name) -> Expr {
    use crate::model::ExprKind;
    let kind = match &e.kind {
        ExprKind::Ref(n) => ExprKind::Ref(f(n)),
        ExprKind::Access(b, k) => ExprKind::Access(Box::new(rename_expr(b, f)), Box::new(rename_expr(k, f))),
        ExprKind::Cast(t, inner) => ExprKind::Cast(rename_type(t, f), Box::new(rename_expr(inner, f))),
    };
    Expr::new(kind, e.span)
}

/// Applies `f` to every name in the description.
fn rename_all(g: &GameDescription, f: &impl Fn(&Name) -> Name) -> GameDescription {
    let mut out = GameDescription::default();
    for (n, d) in &g.types {
        out.types.insert(f(n), crate::model::TypeDecl { ty: rename_type(&d.ty, f), span: d.span });
    }
    for (n, d) in &g.constants {
        out.constants.insert(
            f(n),
            crate::model::ConstDecl { ty: rename_type(&d.ty, f), value: rename_value(&d.value, f), span: d.span },
        );
    }
    for (n, d) in &g.variables {
        out.variables.insert(
            f(n),
            crate::model::VarDecl { ty: rename_type(&d.ty, f), init: rename_value(&d.init, f), span: d.span },
        );
    }
    for e in &g.edges {
        let action = match &e.action {
            Action::Reach { from, to, negated } => Action::Reach { from: f(from), to: f(to), negated: *negated },
            Action::Tag(t) => Action::Tag(f(t)),
            Action::VarTag(v) => Action::VarTag(f(v)),
            Action::AnyAssign { lhs, domain } => {
                Action::AnyAssign { lhs: rename_expr(lhs, f), domain: rename_type(domain, f) }
            }
            other => other.map_exprs(&mut |x| rename_expr(x, f)),
        };
        out.edges.push(crate::model::Edge { from: f(&e.from), to: f(&e.to), action, span: e.span });
    }
    out.pragmas = g
        .pragmas
        .iter()
        .map(|p| Pragma { tokens: p.tokens.iter().map(|t| f(&Name::new(t)).to_string()).collect(), ..p.clone() })
        .collect();
    out
}

/// Fixed-width base-26 name, so that generation order is sorted order.
fn short_name(mut k: usize, width: usize) -> Name {
    let mut letters = vec![b'a'; width];
    for slot in letters.iter_mut().rev() {
        *slot = b'a' + (k % 26) as u8;
        k /= 26;
    }
    Name::new(format!("_{}", String::from_utf8(letters).expect("ascii")))
}

/// Renames nodes, types, constants, variables and symbols to short
/// generated names. Names with a fixed meaning, player and score symbols
/// and everything that can appear in a move keep their names.
pub(super) fn mangle_symbols(g: &GameDescription) -> GameDescription {
    let (env, _) = Env::new(g);
    let mut keep: BTreeSet<Name> = [
        builtin::BEGIN,
        builtin::END,
        builtin::KEEPER,
        builtin::RANDOM,
        builtin::PLAYER_TYPE,
        builtin::SCORE_TYPE,
        builtin::GOALS_TYPE,
        builtin::PLAYER_OR_SYSTEM,
        builtin::BOOL_TYPE,
        builtin::VISIBILITY_TYPE,
        builtin::PLAYER,
        builtin::GOALS,
        builtin::VISIBLE,
    ]
    .into_iter()
    .map(Name::new)
    .collect();
    for t in [builtin::PLAYER_OR_SYSTEM, builtin::SCORE_TYPE, builtin::BOOL_TYPE] {
        if let Some(TypeExpr::Set(s)) = env.types.get(t) {
            keep.extend(s.iter().cloned());
        }
    }
    for e in &g.edges {
        match &e.action {
            Action::Tag(t) => {
                keep.insert(t.clone());
            }
            Action::VarTag(v) => {
                if let Some(TypeExpr::Set(s)) = env.variable_type(v) {
                    keep.extend(s.iter().cloned());
                }
            }
            _ => {}
        }
    }
    let mut names: BTreeSet<Name> = g.nodes();
    names.extend(g.types.keys().cloned());
    names.extend(g.constants.keys().cloned());
    names.extend(g.variables.keys().cloned());
    names.extend(g.declared_symbols());
    let renamed: Vec<Name> = names.into_iter().filter(|n| !keep.contains(n)).collect();

    let mut width = 1;
    while 26usize.pow(width as u32) < renamed.len() + keep.len() {
        width += 1;
    }
    let mut map = BTreeMap::new();
    let mut k = 0;
    for n in renamed {
        let mut candidate = short_name(k, width);
        while keep.contains(&candidate) {
            k += 1;
            candidate = short_name(k, width);
        }
        k += 1;
        map.insert(n, candidate);
    }
    rename_all(g, &|n: &Name| map.get(n).cloned().unwrap_or_else(|| n.clone()))
}

/// Maps nested inside maps become constants of their own; map-valued
/// variable initializers refer to a constant.
pub(super) fn normalize_constants(g: &GameDescription) -> GameDescription {
    struct Hoister<'a> {
        g: &'a GameDescription,
        namer: Namer,
        memo: BTreeMap<(TypeExpr, Value), Name>,
        added: Vec<(Name, TypeExpr, Value)>,
    }

    impl Hoister<'_> {
        /// `v` with every map below the top level replaced by a constant.
        fn flatten(&mut self, v: &Value, ty: &TypeExpr) -> Value {
            let Value::Map { default, entries } = v else {
                return v.clone();
            };
            let Some((_, dest)) = arrow_parts(self.g, ty) else {
                return v.clone();
            };
            let default = self.child(default, &dest);
            let entries: Vec<(Name, Value)> = entries.iter().map(|(k, v)| (k.clone(), self.child(v, &dest))).collect();
            Value::map(default, entries)
        }

        fn child(&mut self, v: &Value, ty: &TypeExpr) -> Value {
            match v {
                Value::Symbol(_) => v.clone(),
                Value::Map { .. } => Value::Symbol(self.constant(v, ty)),
            }
        }

        fn constant(&mut self, v: &Value, ty: &TypeExpr) -> Name {
            let flat = self.flatten(v, ty);
            let key = (ty.clone(), flat.clone());
            if let Some(n) = self.memo.get(&key) {
                return n.clone();
            }
            let name = self.namer.numbered("Hoisted");
            self.memo.insert(key, name.clone());
            self.added.push((name.clone(), ty.clone(), flat));
            name
        }
    }

    let mut h = Hoister { g, namer: Namer::of(g), memo: BTreeMap::new(), added: Vec::new() };
    let mut out = g.clone();
    for d in out.constants.values_mut() {
        d.value = h.flatten(&d.value, &d.ty);
    }
    for d in out.variables.values_mut() {
        if matches!(d.init, Value::Map { .. }) {
            d.init = Value::Symbol(h.constant(&d.init, &d.ty));
        }
    }
    for (n, ty, v) in h.added {
        out.add_constant(n, ty, v);
    }
    out
}

/// Arrow types only at the top of type definitions, one arrow deep, with
/// named sides; declarations refer to types by name.
pub(super) fn normalize_types(g: &GameDescription) -> GameDescription {
    struct Namerer {
        namer: Namer,
        memo: BTreeMap<TypeExpr, Name>,
        added: Vec<(Name, TypeExpr)>,
    }

    impl Namerer {
        fn top(&mut self, t: &TypeExpr) -> TypeExpr {
            match t {
                TypeExpr::Arrow(a, b) => TypeExpr::arrow(self.named(a), self.named(b)),
                other => other.clone(),
            }
        }

        fn named(&mut self, t: &TypeExpr) -> TypeExpr {
            if let TypeExpr::Alias(_) = t {
                return t.clone();
            }
            let body = self.top(t);
            if let Some(n) = self.memo.get(&body) {
                return TypeExpr::Alias(n.clone());
            }
            let name = self.namer.numbered("Type");
            self.memo.insert(body.clone(), name.clone());
            self.added.push((name.clone(), body));
            TypeExpr::Alias(name)
        }
    }

    let mut memo = BTreeMap::new();
    for (n, d) in &g.types {
        let shallow = match &d.ty {
            TypeExpr::Arrow(a, b) => matches!(**a, TypeExpr::Alias(_)) && matches!(**b, TypeExpr::Alias(_)),
            _ => true,
        };
        if shallow {
            memo.entry(d.ty.clone()).or_insert_with(|| n.clone());
        }
    }
    let mut t = Namerer { namer: Namer::of(g), memo, added: Vec::new() };
    let mut out = g.clone();
    for d in out.types.values_mut() {
        d.ty = t.top(&d.ty);
    }
    for d in out.constants.values_mut() {
        d.ty = t.named(&d.ty);
    }
    for d in out.variables.values_mut() {
        d.ty = t.named(&d.ty);
    }
    for e in &mut out.edges {
        if let Action::AnyAssign { domain, .. } = &mut e.action {
            *domain = t.named(domain);
        }
    }
    for (n, ty) in t.added {
        out.add_type(n, ty);
    }
    out
}
