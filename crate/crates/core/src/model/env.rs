use std::collections::{BTreeMap, BTreeSet};

use super::types::{assignable, resolve_type};
use super::values::{canonicalize_value, first_misfit, map_lookup, value_fits};
use super::{Expr, ExprKind, GameDescription, ModelError, Name, TypeExpr, Value};
use crate::diag::{Code, Diagnostic, Span};

/// Variable assignment keyed by variable name.
pub type Semistate = BTreeMap<Name, Value>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EvalMode {
    /// Verify cast targets and access keys against their domains.
    #[default]
    Checked,
    /// Trust the validators; only structural impossibilities are reported.
    Fast,
}

/// Resolved view of a description's declarations.
///
/// Aliases are expanded, constant references inside values are substituted
/// and every value is in canonical form under its declared type.
#[derive(Clone, Debug, Default)]
pub struct Env {
    pub types: BTreeMap<Name, TypeExpr>,
    pub constants: BTreeMap<Name, (TypeExpr, Value)>,
    pub variables: BTreeMap<Name, (TypeExpr, Value)>,
    pub symbols: BTreeSet<Name>,
}

impl ModelError {
    pub fn code(&self) -> Code {
        match self {
            ModelError::UnknownAlias(_) => Code::UnknownAlias,
            ModelError::RecursiveAlias(_) => Code::RecursiveAlias,
            ModelError::ArrowSourceNotSet => Code::ArrowSourceNotSet,
            ModelError::UnknownName(_) => Code::UnknownName,
            ModelError::AccessOnSetType => Code::AccessOnSetType,
            ModelError::KeyTypeMismatch => Code::KeyTypeMismatch,
            ModelError::CastTypeMismatch => Code::CastTypeMismatch,
            ModelError::RecursiveConstant(_) => Code::RecursiveConstant,
            ModelError::ShapeMismatch | ModelError::ValueOutsideType(_) => Code::ValueTypeMismatch,
            ModelError::CastOutsideDomain { .. } | ModelError::KeyOutsideSourceDomain(_) => Code::TypeMismatch,
        }
    }

    pub fn at(&self, span: Span) -> Diagnostic {
        Diagnostic::error(self.code(), span, self.to_string())
    }
}

impl Env {
    /// Resolves everything that can be resolved and reports the rest.
    pub fn new(g: &GameDescription) -> (Env, Vec<Diagnostic>) {
        let mut env = Env { symbols: g.declared_symbols(), ..Env::default() };
        let mut diags = Vec::new();

        for (name, decl) in &g.types {
            check_set_literals(&decl.ty, decl.span, &mut diags);
            match resolve_type(&decl.ty, &g.types) {
                Ok(t) => {
                    env.types.insert(name.clone(), t);
                }
                Err(e) => diags.push(e.at(decl.span)),
            }
        }

        let mut resolver = ConstResolver { g, env: &env, done: BTreeMap::new(), visiting: BTreeSet::new() };
        for name in g.constants.keys() {
            let _ = resolver.resolve(name); // outcome is recorded in `done`
        }
        let mut constants = BTreeMap::new();
        for (name, result) in resolver.done {
            match result {
                Ok(c) => {
                    constants.insert(name, c);
                }
                Err(e) => diags.push(e.at(g.constants[&name].span)),
            }
        }
        env.constants = constants;

        for (name, decl) in &g.variables {
            check_set_literals(&decl.ty, decl.span, &mut diags);
            check_duplicate_keys(&decl.init, decl.span, &mut diags);
            let resolved = env
                .resolve(&decl.ty)
                .and_then(|t| {
                    let v = env.resolve_value(&decl.init)?;
                    Ok((t, v))
                })
                .and_then(|(t, v)| fit(&t, &v).map(|v| (t, v)));
            match resolved {
                Ok(tv) => {
                    env.variables.insert(name.clone(), tv);
                }
                Err(e) => diags.push(e.at(decl.span)),
            }
        }
        for (name, decl) in &g.constants {
            check_set_literals(&decl.ty, decl.span, &mut diags);
            check_duplicate_keys(&decl.value, decl.span, &mut diags);
            if g.variables.contains_key(name) {
                diags.push(Diagnostic::error(
                    Code::DuplicateDefinition,
                    decl.span,
                    format!("`{name}` is declared both as a constant and a variable"),
                ));
            }
        }
        (env, diags)
    }

    pub fn resolve(&self, t: &TypeExpr) -> Result<TypeExpr, ModelError> {
        resolve_type(t, &self.types)
    }

    /// Substitutes constant references inside a literal value.
    pub fn resolve_value(&self, v: &Value) -> Result<Value, ModelError> {
        match v {
            Value::Symbol(n) => {
                if let Some((_, c)) = self.constants.get(n) {
                    Ok(c.clone())
                } else if self.symbols.contains(n) {
                    Ok(v.clone())
                } else {
                    Err(ModelError::UnknownName(n.clone()))
                }
            }
            Value::Map { default, entries } => {
                let default = self.resolve_value(default)?;
                let entries = entries.iter().map(|(k, v)| Ok((k.clone(), self.resolve_value(v)?))).collect::<Result<
                    Vec<_>,
                    ModelError,
                >>(
                )?;
                Ok(Value::map(default, entries))
            }
        }
    }

    pub fn initial_semistate(&self) -> Semistate {
        self.variables.iter().map(|(n, (_, v))| (n.clone(), v.clone())).collect()
    }

    pub fn variable_type(&self, name: &str) -> Option<&TypeExpr> {
        self.variables.get(name).map(|(t, _)| t)
    }

    pub fn constant_type(&self, name: &str) -> Option<&TypeExpr> {
        self.constants.get(name).map(|(t, _)| t)
    }

    /// Type of the value a name denotes in expression position.
    pub fn name_type(&self, name: &Name) -> Result<TypeExpr, ModelError> {
        if let Some(t) = self.variable_type(name) {
            Ok(t.clone())
        } else if let Some(t) = self.constant_type(name) {
            Ok(t.clone())
        } else if self.symbols.contains(name) {
            Ok(TypeExpr::Set(vec![name.clone()]))
        } else {
            Err(ModelError::UnknownName(name.clone()))
        }
    }
}

fn fit(t: &TypeExpr, v: &Value) -> Result<Value, ModelError> {
    if !value_fits(t, v) {
        return Err(ModelError::ValueOutsideType(t.to_string()));
    }
    canonicalize_value(t, v)
}

fn check_set_literals(t: &TypeExpr, span: Span, diags: &mut Vec<Diagnostic>) {
    match t {
        TypeExpr::Set(symbols) => {
            if symbols.is_empty() {
                diags.push(Diagnostic::error(Code::EmptySetType, span, "set type has no symbols"));
            }
            let mut seen = BTreeSet::new();
            for s in symbols {
                if !seen.insert(s) {
                    diags.push(Diagnostic::error(
                        Code::DuplicateSymbol,
                        span,
                        format!("symbol `{s}` appears twice in a set type"),
                    ));
                }
            }
        }
        TypeExpr::Arrow(a, b) => {
            check_set_literals(a, span, diags);
            check_set_literals(b, span, diags);
        }
        TypeExpr::Alias(_) => {}
    }
}

pub(crate) fn check_duplicate_keys(v: &Value, span: Span, diags: &mut Vec<Diagnostic>) {
    if let Value::Map { default, entries } = v {
        let mut seen = BTreeSet::new();
        for (k, inner) in entries {
            if !seen.insert(k) {
                diags.push(Diagnostic::error(Code::DuplicateKey, span, format!("key `{k}` appears twice in a map")));
            }
            check_duplicate_keys(inner, span, diags);
        }
        check_duplicate_keys(default, span, diags);
    }
}

struct ConstResolver<'a> {
    g: &'a GameDescription,
    env: &'a Env,
    done: BTreeMap<Name, Result<(TypeExpr, Value), ModelError>>,
    visiting: BTreeSet<Name>,
}

impl ConstResolver<'_> {
    fn resolve(&mut self, name: &Name) -> Result<Value, ModelError> {
        if let Some(r) = self.done.get(name) {
            return r.clone().map(|(_, v)| v);
        }
        if !self.visiting.insert(name.clone()) {
            return Err(ModelError::RecursiveConstant(name.clone()));
        }
        let decl = &self.g.constants[name];
        let result = self.env.resolve(&decl.ty).and_then(|t| {
            let v = self.substitute(&decl.value)?;
            fit(&t, &v).map(|v| (t, v))
        });
        self.visiting.remove(name);
        // a constant caught in a cycle reports the cycle, not a downstream failure
        let result = match result {
            Err(ModelError::RecursiveConstant(_)) => Err(ModelError::RecursiveConstant(name.clone())),
            other => other,
        };
        self.done.insert(name.clone(), result.clone());
        result.map(|(_, v)| v)
    }

    fn substitute(&mut self, v: &Value) -> Result<Value, ModelError> {
        match v {
            Value::Symbol(n) if self.g.constants.contains_key(n) => self.resolve(n),
            Value::Symbol(n) if self.env.symbols.contains(n) => Ok(v.clone()),
            Value::Symbol(n) => Err(ModelError::UnknownName(n.clone())),
            Value::Map { default, entries } => {
                let default = self.substitute(default)?;
                let mut out = Vec::with_capacity(entries.len());
                for (k, v) in entries {
                    out.push((k.clone(), self.substitute(v)?));
                }
                Ok(Value::map(default, out))
            }
        }
    }
}

/// Static type of an expression.
pub fn infer_expr_type(e: &Expr, env: &Env) -> Result<TypeExpr, ModelError> {
    match &e.kind {
        ExprKind::Ref(n) => env.name_type(n),
        ExprKind::Access(base, key) => {
            let TypeExpr::Arrow(source, dest) = infer_expr_type(base, env)? else {
                return Err(ModelError::AccessOnSetType);
            };
            let key_type = infer_expr_type(key, env)?;
            if !matches!(key_type, TypeExpr::Set(_)) || !assignable(&key_type, &source) {
                return Err(ModelError::KeyTypeMismatch);
            }
            Ok(*dest)
        }
        ExprKind::Cast(target, inner) => {
            let target = env.resolve(target)?;
            let inner = infer_expr_type(inner, env)?;
            if !assignable(&inner, &target) {
                return Err(ModelError::CastTypeMismatch);
            }
            Ok(target)
        }
    }
}

/// Evaluates `e` against a semistate without modifying it.
pub fn eval_expr(e: &Expr, env: &Env, s: &Semistate, mode: EvalMode) -> Result<Value, ModelError> {
    match &e.kind {
        ExprKind::Ref(n) => {
            if env.variables.contains_key(n) {
                s.get(n).cloned().ok_or_else(|| ModelError::UnknownName(n.clone()))
            } else if let Some((_, v)) = env.constants.get(n) {
                Ok(v.clone())
            } else if env.symbols.contains(n) {
                Ok(Value::Symbol(n.clone()))
            } else {
                Err(ModelError::UnknownName(n.clone()))
            }
        }
        ExprKind::Access(base, key) => {
            let map = eval_expr(base, env, s, mode)?;
            let Value::Symbol(k) = eval_expr(key, env, s, mode)? else {
                return Err(ModelError::ShapeMismatch);
            };
            if !matches!(map, Value::Map { .. }) {
                return Err(ModelError::AccessOnSetType);
            }
            if mode == EvalMode::Checked {
                if let TypeExpr::Arrow(source, _) = infer_expr_type(base, env)? {
                    if !source.as_set().unwrap_or_default().contains(&k) {
                        return Err(ModelError::KeyOutsideSourceDomain(k));
                    }
                }
            }
            Ok(map_lookup(&map, &k).clone())
        }
        ExprKind::Cast(target, inner) => {
            let v = eval_expr(inner, env, s, mode)?;
            if mode == EvalMode::Checked {
                let target = env.resolve(target)?;
                if let Some(symbol) = first_misfit(&target, &v) {
                    return Err(ModelError::CastOutsideDomain { symbol: symbol.clone(), target: target.to_string() });
                }
            }
            Ok(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The declarations of the board-game fragment used throughout the docs.
    fn board_env() -> Env {
        let mut g = GameDescription::default();
        g.add_type("Coord", TypeExpr::set(["0", "1", "2"]));
        g.add_type("Piece", TypeExpr::set(["e", "X", "O"]));
        g.add_type("ColumnOfBoard", TypeExpr::arrow(TypeExpr::alias("Coord"), TypeExpr::alias("Piece")));
        g.add_type("Board", TypeExpr::arrow(TypeExpr::alias("Coord"), TypeExpr::alias("ColumnOfBoard")));
        g.add_constant(
            "next",
            TypeExpr::arrow(TypeExpr::alias("Coord"), TypeExpr::alias("Coord")),
            Value::map(
                Value::symbol("0"),
                [(Name::new("0"), Value::symbol("1")), (Name::new("1"), Value::symbol("2"))],
            ),
        );
        g.add_constant("initColumn", TypeExpr::alias("ColumnOfBoard"), Value::map(Value::symbol("e"), []));
        g.add_constant("initBoard", TypeExpr::alias("Board"), Value::map(Value::symbol("initColumn"), []));
        g.add_variable("posX", TypeExpr::alias("Coord"), Value::symbol("0"));
        g.add_variable("board", TypeExpr::alias("Board"), Value::symbol("initBoard"));
        let (env, diags) = Env::new(&g);
        assert!(diags.is_empty(), "{diags:?}");
        env
    }

    fn r(n: &str) -> Expr {
        Expr::reference(n)
    }

    #[test]
    fn infers_declared_and_singleton_types() {
        let env = board_env();
        let board = infer_expr_type(&r("board"), &env).unwrap();
        assert_eq!(board, env.types["Board"]);
        let cell = Expr::access(Expr::access(r("board"), Expr::cast(TypeExpr::alias("Coord"), r("posX"))), r("1"));
        assert_eq!(infer_expr_type(&cell, &env).unwrap(), TypeExpr::set(["e", "X", "O"]));
        assert_eq!(infer_expr_type(&r("e"), &env).unwrap(), TypeExpr::set(["e"]));
        assert_eq!(infer_expr_type(&r("nope"), &env), Err(ModelError::UnknownName(Name::new("nope"))));
        assert_eq!(infer_expr_type(&Expr::access(r("posX"), r("0")), &env), Err(ModelError::AccessOnSetType));
    }

    #[test]
    fn evaluates_lookups() {
        let env = board_env();
        let mut s = env.initial_semistate();
        let column = eval_expr(&Expr::access(r("board"), r("posX")), &env, &s, EvalMode::Checked).unwrap();
        assert_eq!(column, Value::map(Value::symbol("e"), []));
        s.insert(Name::new("posX"), Value::symbol("2"));
        let next = eval_expr(&Expr::access(r("next"), r("posX")), &env, &s, EvalMode::Checked).unwrap();
        assert_eq!(next, Value::symbol("0"));
    }

    #[test]
    fn cast_outside_domain() {
        let env = board_env();
        let s = env.initial_semistate();
        let cast = Expr::cast(TypeExpr::alias("Coord"), r("X"));
        assert!(matches!(eval_expr(&cast, &env, &s, EvalMode::Checked), Err(ModelError::CastOutsideDomain { .. })));
        assert_eq!(eval_expr(&cast, &env, &s, EvalMode::Fast), Ok(Value::symbol("X")));
    }

    #[test]
    fn recursive_constants_are_reported() {
        let mut g = GameDescription::default();
        g.add_type("T", TypeExpr::arrow(TypeExpr::set(["a"]), TypeExpr::set(["a"])));
        g.add_constant("c", TypeExpr::alias("T"), Value::map(Value::symbol("d"), []));
        g.add_constant("d", TypeExpr::alias("T"), Value::symbol("c"));
        let (_, diags) = Env::new(&g);
        assert!(diags.iter().all(|d| d.code == Code::RecursiveConstant), "{diags:?}");
        assert_eq!(diags.len(), 2);
    }
}
