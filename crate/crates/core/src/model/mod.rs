//! In-memory representation of Regular Games descriptions.
//!
//! The AST keeps names as text. The engine interns them separately when it
//! compiles a validated description, so every transformation works on plain
//! names and the textual form always round-trips.

mod env;
mod types;
mod values;

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use thiserror::Error;

use crate::diag::Span;

pub use env::{eval_expr, infer_expr_type, Env, EvalMode, Semistate};
pub use types::{assignable, resolve_type, type_equal, TypeAliases};
pub use values::{canonicalize_value, map_lookup, value_equal, value_fits};

/// Reserved words; never valid as a name.
pub const KEYWORDS: [&str; 3] = ["const", "type", "var"];

/// Names with a fixed meaning in every game.
pub mod builtin {
    pub const BEGIN: &str = "begin";
    pub const END: &str = "end";
    pub const KEEPER: &str = "keeper";
    pub const RANDOM: &str = "random";
    pub const PLAYER_TYPE: &str = "Player";
    pub const SCORE_TYPE: &str = "Score";
    pub const GOALS_TYPE: &str = "Goals";
    pub const PLAYER_OR_SYSTEM: &str = "PlayerOrSystem";
    pub const BOOL_TYPE: &str = "Bool";
    pub const VISIBILITY_TYPE: &str = "Visibility";
    pub const PLAYER: &str = "player";
    pub const GOALS: &str = "goals";
    pub const VISIBLE: &str = "visible";

    pub const SPECIAL_VARIABLES: [&str; 3] = [PLAYER, GOALS, VISIBLE];
}

/// Case-sensitive identifier. Cheap to clone.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(text: impl AsRef<str>) -> Name {
        Name(Arc::from(text.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_keyword(text: &str) -> bool {
        KEYWORDS.contains(&text)
    }

    /// Lexically valid identifier: alphanumerics and underscores.
    pub fn is_identifier(text: &str) -> bool {
        !text.is_empty() && text.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
    }

    /// Valid for a declared type, constant or variable: no leading digit.
    pub fn is_declarable(text: &str) -> bool {
        Name::is_identifier(text) && !text.as_bytes()[0].is_ascii_digit() && !Name::is_keyword(text)
    }
}

impl Deref for Name {
    type Target = str;
    fn deref(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for Name {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Name {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl serde::Serialize for Name {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Name {
        Name::new(s)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeExpr {
    /// Finite set of symbols, in declaration order.
    Set(Vec<Name>),
    Arrow(Box<TypeExpr>, Box<TypeExpr>),
    Alias(Name),
}

impl TypeExpr {
    pub fn set<I, S>(symbols: I) -> TypeExpr
    where
        I: IntoIterator<Item = S>,
        S: Into<Name>,
    {
        TypeExpr::Set(symbols.into_iter().map(Into::into).collect())
    }

    pub fn arrow(source: TypeExpr, dest: TypeExpr) -> TypeExpr {
        TypeExpr::Arrow(Box::new(source), Box::new(dest))
    }

    pub fn alias(name: impl Into<Name>) -> TypeExpr {
        TypeExpr::Alias(name.into())
    }

    pub fn as_set(&self) -> Option<&[Name]> {
        match self {
            TypeExpr::Set(symbols) => Some(symbols),
            _ => None,
        }
    }

    /// Number of arrows plus one.
    pub fn type_length(&self) -> usize {
        match self {
            TypeExpr::Arrow(_, dest) => 1 + dest.type_length(),
            _ => 1,
        }
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Set(symbols) => {
                f.write_str("{")?;
                for (i, s) in symbols.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str("}")
            }
            TypeExpr::Arrow(source, dest) => write!(f, "{source} -> {dest}"),
            TypeExpr::Alias(name) => write!(f, "{name}"),
        }
    }
}

/// A symbol, or a map with a default value and explicit exceptions.
///
/// In source text a symbol position may also hold the name of a constant;
/// [`Env`] substitutes those when it resolves values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Symbol(Name),
    Map { default: Box<Value>, entries: Vec<(Name, Value)> },
}

impl Value {
    pub fn symbol(name: impl Into<Name>) -> Value {
        Value::Symbol(name.into())
    }

    pub fn map<I>(default: Value, entries: I) -> Value
    where
        I: IntoIterator<Item = (Name, Value)>,
    {
        Value::Map { default: Box::new(default), entries: entries.into_iter().collect() }
    }

    pub fn as_symbol(&self) -> Option<&Name> {
        match self {
            Value::Symbol(s) => Some(s),
            Value::Map { .. } => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Symbol(s) => write!(f, "{s}"),
            Value::Map { default, entries } => {
                write!(f, "{{:{default}")?;
                for (k, v) in entries {
                    write!(f, ", {k}: {v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    /// Variable, constant or symbol.
    Ref(Name),
    Access(Box<Expr>, Box<Expr>),
    Cast(TypeExpr, Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    pub fn reference(name: impl Into<Name>) -> Expr {
        Expr::new(ExprKind::Ref(name.into()), Span::default())
    }

    pub fn access(base: Expr, key: Expr) -> Expr {
        let span = base.span.to(key.span);
        Expr::new(ExprKind::Access(Box::new(base), Box::new(key)), span)
    }

    pub fn cast(target: TypeExpr, inner: Expr) -> Expr {
        let span = inner.span;
        Expr::new(ExprKind::Cast(target, Box::new(inner)), span)
    }

    pub fn as_ref_name(&self) -> Option<&Name> {
        match &self.kind {
            ExprKind::Ref(n) => Some(n),
            _ => None,
        }
    }

    /// The reference at the bottom of an access/cast chain.
    pub fn root(&self) -> &Expr {
        match &self.kind {
            ExprKind::Ref(_) => self,
            ExprKind::Access(base, _) => base.root(),
            ExprKind::Cast(_, inner) => inner.root(),
        }
    }

    /// Root name when the expression is an access chain (casts allowed)
    /// ending in a plain reference.
    pub fn root_name(&self) -> Option<&Name> {
        self.root().as_ref_name()
    }

    /// Calls `f` on every reference in the expression, in evaluation order.
    pub fn for_each_ref<'a>(&'a self, f: &mut impl FnMut(&'a Name)) {
        match &self.kind {
            ExprKind::Ref(n) => f(n),
            ExprKind::Access(base, key) => {
                base.for_each_ref(f);
                key.for_each_ref(f);
            }
            ExprKind::Cast(_, inner) => inner.for_each_ref(f),
        }
    }

    pub fn refs(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.for_each_ref(&mut |n| {
            out.insert(n.clone());
        });
        out
    }

    /// Rebuilds the expression bottom-up; `f` sees every node after its
    /// children were rewritten and may replace it.
    pub fn rewrite(&self, f: &mut impl FnMut(Expr) -> Expr) -> Expr {
        let kind = match &self.kind {
            ExprKind::Ref(n) => ExprKind::Ref(n.clone()),
            ExprKind::Access(base, key) => ExprKind::Access(Box::new(base.rewrite(f)), Box::new(key.rewrite(f))),
            ExprKind::Cast(t, inner) => ExprKind::Cast(t.clone(), Box::new(inner.rewrite(f))),
        };
        f(Expr::new(kind, self.span))
    }

    pub fn size(&self) -> usize {
        match &self.kind {
            ExprKind::Ref(_) => 1,
            ExprKind::Access(b, k) => 1 + b.size() + k.size(),
            ExprKind::Cast(_, inner) => 1 + inner.size(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Ref(n) => write!(f, "{n}"),
            ExprKind::Access(base, key) => write!(f, "{base}[{key}]"),
            ExprKind::Cast(t, inner) => write!(f, "{t}({inner})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Eq,
    Ne,
}

impl CompareOp {
    pub fn negate(self) -> CompareOp {
        match self {
            CompareOp::Eq => CompareOp::Ne,
            CompareOp::Ne => CompareOp::Eq,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Empty,
    Compare {
        lhs: Expr,
        rhs: Expr,
        op: CompareOp,
    },
    Assign {
        lhs: Expr,
        rhs: Expr,
    },
    Reach {
        from: Name,
        to: Name,
        negated: bool,
    },
    Tag(Name),
    /// `lhs = T(*)`
    AnyAssign {
        lhs: Expr,
        domain: TypeExpr,
    },
    /// `$$ var`
    VarTag(Name),
}

impl Action {
    pub fn is_shorthand(&self) -> bool {
        matches!(self, Action::AnyAssign { .. } | Action::VarTag(_))
    }

    /// Assignment whose target is exactly the `player` variable.
    pub fn is_player_assignment(&self) -> bool {
        match self {
            Action::Assign { lhs, .. } | Action::AnyAssign { lhs, .. } => {
                strip_casts(lhs).as_ref_name().is_some_and(|n| &**n == builtin::PLAYER)
            }
            _ => false,
        }
    }

    /// Neither changes the semistate nor can be illegal.
    pub fn is_unconditional_noop(&self) -> bool {
        matches!(self, Action::Empty | Action::Tag(_))
    }

    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Action::Compare { lhs, rhs, .. } | Action::Assign { lhs, rhs } => vec![lhs, rhs],
            Action::AnyAssign { lhs, .. } => vec![lhs],
            _ => vec![],
        }
    }

    /// Names read when the action is evaluated. The root of an assignment
    /// target is not a read unless the assignment goes through an access.
    pub fn reads(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        match self {
            Action::Compare { lhs, rhs, .. } => {
                out.extend(lhs.refs());
                out.extend(rhs.refs());
            }
            Action::Assign { lhs, rhs } => {
                lhs_reads(lhs, &mut out);
                out.extend(rhs.refs());
            }
            Action::AnyAssign { lhs, .. } => lhs_reads(lhs, &mut out),
            Action::VarTag(v) => {
                out.insert(v.clone());
            }
            _ => {}
        }
        out
    }

    /// Root variable of an assignment target.
    pub fn assigned_root(&self) -> Option<&Name> {
        match self {
            Action::Assign { lhs, .. } | Action::AnyAssign { lhs, .. } => lhs.root_name(),
            _ => None,
        }
    }

    /// Calls `f` on every expression owned by the action, allowing rewrites.
    pub fn map_exprs(&self, f: &mut impl FnMut(&Expr) -> Expr) -> Action {
        match self {
            Action::Compare { lhs, rhs, op } => Action::Compare { lhs: f(lhs), rhs: f(rhs), op: *op },
            Action::Assign { lhs, rhs } => Action::Assign { lhs: f(lhs), rhs: f(rhs) },
            Action::AnyAssign { lhs, domain } => Action::AnyAssign { lhs: f(lhs), domain: domain.clone() },
            other => other.clone(),
        }
    }
}

fn lhs_reads(lhs: &Expr, out: &mut BTreeSet<Name>) {
    match &lhs.kind {
        ExprKind::Ref(_) => {}
        ExprKind::Access(base, key) => {
            // a partial update reads the rest of the map
            out.extend(base.refs());
            out.extend(key.refs());
        }
        ExprKind::Cast(_, inner) => lhs_reads(inner, out),
    }
}

pub fn strip_casts(e: &Expr) -> &Expr {
    match &e.kind {
        ExprKind::Cast(_, inner) => strip_casts(inner),
        _ => e,
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Empty => Ok(()),
            Action::Compare { lhs, rhs, op } => match op {
                CompareOp::Eq => write!(f, "{lhs} == {rhs}"),
                CompareOp::Ne => write!(f, "{lhs} != {rhs}"),
            },
            Action::Assign { lhs, rhs } => write!(f, "{lhs} = {rhs}"),
            Action::Reach { from, to, negated } => {
                let mark = if *negated { '!' } else { '?' };
                write!(f, "{mark} {from} -> {to}")
            }
            Action::Tag(t) => write!(f, "$ {t}"),
            Action::AnyAssign { lhs, domain } => write!(f, "{lhs} = {domain}(*)"),
            Action::VarTag(v) => write!(f, "$$ {v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub from: Name,
    pub to: Name,
    pub action: Action,
    pub span: Span,
}

impl Edge {
    pub fn new(from: impl Into<Name>, to: impl Into<Name>, action: Action) -> Edge {
        Edge { from: from.into(), to: to.into(), action, span: Span::default() }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}: {};", self.from, self.to, self.action)
    }
}

/// `@name tokens... ;` kept verbatim, token by token.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pragma {
    pub name: Name,
    pub tokens: Vec<String>,
    pub span: Span,
}

impl fmt::Display for Pragma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.name)?;
        for t in &self.tokens {
            write!(f, " {t}")?;
        }
        f.write_str(";")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeDecl {
    pub ty: TypeExpr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstDecl {
    pub ty: TypeExpr,
    pub value: Value,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub ty: TypeExpr,
    pub init: Value,
    pub span: Span,
}

/// A complete game: declarations keyed by name, edges in source order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GameDescription {
    pub types: BTreeMap<Name, TypeDecl>,
    pub constants: BTreeMap<Name, ConstDecl>,
    pub variables: BTreeMap<Name, VarDecl>,
    pub edges: Vec<Edge>,
    pub pragmas: Vec<Pragma>,
}

impl GameDescription {
    pub fn add_type(&mut self, name: impl Into<Name>, ty: TypeExpr) {
        self.types.insert(name.into(), TypeDecl { ty, span: Span::default() });
    }

    pub fn add_constant(&mut self, name: impl Into<Name>, ty: TypeExpr, value: Value) {
        self.constants.insert(name.into(), ConstDecl { ty, value, span: Span::default() });
    }

    pub fn add_variable(&mut self, name: impl Into<Name>, ty: TypeExpr, init: Value) {
        self.variables.insert(name.into(), VarDecl { ty, init, span: Span::default() });
    }

    /// Every edge endpoint plus `begin` and `end`.
    pub fn nodes(&self) -> BTreeSet<Name> {
        let mut nodes: BTreeSet<Name> = self.edges.iter().flat_map(|e| [e.from.clone(), e.to.clone()]).collect();
        nodes.insert(Name::new(builtin::BEGIN));
        nodes.insert(Name::new(builtin::END));
        nodes
    }

    /// Nodes mentioned by reachability checks.
    pub fn reach_nodes(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for e in &self.edges {
            if let Action::Reach { from, to, .. } = &e.action {
                out.insert(from.clone());
                out.insert(to.clone());
            }
        }
        out
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.types.contains_key(name) || self.constants.contains_key(name) || self.variables.contains_key(name)
    }

    /// Every symbol of every set type literal appearing in declarations.
    pub fn declared_symbols(&self) -> BTreeSet<Name> {
        fn collect(t: &TypeExpr, out: &mut BTreeSet<Name>) {
            match t {
                TypeExpr::Set(s) => out.extend(s.iter().cloned()),
                TypeExpr::Arrow(a, b) => {
                    collect(a, out);
                    collect(b, out);
                }
                TypeExpr::Alias(_) => {}
            }
        }
        let mut out = BTreeSet::new();
        for d in self.types.values() {
            collect(&d.ty, &mut out);
        }
        for d in self.constants.values() {
            collect(&d.ty, &mut out);
        }
        for d in self.variables.values() {
            collect(&d.ty, &mut out);
        }
        for e in &self.edges {
            if let Action::AnyAssign { domain, .. } = &e.action {
                collect(domain, &mut out);
            }
        }
        out
    }

    /// Pragmas named `name`.
    pub fn pragmas_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Pragma> + 'a {
        self.pragmas.iter().filter(move |p| &*p.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown type alias `{0}`")]
    UnknownAlias(Name),
    #[error("recursive type alias `{0}`")]
    RecursiveAlias(Name),
    #[error("arrow type source must be a set type")]
    ArrowSourceNotSet,
    #[error("unknown name `{0}`")]
    UnknownName(Name),
    #[error("access on an expression of set type")]
    AccessOnSetType,
    #[error("access key type is not assignable to the map's source type")]
    KeyTypeMismatch,
    #[error("cast operand type is not assignable to the cast target")]
    CastTypeMismatch,
    #[error("symbol `{symbol}` is outside the cast target `{target}`")]
    CastOutsideDomain { symbol: Name, target: String },
    #[error("key `{0}` is outside the map's source domain")]
    KeyOutsideSourceDomain(Name),
    #[error("value does not have the shape of its type")]
    ShapeMismatch,
    #[error("recursive constant `{0}`")]
    RecursiveConstant(Name),
    #[error("value does not fit type `{0}`")]
    ValueOutsideType(String),
}
