use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use thiserror::Error;

use super::value::{CType, Sym, Val};
use crate::diag::{has_errors, Diagnostic};
use crate::graph::Graph;
use crate::model::{
    builtin, infer_expr_type, strip_casts, type_equal, Action, CompareOp, Env, Expr, ExprKind, GameDescription,
    ModelError, Name, TypeExpr, Value,
};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("description has errors:\n{}", render(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("shorthand action `{0}` must be expanded first")]
    Shorthand(String),
    #[error("{0} players; at most 64 are supported")]
    TooManyPlayers(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn render(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

#[derive(Debug)]
pub(crate) enum CExpr {
    Var(u32),
    Const(Val),
    Access { base: Box<CExpr>, key: Box<CExpr>, source: Arc<CType> },
    Cast { inner: Box<CExpr>, target: Arc<CType> },
}

#[derive(Debug)]
pub(crate) struct CAssign {
    pub var: u32,
    pub keys: Vec<CExpr>,
    /// Arrow type of the map at each key level.
    pub levels: Vec<Arc<CType>>,
    pub value: CExpr,
    pub target: Arc<CType>,
    /// The value is stored canonically under a different type.
    pub recanon: bool,
    pub player: bool,
}

#[derive(Debug)]
pub(crate) enum CAction {
    Empty,
    Tag(Sym),
    Compare {
        lhs: CExpr,
        rhs: CExpr,
        negated: bool,
        /// Set when the operands are maps stored under different types.
        over: Option<Arc<CType>>,
    },
    Assign(Box<CAssign>),
    Reach {
        sub: u32,
        negated: bool,
    },
}

#[derive(Debug)]
pub(crate) struct CEdge {
    pub to: u32,
    pub action: CAction,
}

/// Edges lying on some walk between the endpoints of a reachability check.
#[derive(Debug)]
pub(crate) struct Sub {
    pub start: u32,
    pub target: u32,
    pub out: Vec<Vec<u32>>,
}

#[derive(Debug)]
pub(crate) struct VarInfo {
    pub name: Name,
    pub ty: Arc<CType>,
    pub init: Val,
}

/// A validated description compiled for interpretation. Immutable and
/// shareable between threads.
#[derive(Debug)]
pub struct Game {
    pub(crate) desc: GameDescription,
    pub(crate) symbols: Vec<Name>,
    pub(crate) symbol_ids: BTreeMap<Name, Sym>,
    pub(crate) nodes: Vec<Name>,
    pub(crate) begin: u32,
    pub(crate) end: u32,
    pub(crate) vars: Vec<VarInfo>,
    pub(crate) player_var: usize,
    pub(crate) goals_var: usize,
    pub(crate) visible_var: usize,
    pub(crate) keeper: Sym,
    pub(crate) random: Sym,
    pub(crate) one: Sym,
    pub(crate) players: Vec<Sym>,
    pub(crate) edges: Vec<CEdge>,
    pub(crate) out: Vec<Vec<u32>>,
    pub(crate) subs: Vec<Sub>,
}

struct Compiler<'a> {
    env: &'a Env,
    ids: BTreeMap<Name, Sym>,
    var_ids: BTreeMap<Name, u32>,
    types: HashMap<TypeExpr, Arc<CType>>,
}

impl Compiler<'_> {
    fn sym(&self, n: &Name) -> Sym {
        self.ids[n]
    }

    fn ctype(&mut self, t: &TypeExpr) -> Result<Arc<CType>, ModelError> {
        if let Some(c) = self.types.get(t) {
            return Ok(c.clone());
        }
        let c = match t {
            TypeExpr::Set(names) => CType::set(names.iter().map(|n| self.sym(n)).collect()),
            TypeExpr::Arrow(s, d) => {
                let mut keys: Vec<Sym> =
                    s.as_set().ok_or(ModelError::ArrowSourceNotSet)?.iter().map(|n| self.sym(n)).collect();
                keys.sort_unstable();
                CType::Arrow { keys, source: self.ctype(s)?, dest: self.ctype(d)? }
            }
            TypeExpr::Alias(_) => return self.ctype(&self.env.resolve(t)?),
        };
        let c = Arc::new(c);
        self.types.insert(t.clone(), c.clone());
        Ok(c)
    }

    fn value(&mut self, t: &TypeExpr, v: &Value) -> Result<Val, ModelError> {
        let raw = self.raw_value(t, v)?;
        Ok(self.ctype(t)?.canonicalize(&raw))
    }

    fn raw_value(&mut self, t: &TypeExpr, v: &Value) -> Result<Val, ModelError> {
        match (t, v) {
            (_, Value::Symbol(s)) => match self.ids.get(s) {
                Some(&id) => Ok(Val::Sym(id)),
                None => Err(ModelError::UnknownName(s.clone())),
            },
            (TypeExpr::Arrow(_, d), Value::Map { default, entries }) => {
                let default = self.raw_value(d, default)?;
                let mut out = Vec::with_capacity(entries.len());
                for (k, x) in entries {
                    if let Some(&id) = self.ids.get(k) {
                        out.push((id, self.raw_value(d, x)?));
                    }
                }
                out.sort_by_key(|(k, _)| *k);
                out.dedup_by_key(|(k, _)| *k);
                Ok(Val::map(default, out))
            }
            _ => Err(ModelError::ShapeMismatch),
        }
    }

    /// Type under which the value of `e` is stored; casts only retype.
    fn storage_type(&self, e: &Expr) -> Result<TypeExpr, ModelError> {
        match &e.kind {
            ExprKind::Ref(n) => self.env.name_type(n),
            ExprKind::Access(b, _) => match self.storage_type(b)? {
                TypeExpr::Arrow(_, d) => Ok(*d),
                _ => Err(ModelError::AccessOnSetType),
            },
            ExprKind::Cast(_, inner) => self.storage_type(inner),
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<CExpr, ModelError> {
        Ok(match &e.kind {
            ExprKind::Ref(n) => {
                if let Some(&i) = self.var_ids.get(n) {
                    CExpr::Var(i)
                } else if let Some((t, v)) = self.env.constants.get(n) {
                    CExpr::Const(self.value(t, v)?)
                } else if let Some(&id) = self.ids.get(n) {
                    CExpr::Const(Val::Sym(id))
                } else {
                    return Err(ModelError::UnknownName(n.clone()));
                }
            }
            ExprKind::Access(b, k) => {
                let TypeExpr::Arrow(source, _) = infer_expr_type(b, self.env)? else {
                    return Err(ModelError::AccessOnSetType);
                };
                CExpr::Access {
                    base: Box::new(self.expr(b)?),
                    key: Box::new(self.expr(k)?),
                    source: self.ctype(&source)?,
                }
            }
            ExprKind::Cast(t, inner) => {
                let t = self.env.resolve(t)?;
                CExpr::Cast { inner: Box::new(self.expr(inner)?), target: self.ctype(&t)? }
            }
        })
    }

    fn assign(&mut self, lhs: &Expr, rhs: &Expr) -> Result<CAssign, ModelError> {
        let mut keys = Vec::new();
        let mut cur = strip_casts(lhs);
        while let ExprKind::Access(b, k) = &cur.kind {
            keys.push(k.as_ref());
            cur = strip_casts(b);
        }
        keys.reverse();
        let root = cur.as_ref_name().ok_or(ModelError::ShapeMismatch)?;
        let var = *self.var_ids.get(root).ok_or_else(|| ModelError::UnknownName(root.clone()))?;
        let mut t = self.env.variables[root].0.clone();
        let mut levels = Vec::with_capacity(keys.len());
        let mut ckeys = Vec::with_capacity(keys.len());
        for k in keys {
            levels.push(self.ctype(&t)?);
            ckeys.push(self.expr(k)?);
            t = match t {
                TypeExpr::Arrow(_, d) => *d,
                _ => return Err(ModelError::AccessOnSetType),
            };
        }
        let stored = self.storage_type(rhs)?;
        let recanon = matches!(stored, TypeExpr::Arrow(..)) && !type_equal(&stored, &t);
        Ok(CAssign {
            var,
            player: &**root == builtin::PLAYER && ckeys.is_empty(),
            keys: ckeys,
            levels,
            value: self.expr(rhs)?,
            target: self.ctype(&t)?,
            recanon,
        })
    }

    fn compare(&mut self, lhs: &Expr, rhs: &Expr, op: CompareOp) -> Result<CAction, ModelError> {
        let (l, r) = (self.storage_type(lhs)?, self.storage_type(rhs)?);
        let over = if matches!(l, TypeExpr::Arrow(..)) && !type_equal(&l, &r) {
            Some(self.ctype(&infer_expr_type(lhs, self.env)?)?)
        } else {
            None
        };
        Ok(CAction::Compare { lhs: self.expr(lhs)?, rhs: self.expr(rhs)?, negated: op == CompareOp::Ne, over })
    }
}

impl Game {
    /// Compiles a description that has passed `validate::prepare` and has
    /// its shorthand actions expanded.
    pub fn compile(desc: &GameDescription) -> Result<Game, CompileError> {
        let (env, diags) = Env::new(desc);
        if has_errors(&diags) {
            return Err(CompileError::Invalid(diags));
        }
        if let Some(e) = desc.edges.iter().find(|e| e.action.is_shorthand()) {
            return Err(CompileError::Shorthand(e.action.to_string()));
        }

        let mut names: BTreeSet<Name> = env.symbols.clone();
        for e in &desc.edges {
            if let Action::Tag(t) = &e.action {
                names.insert(t.clone());
            }
        }
        let symbols: Vec<Name> = names.into_iter().collect();
        let ids: BTreeMap<Name, Sym> = symbols.iter().enumerate().map(|(i, n)| (n.clone(), i as Sym)).collect();
        let var_ids: BTreeMap<Name, u32> =
            env.variables.keys().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        let mut c = Compiler { env: &env, ids, var_ids, types: HashMap::new() };

        let mut vars = Vec::with_capacity(env.variables.len());
        for (name, (t, init)) in &env.variables {
            vars.push(VarInfo { name: name.clone(), ty: c.ctype(t)?, init: c.value(t, init)? });
        }

        let nodes: Vec<Name> = desc.nodes().into_iter().collect();
        let node_ids: BTreeMap<&Name, u32> = nodes.iter().enumerate().map(|(i, n)| (n, i as u32)).collect();
        let node = |n: &str| node_ids[&Name::new(n)];
        let (begin, end) = (node(builtin::BEGIN), node(builtin::END));

        let graph = Graph::of(desc);
        let mut sub_ids: BTreeMap<(Name, Name), u32> = BTreeMap::new();
        let mut subs = Vec::new();
        let mut edges = Vec::with_capacity(desc.edges.len());
        let mut out = vec![Vec::new(); nodes.len()];
        for (i, e) in desc.edges.iter().enumerate() {
            let action = match &e.action {
                Action::Empty => CAction::Empty,
                Action::Tag(t) => CAction::Tag(c.sym(t)),
                Action::Compare { lhs, rhs, op } => c.compare(lhs, rhs, *op)?,
                Action::Assign { lhs, rhs } => CAction::Assign(Box::new(c.assign(lhs, rhs)?)),
                Action::Reach { from, to, negated } => {
                    let key = (from.clone(), to.clone());
                    let sub = match sub_ids.get(&key) {
                        Some(&s) => s,
                        None => {
                            let mut sub_out = vec![Vec::new(); nodes.len()];
                            for j in graph.reduced(&desc.edges, from, to) {
                                sub_out[node(&desc.edges[j].from) as usize].push(j as u32);
                            }
                            subs.push(Sub { start: node(from), target: node(to), out: sub_out });
                            let s = subs.len() as u32 - 1;
                            sub_ids.insert(key, s);
                            s
                        }
                    };
                    CAction::Reach { sub, negated: *negated }
                }
                Action::AnyAssign { .. } | Action::VarTag(_) => unreachable!("rejected above"),
            };
            out[node(&e.from) as usize].push(i as u32);
            edges.push(CEdge { to: node(&e.to), action });
        }

        let player_set = env.types.get(builtin::PLAYER_TYPE).and_then(|t| t.as_set()).unwrap_or_default();
        if player_set.len() > 64 {
            return Err(CompileError::TooManyPlayers(player_set.len()));
        }
        let players = player_set.iter().map(|n| c.sym(n)).collect();
        let keeper = c.sym(&Name::new(builtin::KEEPER));
        let random = c.sym(&Name::new(builtin::RANDOM));
        let one = c.sym(&Name::new("1"));
        let var_index = |n: &str| c.var_ids[&Name::new(n)] as usize;
        let (player_var, goals_var, visible_var) =
            (var_index(builtin::PLAYER), var_index(builtin::GOALS), var_index(builtin::VISIBLE));
        let symbol_ids = c.ids;
        drop(node_ids);

        Ok(Game {
            desc: desc.clone(),
            symbols,
            symbol_ids,
            begin,
            end,
            nodes,
            vars,
            player_var,
            goals_var,
            visible_var,
            keeper,
            random,
            one,
            players,
            edges,
            out,
            subs,
        })
    }
}
