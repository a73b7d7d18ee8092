//! Forward data-flow analyses over the rules automaton.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::model::{
    builtin, infer_expr_type, map_lookup, strip_casts, value_fits, Action, Env, Expr, ExprKind, GameDescription, Name,
    TypeExpr, Value,
};

use super::TransformError;

/// An automaton edge as seen by an analysis. Reachability checks add an
/// unlabeled flow into the start of their subautomaton, since the walk that
/// checks it starts from the current semistate.
#[derive(Clone, Copy, Debug)]
pub struct FlowEdge<'a> {
    /// Index into `edges`, `None` for the synthetic check entries.
    pub index: Option<usize>,
    pub from: &'a Name,
    pub to: &'a Name,
    pub action: &'a Action,
}

static SKIP: Action = Action::Empty;

pub fn flow_edges(g: &GameDescription) -> Vec<FlowEdge<'_>> {
    let mut out: Vec<FlowEdge<'_>> = g
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| FlowEdge { index: Some(i), from: &e.from, to: &e.to, action: &e.action })
        .collect();
    let mut entries = BTreeSet::new();
    for e in &g.edges {
        if let Action::Reach { from, .. } = &e.action {
            if entries.insert((&e.from, from)) {
                out.push(FlowEdge { index: None, from: &e.from, to: from, action: &SKIP });
            }
        }
    }
    out
}

/// A monotone framework instance: a join semilattice of knowledge and a
/// per-edge transfer function built from kill and gen.
pub trait Analysis {
    type Domain: Clone + PartialEq + fmt::Debug;

    fn bot(&self) -> Self::Domain;
    /// Knowledge at `begin` before anything happened.
    fn extreme(&self) -> Self::Domain;
    fn join(&self, a: &Self::Domain, b: &Self::Domain) -> Self::Domain;
    fn kill(&self, k: Self::Domain, e: &FlowEdge<'_>) -> Self::Domain;
    /// `before` is the knowledge on entry to the edge, prior to `kill`.
    fn gen(&self, k: Self::Domain, before: &Self::Domain, e: &FlowEdge<'_>) -> Self::Domain;
    /// Longest strictly ascending chain in the lattice.
    fn height(&self) -> usize;

    fn transfer(&self, k: &Self::Domain, e: &FlowEdge<'_>) -> Self::Domain {
        self.gen(self.kill(k.clone(), e), k, e)
    }

    fn leq(&self, a: &Self::Domain, b: &Self::Domain) -> bool {
        self.join(a, b) == *b
    }
}

/// Least fixed point by worklist iteration. Knowledge at `begin` is the
/// extreme value joined with whatever flows back into it.
pub fn analyze<A: Analysis>(g: &GameDescription, a: &A) -> Result<BTreeMap<Name, A::Domain>, TransformError> {
    let nodes = g.nodes();
    let flows = flow_edges(g);
    let mut out: BTreeMap<&Name, Vec<&FlowEdge<'_>>> = BTreeMap::new();
    for f in &flows {
        out.entry(f.from).or_default().push(f);
    }
    let begin = Name::new(builtin::BEGIN);
    let mut know: BTreeMap<Name, A::Domain> = nodes.iter().map(|n| (n.clone(), a.bot())).collect();
    know.insert(begin.clone(), a.extreme());

    let bound = nodes.len() * a.height().max(1);
    let mut updates = 0;
    let mut queued: BTreeSet<Name> = nodes.clone();
    let mut work: VecDeque<Name> =
        std::iter::once(begin.clone()).chain(nodes.iter().filter(|n| **n != begin).cloned()).collect();
    while let Some(n) = work.pop_front() {
        queued.remove(&n);
        let here = know[&n].clone();
        for f in out.get(&n).into_iter().flatten() {
            let flowed = a.transfer(&here, f);
            let old = &know[f.to];
            let new = a.join(old, &flowed);
            if new != *old {
                updates += 1;
                if updates > bound {
                    return Err(TransformError::NonConvergence(bound));
                }
                know.insert(f.to.clone(), new);
                if queued.insert(f.to.clone()) {
                    work.push_back(f.to.clone());
                }
            }
        }
    }
    Ok(know)
}

/// Checks the lattice laws on `samples` and monotonicity of every flow.
pub fn check_laws<A: Analysis>(a: &A, samples: &[A::Domain], flows: &[FlowEdge<'_>]) -> Result<(), String> {
    let bot = a.bot();
    for x in samples {
        if a.join(x, x) != *x {
            return Err(format!("join is not idempotent on {x:?}"));
        }
        if a.join(&bot, x) != *x {
            return Err(format!("bot is not an identity for {x:?}"));
        }
        for y in samples {
            let xy = a.join(x, y);
            if xy != a.join(y, x) {
                return Err(format!("join is not commutative on {x:?}, {y:?}"));
            }
            for z in samples {
                if a.join(&xy, z) != a.join(x, &a.join(y, z)) {
                    return Err(format!("join is not associative on {x:?}, {y:?}, {z:?}"));
                }
            }
            if a.leq(x, y) {
                for f in flows {
                    if !a.leq(&a.transfer(x, f), &a.transfer(y, f)) {
                        return Err(format!("transfer over `{}` is not monotone", f.action));
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Known {
    Const(Name),
    Varies,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Knowledge {
    Unreached,
    Reached(BTreeMap<Name, Known>),
}

impl Knowledge {
    pub fn get(&self, var: &str) -> Option<&Name> {
        match self {
            Knowledge::Reached(m) => match m.get(var) {
                Some(Known::Const(s)) => Some(s),
                _ => None,
            },
            Knowledge::Unreached => None,
        }
    }
}

/// Which set-typed variables hold a known symbol.
pub struct ConstantValues {
    env: Env,
    initial: BTreeMap<Name, Known>,
}

impl ConstantValues {
    pub fn new(g: &GameDescription) -> ConstantValues {
        let (env, _) = Env::new(g);
        let initial = env
            .variables
            .iter()
            .filter_map(|(n, (t, v))| match (t, v) {
                (TypeExpr::Set(_), Value::Symbol(s)) => Some((n.clone(), Known::Const(s.clone()))),
                _ => None,
            })
            .collect();
        ConstantValues { env, initial }
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    fn tracked(&self, var: &str) -> bool {
        self.initial.contains_key(var)
    }

    fn whole_target<'a>(&self, a: &'a Action) -> Option<&'a Name> {
        match a {
            Action::Assign { lhs, .. } | Action::AnyAssign { lhs, .. } => {
                strip_casts(lhs).as_ref_name().filter(|n| self.tracked(n))
            }
            _ => None,
        }
    }

    /// Value of `e` if the knowledge determines it.
    pub fn eval(&self, e: &Expr, k: &Knowledge) -> Option<Value> {
        let Knowledge::Reached(known) = k else {
            return None;
        };
        match &e.kind {
            ExprKind::Ref(n) => {
                if self.env.variables.contains_key(n) {
                    match known.get(n) {
                        Some(Known::Const(s)) => Some(Value::Symbol(s.clone())),
                        _ => None,
                    }
                } else if let Some((_, v)) = self.env.constants.get(n) {
                    Some(v.clone())
                } else if self.env.symbols.contains(n) {
                    Some(Value::Symbol(n.clone()))
                } else {
                    None
                }
            }
            ExprKind::Access(base, key) => {
                let map = self.eval(base, k)?;
                let Some(Value::Symbol(key)) = self.eval(key, k) else {
                    return None;
                };
                match infer_expr_type(base, &self.env).ok()? {
                    TypeExpr::Arrow(src, _) if src.as_set()?.contains(&key) => Some(map_lookup(&map, &key).clone()),
                    _ => None,
                }
            }
            ExprKind::Cast(t, inner) => {
                let v = self.eval(inner, k)?;
                let t = self.env.resolve(t).ok()?;
                value_fits(&t, &v).then_some(v)
            }
        }
    }
}

impl Analysis for ConstantValues {
    type Domain = Knowledge;

    fn bot(&self) -> Knowledge {
        Knowledge::Unreached
    }

    fn extreme(&self) -> Knowledge {
        Knowledge::Reached(self.initial.clone())
    }

    fn join(&self, a: &Knowledge, b: &Knowledge) -> Knowledge {
        match (a, b) {
            (Knowledge::Unreached, x) | (x, Knowledge::Unreached) => x.clone(),
            (Knowledge::Reached(x), Knowledge::Reached(y)) => Knowledge::Reached(
                x.iter()
                    .map(|(n, v)| {
                        let same = y.get(n) == Some(v);
                        (n.clone(), if same { v.clone() } else { Known::Varies })
                    })
                    .collect(),
            ),
        }
    }

    fn kill(&self, mut k: Knowledge, e: &FlowEdge<'_>) -> Knowledge {
        if let (Knowledge::Reached(m), Some(x)) = (&mut k, self.whole_target(e.action)) {
            m.insert(x.clone(), Known::Varies);
        }
        k
    }

    fn gen(&self, mut k: Knowledge, before: &Knowledge, e: &FlowEdge<'_>) -> Knowledge {
        if let (Action::Assign { rhs, .. }, Some(x)) = (e.action, self.whole_target(e.action)) {
            if let (Knowledge::Reached(m), Some(Value::Symbol(s))) = (&mut k, self.eval(rhs, before)) {
                m.insert(x.clone(), Known::Const(s));
            }
        }
        k
    }

    fn height(&self) -> usize {
        2 * self.initial.len() + 2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Def {
    Init,
    Edge(usize),
}

/// Which assignments may have produced each variable's value.
pub struct ReachingDefinitions {
    vars: Vec<Name>,
    edges: usize,
}

impl ReachingDefinitions {
    pub fn new(g: &GameDescription) -> ReachingDefinitions {
        ReachingDefinitions { vars: g.variables.keys().cloned().collect(), edges: g.edges.len() }
    }
}

fn whole_assignment(a: &Action) -> Option<&Name> {
    match a {
        Action::Assign { lhs, .. } | Action::AnyAssign { lhs, .. } => strip_casts(lhs).as_ref_name(),
        _ => None,
    }
}

impl Analysis for ReachingDefinitions {
    type Domain = BTreeSet<(Name, Def)>;

    fn bot(&self) -> Self::Domain {
        BTreeSet::new()
    }

    fn extreme(&self) -> Self::Domain {
        self.vars.iter().map(|v| (v.clone(), Def::Init)).collect()
    }

    fn join(&self, a: &Self::Domain, b: &Self::Domain) -> Self::Domain {
        a.union(b).cloned().collect()
    }

    fn kill(&self, mut k: Self::Domain, e: &FlowEdge<'_>) -> Self::Domain {
        if let Some(x) = whole_assignment(e.action) {
            k.retain(|(v, _)| v != x);
        }
        k
    }

    fn gen(&self, mut k: Self::Domain, before: &Self::Domain, e: &FlowEdge<'_>) -> Self::Domain {
        if let (Some(x), Some(i)) = (e.action.assigned_root(), e.index) {
            if !before.is_empty() {
                k.insert((x.clone(), Def::Edge(i)));
            }
        }
        k
    }

    fn height(&self) -> usize {
        self.vars.len() * (self.edges + 1) + 1
    }
}

/// Tag counts beyond this are not tracked.
const POSITION_CAP: u32 = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Positions {
    /// Pairs of (node the move started at, tags emitted since).
    Set(BTreeSet<(Name, u32)>),
    Many,
}

impl Positions {
    pub fn is_empty(&self) -> bool {
        matches!(self, Positions::Set(s) if s.is_empty())
    }
}

/// How many tags the current move has emitted on arrival at each node.
pub struct TagPositions {
    nodes: usize,
}

impl TagPositions {
    pub fn new(g: &GameDescription) -> TagPositions {
        TagPositions { nodes: g.nodes().len() }
    }
}

impl Analysis for TagPositions {
    type Domain = Positions;

    fn bot(&self) -> Positions {
        Positions::Set(BTreeSet::new())
    }

    fn extreme(&self) -> Positions {
        Positions::Set(BTreeSet::from([(Name::new(builtin::BEGIN), 0)]))
    }

    fn join(&self, a: &Positions, b: &Positions) -> Positions {
        match (a, b) {
            (Positions::Set(x), Positions::Set(y)) => Positions::Set(x.union(y).cloned().collect()),
            _ => Positions::Many,
        }
    }

    fn kill(&self, k: Positions, e: &FlowEdge<'_>) -> Positions {
        if e.action.is_player_assignment() {
            self.bot()
        } else {
            k
        }
    }

    fn gen(&self, k: Positions, before: &Positions, e: &FlowEdge<'_>) -> Positions {
        if e.action.is_player_assignment() {
            return if before.is_empty() { k } else { Positions::Set(BTreeSet::from([(e.to.clone(), 0)])) };
        }
        match (e.action, k) {
            (Action::Tag(_) | Action::VarTag(_), Positions::Set(s)) => {
                if s.iter().any(|(_, c)| *c >= POSITION_CAP) {
                    Positions::Many
                } else {
                    Positions::Set(s.into_iter().map(|(n, c)| (n, c + 1)).collect())
                }
            }
            (_, k) => k,
        }
    }

    fn height(&self) -> usize {
        self.nodes * (POSITION_CAP as usize + 2) + 2
    }
}
