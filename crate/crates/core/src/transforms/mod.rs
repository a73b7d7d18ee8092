//! Description-to-description optimizations and the fixed-point driver.
//!
//! Every pass takes a validated description and returns a new one with the
//! same game tree. Passes that rewrite labels (tag skipping, renaming) keep
//! the number and order of moves in every state but not their names.

mod analysis;
mod exprs;
mod joins;
mod normalize;
mod prune;
mod reach;
mod shorthand;
mod tags;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde_json::json;
use thiserror::Error;

use crate::diag::{has_errors, Diagnostic};
use crate::graph::Graph;
use crate::model::{builtin, Action, Edge, Env, GameDescription, Name, TypeExpr};
use crate::parser::render_game;
use crate::validate::validate_static;

pub use analysis::{
    analyze, check_laws, flow_edges, Analysis, ConstantValues, Def, FlowEdge, Knowledge, Known, Positions,
    ReachingDefinitions, TagPositions,
};
pub use shorthand::expand_shorthands;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Expression,
    Join,
    Reachability,
    Pruning,
    Tag,
    Normalization,
    Expansion,
}

macro_rules! passes {
    ($($id:ident => ($slug:literal, $cat:ident, $safe:literal)),* $(,)?) => {
        /// The optimization catalog.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum PassId {
            $($id),*
        }

        impl PassId {
            pub const ALL: &'static [PassId] = &[$(PassId::$id),*];

            pub fn name(self) -> &'static str {
                match self {
                    $(PassId::$id => stringify!($id)),*
                }
            }

            /// Lowercase form used in snapshot file names.
            pub fn slug(self) -> &'static str {
                match self {
                    $(PassId::$id => $slug),*
                }
            }

            pub fn category(self) -> Category {
                match self {
                    $(PassId::$id => Category::$cat),*
                }
            }

            /// Unsafe passes may change the game and are never enabled by default.
            pub fn is_safe(self) -> bool {
                match self {
                    $(PassId::$id => $safe),*
                }
            }
        }
    };
}

passes! {
    CompactComparisons => ("compact_comparisons", Expression, true),
    InlineAssignment => ("inline_assignment", Expression, true),
    MergeAccesses => ("merge_accesses", Expression, true),
    PropagateConstants => ("propagate_constants", Expression, true),
    ReorderConditions => ("reorder_conditions", Expression, false),
    SkipSelfAssignCompare => ("skip_self_assign_compare", Expression, true),
    JoinExclusiveEdges => ("join_exclusive_edges", Join, true),
    JoinForkPrefixes => ("join_fork_prefixes", Join, true),
    JoinForkSuffixes => ("join_fork_suffixes", Join, true),
    CompactSkipEdges => ("compact_skip_edges", Join, true),
    PruneUnreachableNodes => ("prune_unreachable_nodes", Pruning, true),
    PruneUnusedConstsVars => ("prune_unused_consts_vars", Pruning, true),
    SkipArtificialTags => ("skip_artificial_tags", Tag, true),
    SkipRedundantTags => ("skip_redundant_tags", Tag, true),
    CompactReachability => ("compact_reachability", Reachability, true),
    InlineReachability => ("inline_reachability", Reachability, true),
    SkipUnusedTags => ("skip_unused_tags", Tag, true),
    AddExplicitCasts => ("add_explicit_casts", Normalization, true),
    ExpandAnyAssignment => ("expand_any_assignment", Expansion, true),
    ExpandVariableTags => ("expand_variable_tags", Expansion, true),
    MangleSymbols => ("mangle_symbols", Normalization, true),
    NormalizeConstants => ("normalize_constants", Normalization, true),
    NormalizeTypes => ("normalize_types", Normalization, true),
}

impl fmt::Display for PassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PassId {
    type Err = TransformError;

    /// Accepts the catalog name or its slug, case-insensitively.
    fn from_str(s: &str) -> Result<PassId, TransformError> {
        let wanted: String = s.chars().filter(|c| *c != '_' && *c != '-').collect();
        PassId::ALL
            .iter()
            .copied()
            .find(|p| p.name().eq_ignore_ascii_case(&wanted))
            .ok_or_else(|| TransformError::UnknownPass(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum TransformError {
    #[error("{pass}: precondition not met: {reason}")]
    PassPreconditionUnmet { pass: PassId, reason: String },
    #[error("{pass} produced an invalid description: {}", first_error(.diagnostics))]
    InvalidAfterPass { pass: PassId, diagnostics: Vec<Diagnostic> },
    #[error("no fixed point after {0} iterations")]
    IterationLimitExceeded(usize),
    #[error("analysis did not converge within {0} updates")]
    NonConvergence(usize),
    #[error("unknown pass `{0}`")]
    UnknownPass(String),
}

fn first_error(diags: &[Diagnostic]) -> String {
    diags.iter().find(|d| d.is_error()).map(ToString::to_string).unwrap_or_default()
}

/// Applies one pass. `changed == false` means the result equals the input.
pub fn run_pass(g: &GameDescription, pass: PassId) -> Result<(GameDescription, bool), TransformError> {
    let out = match pass {
        PassId::CompactComparisons => exprs::compact_comparisons(g),
        PassId::InlineAssignment => exprs::inline_assignment(g)?,
        PassId::MergeAccesses => exprs::merge_accesses(g),
        PassId::PropagateConstants => exprs::propagate_constants(g)?,
        PassId::ReorderConditions => exprs::reorder_conditions(g),
        PassId::SkipSelfAssignCompare => exprs::skip_self_assign_compare(g),
        PassId::AddExplicitCasts => exprs::add_explicit_casts(g),
        PassId::JoinExclusiveEdges => joins::join_exclusive_edges(g),
        PassId::JoinForkPrefixes => joins::join_fork_prefixes(g),
        PassId::JoinForkSuffixes => joins::join_fork_suffixes(g),
        PassId::CompactSkipEdges => joins::compact_skip_edges(g),
        PassId::PruneUnreachableNodes => prune::prune_unreachable_nodes(g),
        PassId::PruneUnusedConstsVars => prune::prune_unused_consts_vars(g),
        PassId::SkipArtificialTags => tags::skip_artificial_tags(g),
        PassId::SkipRedundantTags => tags::skip_redundant_tags(g)?,
        PassId::SkipUnusedTags => tags::skip_unused_tags(g),
        PassId::CompactReachability => reach::compact_reachability(g),
        PassId::InlineReachability => reach::inline_reachability(g)?,
        PassId::ExpandAnyAssignment => shorthand::expand_any_assignment(g),
        PassId::ExpandVariableTags => shorthand::expand_variable_tags(g),
        PassId::MangleSymbols => normalize::mangle_symbols(g),
        PassId::NormalizeConstants => normalize::normalize_constants(g),
        PassId::NormalizeTypes => normalize::normalize_types(g),
    };
    let changed = out != *g;
    if changed {
        let diagnostics = validate_static(&out);
        if has_errors(&diagnostics) {
            return Err(TransformError::InvalidAfterPass { pass, diagnostics });
        }
    }
    Ok((out, changed))
}

/// Which passes run and how often the main loop may repeat.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineConfig {
    pub passes: BTreeSet<PassId>,
    pub max_iterations: usize,
}

/// Passes that run once before the loop, in this order.
const UP_FRONT: [PassId; 5] = [
    PassId::ExpandAnyAssignment,
    PassId::ExpandVariableTags,
    PassId::NormalizeTypes,
    PassId::NormalizeConstants,
    PassId::AddExplicitCasts,
];

/// The loop body: expressions, joins, reachability, prunings.
const LOOP: [PassId; 16] = [
    PassId::PropagateConstants,
    PassId::MergeAccesses,
    PassId::InlineAssignment,
    PassId::CompactComparisons,
    PassId::SkipSelfAssignCompare,
    PassId::ReorderConditions,
    PassId::JoinExclusiveEdges,
    PassId::JoinForkPrefixes,
    PassId::JoinForkSuffixes,
    PassId::CompactSkipEdges,
    PassId::CompactReachability,
    PassId::InlineReachability,
    PassId::SkipUnusedTags,
    PassId::SkipRedundantTags,
    PassId::PruneUnreachableNodes,
    PassId::PruneUnusedConstsVars,
];

/// Passes that run once after the loop; SkipArtificialTags is always last.
const FINAL: [PassId; 2] = [PassId::MangleSymbols, PassId::SkipArtificialTags];

impl Default for PipelineConfig {
    /// Every safe pass except the two that only change presentation.
    fn default() -> PipelineConfig {
        let passes = PassId::ALL
            .iter()
            .copied()
            .filter(|p| p.is_safe() && !matches!(p, PassId::AddExplicitCasts | PassId::MangleSymbols))
            .collect();
        PipelineConfig { passes, max_iterations: 32 }
    }
}

impl PipelineConfig {
    pub fn none() -> PipelineConfig {
        PipelineConfig { passes: BTreeSet::new(), max_iterations: 32 }
    }

    pub fn only(passes: impl IntoIterator<Item = PassId>) -> PipelineConfig {
        PipelineConfig { passes: passes.into_iter().collect(), ..PipelineConfig::none() }
    }

    /// The passes in the order the driver applies them.
    pub fn schedule(&self) -> Vec<PassId> {
        UP_FRONT.iter().chain(&LOOP).chain(&FINAL).copied().filter(|p| self.passes.contains(p)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PassStat {
    pub pass: PassId,
    /// 0 for the passes outside the loop.
    pub iteration: usize,
    pub changed: bool,
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub edges_before: usize,
    pub edges_after: usize,
    pub state_size_bits: u64,
}

impl PassStat {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "pass": self.pass.name(),
            "iteration": self.iteration,
            "changed": self.changed,
            "nodes_before": self.nodes_before,
            "nodes_after": self.nodes_after,
            "edges_before": self.edges_before,
            "edges_after": self.edges_after,
            "state_size_bits": self.state_size_bits,
        })
    }
}

/// Rendered description after an applied pass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub pass: PassId,
    pub text: String,
}

#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub game: GameDescription,
    pub snapshots: Vec<Snapshot>,
    pub stats: Vec<PassStat>,
    /// Loop rounds run, including the final one that changed nothing.
    pub iterations: usize,
    pub warning: Option<TransformError>,
}

impl PipelineResult {
    pub fn applied(&self) -> impl Iterator<Item = PassId> + '_ {
        self.stats.iter().filter(|s| s.changed).map(|s| s.pass)
    }

    /// `NN_passname.rg` file names paired with their contents.
    pub fn snapshot_files(&self) -> Vec<(String, &str)> {
        self.snapshots
            .iter()
            .enumerate()
            .map(|(i, s)| (format!("{:02}_{}.rg", i + 1, s.pass.slug()), s.text.as_str()))
            .collect()
    }
}

struct Driver {
    game: GameDescription,
    snapshots: Vec<Snapshot>,
    stats: Vec<PassStat>,
}

impl Driver {
    fn apply(&mut self, pass: PassId, iteration: usize) -> Result<bool, TransformError> {
        let (nodes_before, edges_before) = (self.game.nodes().len(), self.game.edges.len());
        let (out, changed) = match run_pass(&self.game, pass) {
            Ok(r) => r,
            Err(TransformError::PassPreconditionUnmet { .. }) => (self.game.clone(), false),
            Err(e) => return Err(e),
        };
        if changed {
            self.game = out;
            self.snapshots.push(Snapshot { pass, text: render_game(&self.game) });
        }
        self.stats.push(PassStat {
            pass,
            iteration,
            changed,
            nodes_before,
            nodes_after: self.game.nodes().len(),
            edges_before,
            edges_after: self.game.edges.len(),
            state_size_bits: state_size_bits(&self.game),
        });
        Ok(changed)
    }
}

/// Runs the enabled passes: the up-front group once, the loop until nothing
/// changes, then the final group once.
pub fn run_pipeline(g: &GameDescription, config: &PipelineConfig) -> Result<PipelineResult, TransformError> {
    let mut d = Driver { game: g.clone(), snapshots: Vec::new(), stats: Vec::new() };
    let enabled = |p: &PassId| config.passes.contains(p);
    for pass in UP_FRONT.iter().filter(|p| enabled(p)) {
        d.apply(*pass, 0)?;
    }
    let body: Vec<PassId> = LOOP.iter().copied().filter(enabled).collect();
    let mut iterations = 0;
    let mut warning = None;
    if !body.is_empty() {
        loop {
            if iterations == config.max_iterations {
                warning = Some(TransformError::IterationLimitExceeded(iterations));
                break;
            }
            iterations += 1;
            let mut changed = false;
            for &pass in &body {
                changed |= d.apply(pass, iterations)?;
            }
            if !changed {
                break;
            }
        }
    }
    for pass in FINAL.iter().filter(|p| enabled(p)) {
        d.apply(*pass, 0)?;
    }
    Ok(PipelineResult { game: d.game, snapshots: d.snapshots, stats: d.stats, iterations, warning })
}

/// Bits needed to store a game state: the node plus every variable.
pub fn state_size_bits(g: &GameDescription) -> u64 {
    fn bits(n: usize) -> u64 {
        (usize::BITS - n.saturating_sub(1).leading_zeros()) as u64
    }
    fn size(t: &TypeExpr) -> u64 {
        match t {
            TypeExpr::Set(s) => bits(s.len()),
            TypeExpr::Arrow(src, dest) => src.as_set().map_or(0, |s| s.len() as u64) * size(dest),
            TypeExpr::Alias(_) => 0,
        }
    }
    let (env, _) = Env::new(g);
    bits(g.nodes().len()) + env.variables.values().map(|(t, _)| size(t)).sum::<u64>()
}

/// Allocates names in the reserved `_` namespace.
pub(crate) struct Namer {
    used: BTreeSet<Name>,
}

impl Namer {
    pub(crate) fn of(g: &GameDescription) -> Namer {
        let mut used: BTreeSet<Name> = g.nodes();
        used.extend(g.types.keys().cloned());
        used.extend(g.constants.keys().cloned());
        used.extend(g.variables.keys().cloned());
        used.extend(g.declared_symbols());
        for e in &g.edges {
            if let Action::Tag(t) = &e.action {
                used.insert(t.clone());
            }
        }
        Namer { used }
    }

    /// `_base` if free, otherwise `_base_k` for the smallest free `k`.
    pub(crate) fn fresh(&mut self, base: &str) -> Name {
        let base = format!("_{}", base.trim_start_matches('_'));
        let mut candidate = Name::new(&base);
        let mut k = 1;
        while self.used.contains(&candidate) {
            candidate = Name::new(format!("{base}_{k}"));
            k += 1;
        }
        self.used.insert(candidate.clone());
        candidate
    }

    /// `_base_k` for the smallest free `k >= 1`.
    pub(crate) fn numbered(&mut self, base: &str) -> Name {
        let mut k = 1;
        loop {
            let candidate = Name::new(format!("_{base}_{k}"));
            if self.used.insert(candidate.clone()) {
                return candidate;
            }
            k += 1;
        }
    }
}

/// Nodes whose identity matters beyond the graph shape.
pub(crate) fn pinned_nodes(g: &GameDescription) -> BTreeSet<Name> {
    let mut pinned = g.reach_nodes();
    pinned.insert(Name::new(builtin::BEGIN));
    pinned.insert(Name::new(builtin::END));
    pinned
}

/// Edge indices that some reachability check may traverse.
pub(crate) fn reach_edges(g: &GameDescription, graph: &Graph) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut checks = BTreeSet::new();
    for e in &g.edges {
        if let Action::Reach { from, to, .. } = &e.action {
            checks.insert((from.clone(), to.clone()));
        }
    }
    for (from, to) in checks {
        out.extend(graph.reduced(&g.edges, &from, &to));
    }
    out
}

/// Names read by an edge, including everything its reachability check may read.
pub(crate) struct ReadSets {
    per_check: BTreeMap<(Name, Name), BTreeSet<Name>>,
}

impl ReadSets {
    pub(crate) fn new(g: &GameDescription) -> ReadSets {
        let graph = Graph::of(g);
        let mut per_check: BTreeMap<(Name, Name), BTreeSet<Name>> = BTreeMap::new();
        for e in &g.edges {
            if let Action::Reach { from, to, .. } = &e.action {
                per_check.entry((from.clone(), to.clone())).or_default();
            }
        }
        // nested checks: iterate until the sets stop growing
        loop {
            let mut grew = false;
            let keys: Vec<(Name, Name)> = per_check.keys().cloned().collect();
            for key in keys {
                let mut reads = BTreeSet::new();
                for i in graph.reduced(&g.edges, &key.0, &key.1) {
                    let a = &g.edges[i].action;
                    reads.extend(a.reads());
                    if let Action::Reach { from, to, .. } = a {
                        reads.extend(per_check[&(from.clone(), to.clone())].iter().cloned());
                    }
                }
                let slot = per_check.get_mut(&key).expect("key listed above");
                if reads.len() > slot.len() {
                    *slot = reads;
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        ReadSets { per_check }
    }

    pub(crate) fn of(&self, a: &Action) -> BTreeSet<Name> {
        match a {
            Action::Reach { from, to, .. } => {
                self.per_check.get(&(from.clone(), to.clone())).cloned().unwrap_or_default()
            }
            _ => a.reads(),
        }
    }
}

/// Whether `name` denotes a plain symbol in expression position.
pub(crate) fn is_symbol_literal(g: &GameDescription, name: &str) -> bool {
    !g.variables.contains_key(name) && !g.constants.contains_key(name)
}

/// Unwraps aliases until an arrow type appears.
pub(crate) fn arrow_parts(g: &GameDescription, t: &TypeExpr) -> Option<(TypeExpr, TypeExpr)> {
    let mut t = t.clone();
    for _ in 0..=g.types.len() {
        match t {
            TypeExpr::Arrow(a, b) => return Some((*a, *b)),
            TypeExpr::Alias(n) => t = g.types.get(&n)?.ty.clone(),
            TypeExpr::Set(_) => return None,
        }
    }
    None
}

/// Replaces edge `i` by `replacement`, keeping the rest in order.
pub(crate) fn splice(edges: &mut Vec<Edge>, i: usize, replacement: Vec<Edge>) {
    edges.splice(i..=i, replacement);
}

#[cfg(test)]
mod tests;
