//! Passes that turn tag edges into skips.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::Graph;
use crate::model::{builtin, Action, GameDescription, Name};

use super::analysis::{analyze, Positions, TagPositions};
use super::{reach_edges, TransformError};

/// Pragma listing tags that only exist to keep moves apart during
/// development.
pub const ARTIFICIAL_TAG_PRAGMA: &str = "artificialTag";

pub(super) fn skip_artificial_tags(g: &GameDescription) -> GameDescription {
    let artificial: BTreeSet<&str> =
        g.pragmas_named(ARTIFICIAL_TAG_PRAGMA).flat_map(|p| p.tokens.iter().map(String::as_str)).collect();
    let mut out = g.clone();
    for e in &mut out.edges {
        if matches!(&e.action, Action::Tag(t) if artificial.contains(t.as_str())) {
            e.action = Action::Empty;
        }
    }
    out
}

/// Tags only ever walked inside a reachability check are ignored there.
pub(super) fn skip_unused_tags(g: &GameDescription) -> GameDescription {
    let graph = Graph::of(g);
    let main = graph.forward(&g.edges, &Name::new(builtin::BEGIN));
    let in_checks = reach_edges(g, &graph);
    let mut out = g.clone();
    for i in in_checks {
        let e = &mut out.edges[i];
        if matches!(e.action, Action::Tag(_) | Action::VarTag(_)) && !main.contains(&e.from) {
            e.action = Action::Empty;
        }
    }
    out
}

/// Removes a tag that every move from the same starting node carries at the
/// same index. Moves from one start differ elsewhere, so they stay distinct
/// and keep their order.
pub(super) fn skip_redundant_tags(g: &GameDescription) -> Result<GameDescription, TransformError> {
    let mut out = g.clone();
    while let Some(group) = redundant_group(&out)? {
        for i in group {
            out.edges[i].action = Action::Empty;
        }
    }
    Ok(out)
}

fn redundant_group(g: &GameDescription) -> Result<Option<Vec<usize>>, TransformError> {
    let pos = analyze(g, &TagPositions::new(g))?;
    let at = |i: usize| &pos[&g.edges[i].from];
    let tag_edges: Vec<usize> =
        (0..g.edges.len()).filter(|&i| matches!(g.edges[i].action, Action::Tag(_) | Action::VarTag(_))).collect();
    let move_ends: Vec<usize> = (0..g.edges.len()).filter(|&i| g.edges[i].action.is_player_assignment()).collect();

    'candidates: for &i in &tag_edges {
        let (Action::Tag(tag), Positions::Set(here)) = (&g.edges[i].action, at(i)) else {
            continue;
        };
        if here.is_empty() {
            continue;
        }
        let mut index: BTreeMap<&Name, u32> = BTreeMap::new();
        for (start, k) in here {
            if index.insert(start, *k).is_some() {
                continue 'candidates;
            }
        }
        let mut group = Vec::new();
        for &j in &tag_edges {
            let overlaps = match at(j) {
                Positions::Many => true,
                Positions::Set(s) => !s.is_disjoint(here),
            };
            if !overlaps {
                continue;
            }
            if !matches!(&g.edges[j].action, Action::Tag(t) if t == tag) || at(j) != at(i) {
                continue 'candidates;
            }
            group.push(j);
        }
        // every move from these starts must be long enough to carry the tag
        for &p in &move_ends {
            match at(p) {
                Positions::Many => continue 'candidates,
                Positions::Set(s) => {
                    for (start, c) in s {
                        if index.get(start).is_some_and(|k| c <= k) {
                            continue 'candidates;
                        }
                    }
                }
            }
        }
        return Ok(Some(group));
    }
    Ok(None)
}
