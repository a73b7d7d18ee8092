//! Graphviz rendering of the rules automaton.

use std::fmt::Write;

use crate::model::{builtin, GameDescription};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// A `digraph` with one node per automaton node and one edge per
/// transition, labeled by its action. `begin` and `end` get their own
/// shapes.
pub fn to_dot(g: &GameDescription) -> String {
    let mut out = String::from("digraph rules {\n    rankdir=LR;\n    node [shape=circle];\n");
    for n in g.nodes() {
        let style = match n.as_str() {
            builtin::BEGIN => " [shape=doublecircle, style=filled, fillcolor=palegreen]",
            builtin::END => " [shape=doublecircle, style=filled, fillcolor=lightpink]",
            _ => "",
        };
        let _ = writeln!(out, "    {}{style};", quote(&n));
    }
    for e in &g.edges {
        let _ = writeln!(out, "    {} -> {} [label={}];", quote(&e.from), quote(&e.to), quote(&e.action.to_string()));
    }
    out.push_str("}\n");
    out
}
