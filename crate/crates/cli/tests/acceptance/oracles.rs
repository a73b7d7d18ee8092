//! Reference implementations that share no code with the engine.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use rg_core::transforms::{flow_edges, Analysis};
use rg_core::{GameDescription, Name};

/// Tic-Tac-Toe on a plain array.
pub mod tictactoe {
    const LINES: [[usize; 3]; 8] =
        [[0, 1, 2], [3, 4, 5], [6, 7, 8], [0, 3, 6], [1, 4, 7], [2, 5, 8], [0, 4, 8], [2, 4, 6]];

    fn won(b: &[u8; 9], p: u8) -> bool {
        LINES.iter().any(|l| l.iter().all(|&i| b[i] == p))
    }

    fn walk(b: &mut [u8; 9], p: u8, depth: usize, counts: &mut [u64], plays: &mut u64) {
        for i in 0..9 {
            if b[i] != 0 {
                continue;
            }
            b[i] = p;
            if depth < counts.len() {
                counts[depth] += 1;
            }
            if won(b, p) || b.iter().all(|&c| c != 0) {
                *plays += 1;
            } else {
                walk(b, 3 - p, depth + 1, counts, plays);
            }
            b[i] = 0;
        }
    }

    /// Move counts for depths 1..=`depth` and the number of complete games.
    pub fn enumerate(depth: usize) -> (Vec<u64>, u64) {
        let mut counts = vec![0; depth];
        let mut plays = 0;
        walk(&mut [0; 9], 1, 0, &mut counts, &mut plays);
        (counts, plays)
    }
}

/// Turing machines over a 16-cell binary tape, the head starting at cell 0
/// in state 0; state 3 accepts.
pub mod turing {
    use super::*;

    pub const CELLS: usize = 16;
    pub const ACCEPT: u8 = 3;

    #[derive(Clone, Copy, Debug)]
    pub struct Rule {
        pub state: u8,
        pub read: u8,
        pub next: u8,
        pub write: u8,
        pub right: bool,
    }

    /// Direct simulation. Halting without a rule, leaving the tape or
    /// repeating a configuration all reject.
    pub fn accepts(rules: &[Rule]) -> bool {
        let mut tape = [0u8; CELLS];
        let (mut pos, mut state) = (0usize, 0u8);
        let mut seen = HashSet::new();
        loop {
            if state == ACCEPT {
                return true;
            }
            if !seen.insert((tape, pos, state)) {
                return false;
            }
            let Some(r) = rules.iter().find(|r| r.state == state && r.read == tape[pos]) else {
                return false;
            };
            tape[pos] = r.write;
            state = r.next;
            match (r.right, pos) {
                (true, p) if p + 1 == CELLS => return false,
                (false, 0) => return false,
                (true, p) => pos = p + 1,
                (false, p) => pos = p - 1,
            }
        }
    }

    fn cell() -> &'static str {
        "tape[position[i3]][position[i2]][position[i1]][position[i0]]"
    }

    /// The game whose only player has a legal move iff the machine
    /// accepts. Every rule returns to `run`; reaching `run` in state i3
    /// ends the move. The head position is a 4-bit counter; a step right
    /// increments it, a step left decrements it.
    pub fn game(rules: &[Rule]) -> String {
        let mut s = String::from(
            "type Player = {machine};\ntype Score = {0};\ntype Indices = {i0, i1, i2, i3};\n\
             type IndicesOrNan = {i0, i1, i2, i3, nan};\n\
             const inc: Indices -> IndicesOrNan = {i0: i1, i1: i2, i2: i3, :nan};\n\
             var tape: Bool -> Bool -> Bool -> Bool -> Bool = {:{:{:{:0}}}};\n\
             var position: Indices -> Bool = {:0};\nvar index: Indices = i0;\nvar state: Indices = i0;\n\
             begin, run: player = machine;\n",
        );
        for (k, r) in rules.iter().enumerate() {
            let n = format!("r{}", k + 1);
            let (carry, stop) = if r.right { (1, 0) } else { (0, 1) };
            let c = cell();
            let _ = writeln!(s, "run, {n}_read: state == i{};", r.state);
            let _ = writeln!(s, "{n}_read, {n}_match: {c} == {};", r.read);
            let _ = writeln!(s, "{n}_match, {n}_next: state = i{};", r.next);
            let _ = writeln!(s, "{n}_next, {n}_move: {c} = {};", r.write);
            let _ = writeln!(s, "{n}_move, {n}_loop: index = i0;");
            let _ = writeln!(s, "{n}_loop, {n}_carry: position[index] == {carry};");
            let _ = writeln!(s, "{n}_carry, {n}_edge: position[index] = {stop};");
            let _ = writeln!(s, "{n}_edge, {n}_step: index != i3;");
            let _ = writeln!(s, "{n}_step, {n}_loop: index = inc[index];");
            let _ = writeln!(s, "{n}_loop, {n}_last: position[index] == {stop};");
            let _ = writeln!(s, "{n}_last, {n}_done: position[index] = {carry};");
            let _ = writeln!(s, "{n}_done, run: $ {n};");
        }
        s.push_str("run, accepted: state == i3;\naccepted, end: player = keeper;\n");
        s
    }
}

/// Naive round-robin iteration: every node recomputed from all incoming
/// flows, in a fixed order, until a full sweep changes nothing.
pub fn round_robin<A: Analysis>(g: &GameDescription, a: &A) -> BTreeMap<Name, A::Domain> {
    let nodes = g.nodes();
    let flows = flow_edges(g);
    let begin = Name::new("begin");
    let mut know: BTreeMap<Name, A::Domain> = nodes.iter().map(|n| (n.clone(), a.bot())).collect();
    loop {
        let mut changed = false;
        for n in &nodes {
            let mut value = if *n == begin { a.extreme() } else { a.bot() };
            for f in flows.iter().filter(|f| f.to == n) {
                value = a.join(&value, &a.transfer(&know[f.from], f));
            }
            if value != know[n] {
                know.insert(n.clone(), value);
                changed = true;
            }
        }
        if !changed {
            return know;
        }
    }
}
