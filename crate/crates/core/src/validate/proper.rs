//! Bounded model checking of the five proper-description conditions over
//! the reachable game-state graph.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::engine::{Cache, EngineError, Game, GameState, Move, Options, DEFAULT_BUDGET};
use crate::model::{EvalMode, Name};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    ActionValidity = 1,
    MoveUnambiguity = 2,
    Continuable = 3,
    DeterministicKeeper = 4,
    Finiteness = 5,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::ActionValidity,
        Condition::MoveUnambiguity,
        Condition::Continuable,
        Condition::DeterministicKeeper,
        Condition::Finiteness,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<Condition> {
        Condition::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn title(self) -> &'static str {
        match self {
            Condition::ActionValidity => "action validity",
            Condition::MoveUnambiguity => "move unambiguity",
            Condition::Continuable => "continuable",
            Condition::DeterministicKeeper => "deterministic keeper",
            Condition::Finiteness => "game finiteness",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) {}", self.number(), self.title())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Unknown,
}

/// Outcome for one condition. A failure carries a play from the initial
/// state, keeper moves included, that exhibits the violation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionResult {
    #[serde(serialize_with = "as_digit")]
    pub condition: Condition,
    pub verdict: Verdict,
    pub witness: Vec<Vec<Name>>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

fn as_digit<S: serde::Serializer>(c: &Condition, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&c.number().to_string())
}

impl ConditionResult {
    fn pass(condition: Condition) -> ConditionResult {
        ConditionResult { condition, verdict: Verdict::Pass, witness: Vec::new(), detail: String::new() }
    }

    pub fn is_pass(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

impl fmt::Display for ConditionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match self.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Unknown => "unknown",
        };
        write!(f, "{verdict:<7} {}", self.condition)?;
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        if self.verdict == Verdict::Fail {
            let moves: Vec<String> = self.witness.iter().map(|m| format!("[{}]", join(m))).collect();
            write!(
                f,
                "\n        witness: {}",
                if moves.is_empty() { "(initial state)".into() } else { moves.join(" ") }
            )?;
        }
        Ok(())
    }
}

fn join(m: &[Name]) -> String {
    m.iter().map(Name::as_str).collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProperBudget {
    /// Distinct game states explored before giving up.
    pub max_states: usize,
    /// Transitions per move-generation query.
    pub traversal: u64,
}

impl Default for ProperBudget {
    fn default() -> ProperBudget {
        ProperBudget { max_states: 1_000_000, traversal: DEFAULT_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProperReport {
    pub results: Vec<ConditionResult>,
    pub states: usize,
}

impl ProperReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(ConditionResult::is_pass)
    }

    pub fn get(&self, c: Condition) -> &ConditionResult {
        &self.results[usize::from(c.number()) - 1]
    }

    pub fn failed(&self) -> Vec<Condition> {
        self.results.iter().filter(|r| r.verdict == Verdict::Fail).map(|r| r.condition).collect()
    }
}

struct Explored {
    state: GameState,
    parent: Option<(usize, Move)>,
    next: Vec<usize>,
}

struct Checker<'g> {
    game: &'g Game,
    states: Vec<Explored>,
    index: HashMap<GameState, usize>,
    results: Vec<Option<ConditionResult>>,
    incomplete: Option<String>,
}

impl Checker<'_> {
    fn witness(&self, mut i: usize, last: Option<&Move>) -> Vec<Vec<Name>> {
        let mut moves = Vec::new();
        moves.extend(last.map(|m| self.game.move_names(m)));
        while let Some((p, m)) = &self.states[i].parent {
            moves.push(self.game.move_names(m));
            i = *p;
        }
        moves.reverse();
        moves
    }

    fn fail(&mut self, c: Condition, at: usize, last: Option<&Move>, detail: String) {
        let k = usize::from(c.number()) - 1;
        if self.results[k].is_none() {
            let witness = self.witness(at, last);
            self.results[k] = Some(ConditionResult { condition: c, verdict: Verdict::Fail, witness, detail });
        }
    }

    fn intern(&mut self, state: GameState, parent: Option<(usize, Move)>) -> (usize, bool) {
        if let Some(&i) = self.index.get(&state) {
            return (i, false);
        }
        let i = self.states.len();
        self.index.insert(state.clone(), i);
        self.states.push(Explored { state, parent, next: Vec::new() });
        (i, true)
    }

    fn explore(&mut self, budget: &ProperBudget) {
        let mut c = Cache::new(Options { budget: budget.traversal, mode: EvalMode::Checked, exact: true });
        let mut queue = VecDeque::from([self.intern(self.game.initial_state(), None).0]);
        while let Some(i) = queue.pop_front() {
            let st = self.states[i].state.clone();
            if self.game.is_terminal(&st) {
                continue;
            }
            let outcomes = match self.game.outcomes(&st, &mut c) {
                Ok(o) => o,
                Err(EngineError::ImproperDescription(what)) => {
                    self.fail(Condition::ActionValidity, i, None, what);
                    continue;
                }
                Err(e) => {
                    self.incomplete.get_or_insert(e.to_string());
                    continue;
                }
            };
            let player = self.game.symbol_name(self.game.current_player(&st)).clone();
            if outcomes.is_empty() {
                self.fail(Condition::Continuable, i, None, format!("`{player}` has no legal move"));
            }
            if self.game.is_keeper_turn(&st) && outcomes.len() > 1 {
                self.fail(
                    Condition::DeterministicKeeper,
                    i,
                    None,
                    format!("keeper has {} legal moves", outcomes.len()),
                );
            }
            for o in outcomes {
                if o.conflict.is_some() {
                    let detail = format!("move [{}] reaches different states", self.game.format_move(&o.mv));
                    self.fail(Condition::MoveUnambiguity, i, Some(&o.mv), detail);
                }
                if self.states.len() >= budget.max_states && !self.index.contains_key(&o.next) {
                    self.incomplete.get_or_insert(format!("state budget of {} exhausted", budget.max_states));
                    continue;
                }
                let (j, fresh) = self.intern(o.next, Some((i, o.mv)));
                self.states[i].next.push(j);
                if fresh {
                    queue.push_back(j);
                }
            }
        }
    }

    /// First cycle in the explored state graph, as (state on the cycle, path
    /// around it back to that state).
    fn find_cycle(&self) -> Option<(usize, Vec<usize>)> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        let mut mark = vec![Mark::New; self.states.len()];
        let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
        mark[0] = Mark::Open;
        while let Some(&mut (i, ref mut k)) = stack.last_mut() {
            if let Some(&j) = self.states[i].next.get(*k) {
                *k += 1;
                match mark[j] {
                    Mark::New => {
                        mark[j] = Mark::Open;
                        stack.push((j, 0));
                    }
                    Mark::Open => {
                        let from = stack.iter().position(|&(s, _)| s == j).expect("open states are on the stack");
                        let path = stack[from..].iter().map(|&(s, _)| s).chain([j]).collect();
                        return Some((j, path));
                    }
                    Mark::Done => {}
                }
            } else {
                mark[i] = Mark::Done;
                stack.pop();
            }
        }
        None
    }

    /// The move from state `a` to state `b`.
    fn move_between(&self, a: usize, b: usize) -> Move {
        let game = self.game;
        let mut c = Cache::new(Options { exact: true, ..Options::default() });
        game.successors(&self.states[a].state, &mut c)
            .ok()
            .and_then(|succ| succ.into_iter().find(|(_, s)| *s == self.states[b].state))
            .map(|(m, _)| m)
            .unwrap_or_default()
    }
}

/// Sweeps every game state reachable from the initial one and checks the
/// five conditions. Keeper moves are explored like any other move, so that
/// condition (4) can be observed. Exhausting the budget turns the conditions
/// without a violation found so far into `Unknown`.
pub fn check_proper(game: &Game, budget: &ProperBudget) -> ProperReport {
    let mut ck = Checker { game, states: Vec::new(), index: HashMap::new(), results: vec![None; 5], incomplete: None };
    ck.explore(budget);
    if let Some((entry, path)) = ck.find_cycle() {
        let mut witness = ck.witness(entry, None);
        for w in path.windows(2) {
            witness.push(game.move_names(&ck.move_between(w[0], w[1])));
        }
        let slot = &mut ck.results[usize::from(Condition::Finiteness.number()) - 1];
        if slot.is_none() {
            *slot = Some(ConditionResult {
                condition: Condition::Finiteness,
                verdict: Verdict::Fail,
                witness,
                detail: format!("a game state repeats after {} move(s)", path.len() - 1),
            });
        }
    }
    let results = Condition::ALL
        .iter()
        .zip(ck.results)
        .map(|(&c, r)| match (r, &ck.incomplete) {
            (Some(r), _) => r,
            (None, None) => ConditionResult::pass(c),
            (None, Some(why)) => {
                ConditionResult { condition: c, verdict: Verdict::Unknown, witness: Vec::new(), detail: why.clone() }
            }
        })
        .collect();
    ProperReport { results, states: ck.states.len() }
}

/// Applies the witness moves from the initial state and returns every
/// state passed through, the initial one first.
pub fn replay_witness(game: &Game, witness: &[Vec<Name>]) -> Result<Vec<GameState>, EngineError> {
    let mut c = Cache::new(Options::default());
    let mut states = vec![game.initial_state()];
    for names in witness {
        let m = game.parse_move(names).ok_or_else(|| EngineError::IllegalMove(join(names)))?;
        let cur = states.last().expect("never empty");
        let next = game.apply_move(cur, &m, &mut c, false)?.next;
        states.push(next);
    }
    Ok(states)
}

/// Whether replaying `r`'s witness shows its violation again.
pub fn reproduces(game: &Game, r: &ConditionResult) -> bool {
    if r.verdict != Verdict::Fail {
        return false;
    }
    let checked = Options { mode: EvalMode::Checked, exact: true, ..Options::default() };
    match r.condition {
        Condition::MoveUnambiguity => {
            let Some((last, prefix)) = r.witness.split_last() else {
                return false;
            };
            let (Ok(states), Some(m)) = (replay_witness(game, prefix), game.parse_move(last)) else {
                return false;
            };
            let at = states.last().expect("never empty");
            matches!(game.apply_move(at, &m, &mut Cache::new(checked), true), Err(EngineError::AmbiguousMove(_)))
        }
        Condition::Finiteness => match replay_witness(game, &r.witness) {
            Ok(states) => {
                let last = states.last().expect("never empty");
                states[..states.len() - 1].contains(last)
            }
            Err(_) => false,
        },
        cond => {
            let Ok(states) = replay_witness(game, &r.witness) else {
                return false;
            };
            let at = states.last().expect("never empty");
            let moves = game.legal_moves(at, &mut Cache::new(checked));
            match cond {
                Condition::ActionValidity => matches!(moves, Err(EngineError::ImproperDescription(_))),
                Condition::Continuable => !game.is_terminal(at) && moves.is_ok_and(|m| m.is_empty()),
                _ => game.is_keeper_turn(at) && moves.is_ok_and(|m| m.len() != 1),
            }
        }
    }
}
