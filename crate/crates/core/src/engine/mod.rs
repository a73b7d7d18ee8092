//! Interpreted forward model: move generation, move application, views and
//! playouts over a compiled description.

mod compile;
mod json;
mod value;
mod walk;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};

use rand::Rng;
use thiserror::Error;

use crate::model::{EvalMode, GameDescription, Name, Value};

pub use compile::{CompileError, Game};
pub use value::Sym;
pub use walk::Cache;

use value::Val;
use walk::{slot_hash, Target, WalkEnd};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Options {
    /// Transitions allowed per top-level query.
    pub budget: u64,
    pub mode: EvalMode,
    /// Compare full states instead of 128-bit fingerprints.
    pub exact: bool,
}

impl Default for Options {
    fn default() -> Options {
        Options { budget: DEFAULT_BUDGET, mode: EvalMode::Fast, exact: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("traversal budget of {0} transitions exceeded")]
    BudgetExceeded(u64),
    #[error("improper description: {0}")]
    ImproperDescription(String),
    #[error("illegal move [{0}]")]
    IllegalMove(String),
    #[error("move [{0}] leads to different states")]
    AmbiguousMove(String),
    #[error("keeper has no legal move at node `{0}`")]
    KeeperStuck(Name),
    #[error("keeper has {0} legal moves")]
    KeeperAmbiguous(usize),
    #[error("it is not the keeper's turn")]
    NotKeeperTurn,
    #[error("player `{0}` has no legal move in a non-terminal state")]
    NoMoves(Name),
    #[error("a game state repeats along a play")]
    Cycle,
    #[error("malformed state: {0}")]
    BadState(String),
}

/// A game state: a total variable assignment and the current node.
#[derive(Clone, Debug)]
pub struct GameState {
    pub(crate) vars: Vec<Val>,
    pub(crate) node: u32,
    /// Sum of per-variable slot hashes, maintained incrementally.
    pub(crate) hash: u128,
}

impl PartialEq for GameState {
    fn eq(&self, other: &GameState) -> bool {
        self.node == other.node && self.hash == other.hash && self.vars == other.vars
    }
}

impl Eq for GameState {}

impl Hash for GameState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u32(self.node);
        state.write_u128(self.hash);
    }
}

impl GameState {
    pub fn fingerprint(&self) -> u128 {
        value::mix(self.hash ^ u128::from(self.node))
    }
}

/// A move: the tag labeling of a move walk.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move(pub Vec<Sym>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoveResult {
    pub next: GameState,
    /// Obfuscated move per player, in `Player` declaration order.
    pub views: Vec<Move>,
}

/// A move together with the state it leads to. `conflict` holds a second,
/// different result when the labeling is ambiguous.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub mv: Move,
    pub next: GameState,
    pub conflict: Option<GameState>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    pub terminal: bool,
    pub player: Name,
    pub goals: BTreeMap<Name, Name>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Playout {
    /// Final score per player, in `Player` declaration order.
    pub goals: Vec<Sym>,
    /// Moves made by players other than the keeper; a play made only of
    /// keeper moves has length 1.
    pub length: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Perft {
    /// `counts[d - 1]` is the number of move sequences of length `d`.
    pub counts: Vec<u64>,
    /// Goals of terminal states reached within the depth, with multiplicity.
    pub terminal_goals: BTreeMap<Vec<Name>, u64>,
}

impl Game {
    pub fn description(&self) -> &GameDescription {
        &self.desc
    }

    pub fn symbol_name(&self, s: Sym) -> &Name {
        &self.symbols[s as usize]
    }

    pub fn symbol_id(&self, name: &str) -> Option<Sym> {
        self.symbol_ids.get(name).copied()
    }

    pub fn node_name(&self, st: &GameState) -> &Name {
        &self.nodes[st.node as usize]
    }

    pub fn players(&self) -> Vec<Name> {
        self.players.iter().map(|&p| self.symbol_name(p).clone()).collect()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn initial_state(&self) -> GameState {
        let vars: Vec<Val> = self.vars.iter().map(|v| v.init.clone()).collect();
        let hash = self.initial_hash(&vars);
        GameState { vars, node: self.begin, hash }
    }

    pub(crate) fn initial_hash(&self, vars: &[Val]) -> u128 {
        vars.iter().enumerate().fold(0u128, |h, (i, v)| h.wrapping_add(slot_hash(i, v.hash())))
    }

    pub fn is_terminal(&self, st: &GameState) -> bool {
        st.node == self.end
    }

    pub fn current_player(&self, st: &GameState) -> Sym {
        st.vars[self.player_var].as_sym().expect("player holds a symbol")
    }

    pub fn is_keeper_turn(&self, st: &GameState) -> bool {
        !self.is_terminal(st) && self.current_player(st) == self.keeper
    }

    pub fn is_random_turn(&self, st: &GameState) -> bool {
        !self.is_terminal(st) && self.current_player(st) == self.random
    }

    /// Index of the player on move in `Player` order, if it is a real player.
    pub fn player_index(&self, st: &GameState) -> Option<usize> {
        let p = self.current_player(st);
        self.players.iter().position(|&q| q == p)
    }

    pub fn goals(&self, st: &GameState) -> Vec<Sym> {
        let goals = &st.vars[self.goals_var];
        self.players.iter().map(|&p| goals.get(p).as_sym().expect("scores are symbols")).collect()
    }

    pub fn observe(&self, st: &GameState) -> Observation {
        Observation {
            terminal: self.is_terminal(st),
            player: self.symbol_name(self.current_player(st)).clone(),
            goals: self
                .players
                .iter()
                .zip(self.goals(st))
                .map(|(&p, g)| (self.symbol_name(p).clone(), self.symbol_name(g).clone()))
                .collect(),
        }
    }

    /// Current value of a variable.
    pub fn variable(&self, st: &GameState, name: &str) -> Option<Value> {
        let i = self.vars.iter().position(|v| &*v.name == name)?;
        Some(self.to_value(&st.vars[i]))
    }

    pub(crate) fn to_value(&self, v: &Val) -> Value {
        match v {
            Val::Sym(s) => Value::Symbol(self.symbol_name(*s).clone()),
            Val::Map(m) => Value::map(
                self.to_value(&m.default),
                m.entries.iter().map(|(k, x)| (self.symbol_name(*k).clone(), self.to_value(x))),
            ),
        }
    }

    pub(crate) fn render_val(&self, v: &Val) -> String {
        self.to_value(v).to_string()
    }

    pub fn move_names(&self, m: &Move) -> Vec<Name> {
        m.0.iter().map(|&t| self.symbol_name(t).clone()).collect()
    }

    pub fn format_move(&self, m: &Move) -> String {
        self.move_names(m).iter().map(|n| n.as_str()).collect::<Vec<_>>().join(" ")
    }

    /// The move with the given tag names; `None` if a name is unknown.
    pub fn parse_move<S: AsRef<str>>(&self, tags: &[S]) -> Option<Move> {
        tags.iter().map(|t| self.symbol_id(t.as_ref())).collect::<Option<Vec<_>>>().map(Move)
    }

    fn collect<T>(
        &self,
        st: &GameState,
        c: &mut Cache,
        target: Target,
        views: bool,
        mut f: impl FnMut(&WalkEnd) -> (bool, Option<T>),
    ) -> Result<Vec<T>, EngineError> {
        let mut work = st.clone();
        let mut out = Vec::new();
        self.walk(c, &mut work, target, views, &mut |w| {
            let (more, item) = f(w);
            out.extend(item);
            more
        })?;
        Ok(out)
    }

    /// Distinct labelings of move walks from `st`, sorted.
    pub fn legal_moves(&self, st: &GameState, c: &mut Cache) -> Result<Vec<Move>, EngineError> {
        c.start_query();
        let mut moves = self.collect(st, c, Target::All, false, |w| (true, Some(Move(w.tags.to_vec()))))?;
        moves.sort_unstable();
        moves.dedup();
        Ok(moves)
    }

    /// Every legal move with the state its first walk reaches, sorted by move.
    pub fn successors(&self, st: &GameState, c: &mut Cache) -> Result<Vec<(Move, GameState)>, EngineError> {
        c.start_query();
        self.successors_in_query(st, c)
    }

    fn successors_in_query(&self, st: &GameState, c: &mut Cache) -> Result<Vec<(Move, GameState)>, EngineError> {
        let mut found: BTreeMap<Move, GameState> = BTreeMap::new();
        let mut work = st.clone();
        self.walk(c, &mut work, Target::All, false, &mut |w| {
            if !found.contains_key(w.tags) {
                found.insert(Move(w.tags.to_vec()), w.state());
            }
            true
        })?;
        Ok(found.into_iter().collect())
    }

    /// Like `successors`, but compares every walk of each labeling and
    /// reports the first disagreement.
    pub fn outcomes(&self, st: &GameState, c: &mut Cache) -> Result<Vec<Outcome>, EngineError> {
        c.start_query();
        let mut found: BTreeMap<Move, Outcome> = BTreeMap::new();
        let mut work = st.clone();
        self.walk(c, &mut work, Target::All, false, &mut |w| {
            match found.get_mut(w.tags) {
                None => {
                    let mv = Move(w.tags.to_vec());
                    found.insert(mv.clone(), Outcome { mv, next: w.state(), conflict: None });
                }
                Some(o) if o.conflict.is_none() && (o.next.node != w.node || o.next.vars != w.vars) => {
                    o.conflict = Some(w.state());
                }
                Some(_) => {}
            }
            true
        })?;
        Ok(found.into_values().collect())
    }

    /// Applies `m`. Strict mode checks that every walk labeled `m` reaches
    /// the same state.
    pub fn apply_move(&self, st: &GameState, m: &Move, c: &mut Cache, strict: bool) -> Result<MoveResult, EngineError> {
        c.start_query();
        let mut first: Option<(GameState, Vec<u64>)> = None;
        let mut ambiguous = false;
        let mut work = st.clone();
        self.walk(c, &mut work, Target::Labeled(&m.0), true, &mut |w| match &first {
            None => {
                first = Some((w.state(), w.masks.to_vec()));
                strict
            }
            Some((s, _)) => {
                if s.node != w.node || s.vars != w.vars {
                    ambiguous = true;
                    return false;
                }
                true
            }
        })?;
        if ambiguous {
            return Err(EngineError::AmbiguousMove(self.format_move(m)));
        }
        let Some((next, masks)) = first else {
            return Err(EngineError::IllegalMove(self.format_move(m)));
        };
        let views = (0..self.players.len())
            .map(|i| Move(m.0.iter().zip(&masks).filter(|(_, mask)| *mask & (1 << i) != 0).map(|(t, _)| *t).collect()))
            .collect();
        Ok(MoveResult { next, views })
    }

    /// Applies keeper moves until another player is on move or the game
    /// ends. Strict mode requires exactly one keeper labeling each time.
    pub fn advance_keeper(&self, st: &GameState, c: &mut Cache, strict: bool) -> Result<GameState, EngineError> {
        if !self.is_keeper_turn(st) {
            return if self.is_terminal(st) { Ok(st.clone()) } else { Err(EngineError::NotKeeperTurn) };
        }
        c.start_query();
        let mut cur = st.clone();
        while self.is_keeper_turn(&cur) {
            let next = if strict {
                let mut succ = self.successors_in_query(&cur, c)?;
                if succ.len() > 1 {
                    return Err(EngineError::KeeperAmbiguous(succ.len()));
                }
                succ.pop().map(|(_, s)| s)
            } else {
                let mut found = self.collect(&cur, c, Target::All, false, |w| (false, Some(w.state())))?;
                found.pop()
            };
            match next {
                Some(s) => cur = s,
                None => return Err(EngineError::KeeperStuck(self.node_name(&cur).clone())),
            }
        }
        Ok(cur)
    }

    /// `advance_keeper` when the keeper is on move, otherwise a copy.
    pub fn settle(&self, st: &GameState, c: &mut Cache) -> Result<GameState, EngineError> {
        if self.is_keeper_turn(st) {
            self.advance_keeper(st, c, false)
        } else {
            Ok(st.clone())
        }
    }

    /// Plays uniformly random moves (over distinct labelings) to the end.
    pub fn random_playout<R: Rng + ?Sized>(
        &self,
        st: &GameState,
        rng: &mut R,
        c: &mut Cache,
    ) -> Result<Playout, EngineError> {
        let mut cur = self.settle(st, c)?;
        let mut length = 0u32;
        while !self.is_terminal(&cur) {
            let mut succ = self.successors(&cur, c)?;
            if succ.is_empty() {
                return Err(EngineError::NoMoves(self.symbol_name(self.current_player(&cur)).clone()));
            }
            let i = rng.random_range(0..succ.len());
            cur = self.settle(&succ.swap_remove(i).1, c)?;
            length += 1;
            if u64::from(length) > c.opts.budget {
                return Err(EngineError::BudgetExceeded(c.opts.budget));
            }
        }
        if length == 0 && !self.is_terminal(st) {
            length = 1;
        }
        Ok(Playout { goals: self.goals(&cur), length })
    }

    /// Move-sequence counts per depth; keeper moves are applied
    /// automatically and do not count.
    pub fn perft(&self, st: &GameState, depth: usize, c: &mut Cache) -> Result<Perft, EngineError> {
        let mut out = Perft { counts: vec![0; depth], ..Perft::default() };
        let start = self.settle(st, c)?;
        self.perft_rec(&start, 0, depth, c, &mut out)?;
        Ok(out)
    }

    fn perft_rec(
        &self,
        st: &GameState,
        d: usize,
        depth: usize,
        c: &mut Cache,
        out: &mut Perft,
    ) -> Result<(), EngineError> {
        if self.is_terminal(st) {
            let goals = self.goals(st).into_iter().map(|g| self.symbol_name(g).clone()).collect();
            *out.terminal_goals.entry(goals).or_default() += 1;
            return Ok(());
        }
        if d == depth {
            return Ok(());
        }
        for (_, next) in self.successors(st, c)? {
            out.counts[d] += 1;
            let next = self.settle(&next, c)?;
            self.perft_rec(&next, d + 1, depth, c, out)?;
        }
        Ok(())
    }

    /// Number of distinct complete plays from `st`.
    pub fn count_complete_plays(&self, st: &GameState, c: &mut Cache) -> Result<u64, EngineError> {
        let mut memo: HashMap<GameState, Option<u64>> = HashMap::new();
        let start = self.settle(st, c)?;
        self.count_rec(&start, c, &mut memo)
    }

    fn count_rec(
        &self,
        st: &GameState,
        c: &mut Cache,
        memo: &mut HashMap<GameState, Option<u64>>,
    ) -> Result<u64, EngineError> {
        if self.is_terminal(st) {
            return Ok(1);
        }
        match memo.get(st) {
            Some(Some(n)) => return Ok(*n),
            Some(None) => return Err(EngineError::Cycle),
            None => {}
        }
        memo.insert(st.clone(), None);
        let mut total = 0u64;
        for (_, next) in self.successors(st, c)? {
            let next = self.settle(&next, c)?;
            total += self.count_rec(&next, c, memo)?;
        }
        memo.insert(st.clone(), Some(total));
        Ok(total)
    }
}

impl std::borrow::Borrow<[Sym]> for Move {
    fn borrow(&self) -> &[Sym] {
        &self.0
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}
