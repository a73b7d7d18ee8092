//! Terminal play. Human seats choose among numbered legal moves and only
//! ever see their own obfuscated view of each move.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use rg_core::engine::{Cache, EngineError, Game, GameState, Move, Options};
use rg_core::Name;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Seat {
    Human,
    Random,
}

impl FromStr for Seat {
    type Err = String;

    fn from_str(s: &str) -> Result<Seat, String> {
        match s {
            "human" => Ok(Seat::Human),
            "random" => Ok(Seat::Random),
            _ => Err(format!("unknown seat policy `{s}` (expected human or random)")),
        }
    }
}

impl fmt::Display for Seat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Seat::Human => "human",
            Seat::Random => "random",
        })
    }
}

/// Parses `player=policy`.
pub fn parse_seat(s: &str) -> Result<(String, Seat), String> {
    let (p, policy) = s.split_once('=').ok_or_else(|| format!("expected player=policy, got `{s}`"))?;
    Ok((p.trim().to_string(), policy.trim().parse()?))
}

#[derive(Debug, Error)]
pub enum PlayError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("`{0}` is not a player of this game")]
    UnknownPlayer(String),
}

/// One entry of a seat's history: who moved and what the seat saw.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Seen {
    pub mover: Name,
    pub tags: Vec<Name>,
}

#[derive(Clone, Debug, Default)]
pub struct PlayLog {
    /// False when the input ended before the game did.
    pub finished: bool,
    pub goals: BTreeMap<Name, Name>,
    /// Obfuscated history per player. Moves a player saw nothing of are
    /// left out.
    pub histories: BTreeMap<Name, Vec<Seen>>,
    /// Choices made by human seats.
    pub choices: usize,
}

/// Seat assignments with every unlisted player defaulting to `default`.
pub fn seat_map(game: &Game, given: &[(String, Seat)], default: Seat) -> Result<BTreeMap<Name, Seat>, PlayError> {
    let players = game.players();
    let mut seats: BTreeMap<Name, Seat> = players.iter().map(|p| (p.clone(), default)).collect();
    for (p, s) in given {
        let name = Name::new(p.as_str());
        if !seats.contains_key(&name) {
            return Err(PlayError::UnknownPlayer(p.clone()));
        }
        seats.insert(name, *s);
    }
    Ok(seats)
}

fn join(tags: &[Name]) -> String {
    if tags.is_empty() {
        return "(no tags)".to_string();
    }
    tags.iter().map(Name::as_str).collect::<Vec<_>>().join(" ")
}

struct Session<'a, R, W> {
    game: &'a Game,
    seats: &'a BTreeMap<Name, Seat>,
    input: R,
    out: W,
    cache: Cache,
    log: PlayLog,
    players: Vec<Name>,
}

impl<R: BufRead, W: Write> Session<'_, R, W> {
    fn any_human(&self) -> bool {
        self.seats.values().any(|s| *s == Seat::Human)
    }

    fn record(&mut self, mover: &Name, mv: &Move, views: &[Move]) -> io::Result<()> {
        if !self.any_human() && !(mv.0.is_empty() && mover.as_str() == "keeper") {
            writeln!(self.out, "{mover}: {}", join(&self.game.move_names(mv)))?;
        }
        for (p, view) in self.players.iter().zip(views) {
            if view.0.is_empty() {
                continue;
            }
            let tags = self.game.move_names(view);
            if self.seats.get(p) == Some(&Seat::Human) {
                writeln!(self.out, "[{p}] {mover}: {}", join(&tags))?;
            }
            self.log.histories.entry(p.clone()).or_default().push(Seen { mover: mover.clone(), tags });
        }
        Ok(())
    }

    fn show_view(&mut self, me: &Name, st: &GameState) -> io::Result<()> {
        let obs = self.game.observe(st);
        writeln!(self.out, "== {me} to move ==")?;
        let goals: Vec<String> = obs.goals.iter().map(|(p, g)| format!("{p}={g}")).collect();
        writeln!(self.out, "goals: {}", goals.join(" "))?;
        writeln!(self.out, "history:")?;
        let history = self.log.histories.get(me).cloned().unwrap_or_default();
        if history.is_empty() {
            writeln!(self.out, "  (empty)")?;
        }
        for (i, s) in history.iter().enumerate() {
            writeln!(self.out, "  {:>3}. {}: {}", i + 1, s.mover, join(&s.tags))?;
        }
        Ok(())
    }

    /// Index of the chosen move, or `None` at end of input.
    fn ask(&mut self, moves: &[Move]) -> io::Result<Option<usize>> {
        for (i, m) in moves.iter().enumerate() {
            writeln!(self.out, "  {:>3}) {}", i + 1, join(&self.game.move_names(m)))?;
        }
        loop {
            write!(self.out, "> ")?;
            self.out.flush()?;
            let mut line = String::new();
            if self.input.read_line(&mut line)? == 0 {
                return Ok(None);
            }
            match line.trim().parse::<usize>() {
                Ok(k) if (1..=moves.len()).contains(&k) => return Ok(Some(k - 1)),
                _ => writeln!(self.out, "enter a number from 1 to {}", moves.len())?,
            }
        }
    }

    fn run(&mut self, rng: &mut impl Rng) -> Result<(), PlayError> {
        let mut st = self.game.initial_state();
        while !self.game.is_terminal(&st) {
            let mover = self.game.symbol_name(self.game.current_player(&st)).clone();
            let moves = self.game.legal_moves(&st, &mut self.cache)?;
            if moves.is_empty() {
                return Err(if self.game.is_keeper_turn(&st) {
                    EngineError::KeeperStuck(self.game.node_name(&st).clone())
                } else {
                    EngineError::NoMoves(mover)
                }
                .into());
            }
            let choice = if self.game.is_keeper_turn(&st) {
                if moves.len() > 1 {
                    return Err(EngineError::KeeperAmbiguous(moves.len()).into());
                }
                0
            } else if self.game.is_random_turn(&st) || self.seats.get(&mover) != Some(&Seat::Human) {
                rng.random_range(0..moves.len())
            } else {
                self.show_view(&mover, &st)?;
                match self.ask(&moves)? {
                    Some(k) => {
                        self.log.choices += 1;
                        k
                    }
                    None => {
                        writeln!(self.out, "\ninput closed, game abandoned")?;
                        return Ok(());
                    }
                }
            };
            let r = self.game.apply_move(&st, &moves[choice], &mut self.cache, false)?;
            self.record(&mover, &moves[choice], &r.views)?;
            st = r.next;
        }
        let obs = self.game.observe(&st);
        let goals: Vec<String> = obs.goals.iter().map(|(p, g)| format!("{p}={g}")).collect();
        writeln!(self.out, "game over: {}", goals.join(" "))?;
        self.log.finished = true;
        self.log.goals = obs.goals;
        Ok(())
    }
}

/// Plays one game. Random choices, for the `random` player and for random
/// seats, come from `rng`.
pub fn play<R: BufRead, W: Write>(
    game: &Game,
    seats: &BTreeMap<Name, Seat>,
    options: Options,
    rng: &mut impl Rng,
    input: R,
    out: W,
) -> Result<PlayLog, PlayError> {
    let mut s = Session {
        game,
        seats,
        input,
        out,
        cache: Cache::new(options),
        log: PlayLog::default(),
        players: game.players(),
    };
    s.run(rng)?;
    Ok(s.log)
}
