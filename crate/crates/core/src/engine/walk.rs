use std::collections::{HashMap, HashSet};
use std::hash::{BuildHasherDefault, Hasher};

use super::compile::{CAction, CAssign, CExpr, Game, Sub};
use super::value::{mix, CType, Sym, Val};
use super::{EngineError, GameState, Options};
use crate::model::EvalMode;

/// Hasher for keys that are already uniformly distributed.
#[derive(Default)]
pub(crate) struct PreHashed(u64);

impl Hasher for PreHashed {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(8) ^ u64::from(b)).wrapping_mul(0x100_0000_01b3);
        }
    }

    fn write_u32(&mut self, x: u32) {
        self.0 = (self.0 ^ u64::from(x)).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    }

    fn write_u128(&mut self, x: u128) {
        self.0 ^= (x as u64) ^ ((x >> 64) as u64);
    }
}

pub(crate) type FastBuild = BuildHasherDefault<PreHashed>;

/// Visited set over fingerprints, or over full states in exact mode.
enum Seen {
    Hashed(HashSet<u128, FastBuild>),
    Exact(HashSet<(u32, Vec<Val>, Vec<Sym>)>),
}

impl Default for Seen {
    fn default() -> Seen {
        Seen::Hashed(HashSet::default())
    }
}

impl Seen {
    fn new(exact: bool) -> Seen {
        if exact {
            Seen::Exact(HashSet::new())
        } else {
            Seen::default()
        }
    }

    fn clear(&mut self) {
        match self {
            Seen::Hashed(s) => s.clear(),
            Seen::Exact(s) => s.clear(),
        }
    }

    fn insert(&mut self, node: u32, st: &GameState, tags: &[Sym], prefix: u128) -> bool {
        match self {
            Seen::Hashed(s) => {
                let node_key = mix(u128::from(node) | (3 << 120));
                s.insert(mix(st.hash ^ node_key).wrapping_add(prefix.rotate_left(64)))
            }
            Seen::Exact(s) => s.insert((node, st.vars.clone(), tags.to_vec())),
        }
    }
}

fn extend_prefix(prefix: u128, tag: Sym) -> u128 {
    mix(prefix ^ (u128::from(tag) + 1).wrapping_mul(0x2545_f491_4f6c_dd1d))
}

pub(crate) fn slot_hash(var: usize, h: u128) -> u128 {
    mix(h ^ ((var as u128 + 1) << 100) ^ 0x517c_c1b7_2722_0a95)
}

#[derive(Clone, Copy)]
struct Frame {
    node: u32,
    next: u32,
    /// Trail length and tag count before the transition entering `node`.
    trail: u32,
    tags: u32,
    prefix: u128,
}

#[derive(Clone, Copy)]
struct ReachFrame {
    node: u32,
    next: u32,
    trail: u32,
}

#[derive(Default)]
struct ReachScratch {
    frames: Vec<ReachFrame>,
    seen: Seen,
}

/// Scratch buffers, visited sets and memo tables for traversals. One per
/// worker; never shared.
pub struct Cache {
    pub(crate) opts: Options,
    used: u64,
    total: u64,
    trail: Vec<(u32, Val)>,
    frames: Vec<Frame>,
    seen: Seen,
    tags: Vec<Sym>,
    masks: Vec<u64>,
    keys: Vec<Sym>,
    reach: Vec<ReachScratch>,
    depth: usize,
    memo: HashMap<(u32, u128), bool, FastBuild>,
}

impl Default for Cache {
    fn default() -> Cache {
        Cache::new(Options::default())
    }
}

impl Cache {
    pub fn new(opts: Options) -> Cache {
        Cache {
            opts,
            used: 0,
            total: 0,
            trail: Vec::new(),
            frames: Vec::new(),
            seen: Seen::new(opts.exact),
            tags: Vec::new(),
            masks: Vec::new(),
            keys: Vec::new(),
            reach: Vec::new(),
            depth: 0,
            memo: HashMap::default(),
        }
    }

    pub fn options(&self) -> Options {
        self.opts
    }

    /// Transitions taken since the current top-level query began.
    pub fn transitions(&self) -> u64 {
        self.used
    }

    /// Transitions taken over the lifetime of this cache.
    pub fn total_transitions(&self) -> u64 {
        self.total + self.used
    }

    pub(crate) fn start_query(&mut self) {
        self.total += self.used;
        self.used = 0;
        self.memo.clear();
        self.trail.clear();
    }

    fn tick(&mut self) -> Result<(), EngineError> {
        self.used += 1;
        if self.used > self.opts.budget {
            return Err(EngineError::BudgetExceeded(self.opts.budget));
        }
        Ok(())
    }
}

/// Which labelings a walk search reports.
#[derive(Clone, Copy)]
pub(crate) enum Target<'a> {
    All,
    Labeled(&'a [Sym]),
}

/// The end of a move walk, seen from inside the traversal.
pub(crate) struct WalkEnd<'a> {
    pub tags: &'a [Sym],
    pub masks: &'a [u64],
    pub vars: &'a [Val],
    pub hash: u128,
    pub node: u32,
}

impl WalkEnd<'_> {
    pub fn state(&self) -> GameState {
        GameState { vars: self.vars.to_vec(), node: self.node, hash: self.hash }
    }
}

fn ext_equal(t: &CType, a: &Val, b: &Val) -> bool {
    match t {
        CType::Arrow { keys, dest, .. } => a == b || keys.iter().all(|&k| ext_equal(dest, a.get(k), b.get(k))),
        CType::Set { .. } => a == b,
    }
}

impl Game {
    fn improper(&self, what: String) -> EngineError {
        EngineError::ImproperDescription(what)
    }

    pub(crate) fn eval<'v>(&self, e: &'v CExpr, vars: &'v [Val], checked: bool) -> Result<&'v Val, EngineError> {
        match e {
            CExpr::Var(i) => Ok(&vars[*i as usize]),
            CExpr::Const(v) => Ok(v),
            CExpr::Access { base, key, source } => {
                let b = self.eval(base, vars, checked)?;
                let Some(k) = self.eval(key, vars, checked)?.as_sym() else {
                    return Err(self.improper("map key is not a symbol".into()));
                };
                let Val::Map(m) = b else {
                    return Err(self.improper("access on a symbol".into()));
                };
                if checked && !source.contains(k) {
                    return Err(
                        self.improper(format!("key `{}` is outside the map's source domain", self.symbols[k as usize]))
                    );
                }
                Ok(m.get(k))
            }
            CExpr::Cast { inner, target } => {
                let v = self.eval(inner, vars, checked)?;
                if checked && !target.fits(v) {
                    return Err(self.improper(format!("value `{}` is outside its cast target", self.render_val(v))));
                }
                Ok(v)
            }
        }
    }

    fn write(&self, c: &mut Cache, st: &mut GameState, var: usize, new: Val) {
        let old = std::mem::replace(&mut st.vars[var], new);
        st.hash = st.hash.wrapping_sub(slot_hash(var, old.hash())).wrapping_add(slot_hash(var, st.vars[var].hash()));
        c.trail.push((var as u32, old));
    }

    fn undo(&self, c: &mut Cache, st: &mut GameState, mark: usize) {
        while c.trail.len() > mark {
            let (var, old) = c.trail.pop().expect("non-empty trail");
            let var = var as usize;
            st.hash =
                st.hash.wrapping_sub(slot_hash(var, st.vars[var].hash())).wrapping_add(slot_hash(var, old.hash()));
            st.vars[var] = old;
        }
    }

    fn assign(&self, c: &mut Cache, a: &CAssign, st: &mut GameState, checked: bool) -> Result<(), EngineError> {
        c.keys.clear();
        for (k, level) in a.keys.iter().zip(&a.levels) {
            let Some(s) = self.eval(k, &st.vars, checked)?.as_sym() else {
                return Err(self.improper("map key is not a symbol".into()));
            };
            if checked && !level.has_key(s) {
                return Err(
                    self.improper(format!("key `{}` is outside the map's source domain", self.symbols[s as usize]))
                );
            }
            c.keys.push(s);
        }
        let v = self.eval(&a.value, &st.vars, checked)?;
        if checked && !a.target.fits(v) {
            return Err(self.improper(format!("assigned value `{}` does not fit the target type", self.render_val(v))));
        }
        let value = if a.recanon { a.target.canonicalize(v) } else { v.clone() };
        let var = a.var as usize;
        let new = set_path(&st.vars[var], &c.keys, value, &a.levels)
            .ok_or_else(|| self.improper("assignment through a symbol".into()))?;
        if new != st.vars[var] {
            self.write(c, st, var, new);
        }
        Ok(())
    }

    fn compare(
        &self,
        lhs: &CExpr,
        rhs: &CExpr,
        over: Option<&CType>,
        vars: &[Val],
        checked: bool,
    ) -> Result<bool, EngineError> {
        let a = self.eval(lhs, vars, checked)?;
        let b = self.eval(rhs, vars, checked)?;
        Ok(match over {
            None => a == b,
            Some(t) => ext_equal(t, a, b),
        })
    }

    pub(crate) fn visibility(&self, vars: &[Val]) -> u64 {
        let vis = &vars[self.visible_var];
        let mut mask = 0;
        for (i, &p) in self.players.iter().enumerate() {
            if vis.get(p).as_sym() == Some(self.one) {
                mask |= 1 << i;
            }
        }
        mask
    }

    /// Depth-first search over move walks from `st`. Calls `on_move` at the
    /// end of every walk found (modulo fingerprint pruning); it returns
    /// whether to continue. `st` is restored before returning.
    pub(crate) fn walk(
        &self,
        c: &mut Cache,
        st: &mut GameState,
        target: Target,
        views: bool,
        on_move: &mut dyn FnMut(&WalkEnd) -> bool,
    ) -> Result<(), EngineError> {
        let base = c.trail.len();
        c.frames.clear();
        c.tags.clear();
        c.masks.clear();
        c.seen.clear();
        c.seen.insert(st.node, st, &[], 0);
        c.frames.push(Frame { node: st.node, next: 0, trail: base as u32, tags: 0, prefix: 0 });
        let result = self.walk_loop(c, st, target, views, on_move);
        self.undo(c, st, base);
        c.frames.clear();
        result
    }

    fn walk_loop(
        &self,
        c: &mut Cache,
        st: &mut GameState,
        target: Target,
        views: bool,
        on_move: &mut dyn FnMut(&WalkEnd) -> bool,
    ) -> Result<(), EngineError> {
        let checked = c.opts.mode == EvalMode::Checked;
        while let Some(&top) = c.frames.last() {
            let out = &self.out[top.node as usize];
            if top.next as usize == out.len() {
                c.frames.pop();
                self.undo(c, st, top.trail as usize);
                c.tags.truncate(top.tags as usize);
                c.masks.truncate(top.tags as usize);
                continue;
            }
            c.frames.last_mut().expect("non-empty").next += 1;
            let edge = &self.edges[out[top.next as usize] as usize];
            c.tick()?;
            let mark = c.trail.len();
            let tag_mark = c.tags.len();
            let mut prefix = top.prefix;
            match &edge.action {
                CAction::Empty => {}
                CAction::Tag(t) => {
                    if let Target::Labeled(m) = target {
                        if m.get(tag_mark) != Some(t) {
                            continue;
                        }
                    }
                    c.tags.push(*t);
                    if views {
                        let mask = self.visibility(&st.vars);
                        c.masks.push(mask);
                    }
                    prefix = extend_prefix(prefix, *t);
                }
                CAction::Compare { lhs, rhs, negated, over } => {
                    if self.compare(lhs, rhs, over.as_deref(), &st.vars, checked)? == *negated {
                        continue;
                    }
                }
                CAction::Reach { sub, negated } => {
                    if self.reach(c, *sub, st)? == *negated {
                        continue;
                    }
                }
                CAction::Assign(a) => {
                    self.assign(c, a, st, checked)?;
                    if a.player {
                        let complete = match target {
                            Target::Labeled(m) => m.len() == c.tags.len(),
                            Target::All => true,
                        };
                        let more = !complete
                            || on_move(&WalkEnd {
                                tags: &c.tags,
                                masks: &c.masks,
                                vars: &st.vars,
                                hash: st.hash,
                                node: edge.to,
                            });
                        self.undo(c, st, mark);
                        if !more {
                            return Ok(());
                        }
                        continue;
                    }
                }
            }
            if c.seen.insert(edge.to, st, &c.tags, prefix) {
                c.frames.push(Frame { node: edge.to, next: 0, trail: mark as u32, tags: tag_mark as u32, prefix });
            } else {
                self.undo(c, st, mark);
                c.tags.truncate(tag_mark);
                c.masks.truncate(tag_mark);
            }
        }
        Ok(())
    }

    /// Whether a legal walk leads from the check's source to its target.
    /// Tags are ignored and `player` assignments are ordinary writes.
    pub(crate) fn reach(&self, c: &mut Cache, sub: u32, st: &mut GameState) -> Result<bool, EngineError> {
        let s = &self.subs[sub as usize];
        if s.start == s.target {
            return Ok(true);
        }
        let exact = c.opts.exact;
        if !exact {
            if let Some(&r) = c.memo.get(&(sub, st.hash)) {
                return Ok(r);
            }
        }
        let depth = c.depth;
        if c.reach.len() <= depth {
            c.reach.push(ReachScratch { frames: Vec::new(), seen: Seen::new(exact) });
        }
        let mut scratch = std::mem::take(&mut c.reach[depth]);
        c.depth += 1;
        let base = c.trail.len();
        let result = self.reach_loop(c, s, st, &mut scratch, base);
        self.undo(c, st, base);
        c.depth -= 1;
        c.reach[depth] = scratch;
        let found = result?;
        if !exact {
            c.memo.insert((sub, st.hash), found);
        }
        Ok(found)
    }

    fn reach_loop(
        &self,
        c: &mut Cache,
        s: &Sub,
        st: &mut GameState,
        scratch: &mut ReachScratch,
        base: usize,
    ) -> Result<bool, EngineError> {
        let checked = c.opts.mode == EvalMode::Checked;
        scratch.frames.clear();
        scratch.seen.clear();
        scratch.seen.insert(s.start, st, &[], 0);
        scratch.frames.push(ReachFrame { node: s.start, next: 0, trail: base as u32 });
        while let Some(&top) = scratch.frames.last() {
            let out = &s.out[top.node as usize];
            if top.next as usize == out.len() {
                scratch.frames.pop();
                self.undo(c, st, top.trail as usize);
                continue;
            }
            scratch.frames.last_mut().expect("non-empty").next += 1;
            let edge = &self.edges[out[top.next as usize] as usize];
            c.tick()?;
            let mark = c.trail.len();
            match &edge.action {
                CAction::Empty | CAction::Tag(_) => {}
                CAction::Compare { lhs, rhs, negated, over } => {
                    if self.compare(lhs, rhs, over.as_deref(), &st.vars, checked)? == *negated {
                        continue;
                    }
                }
                CAction::Reach { sub, negated } => {
                    if self.reach(c, *sub, st)? == *negated {
                        continue;
                    }
                }
                CAction::Assign(a) => self.assign(c, a, st, checked)?,
            }
            if edge.to == s.target {
                return Ok(true);
            }
            if scratch.seen.insert(edge.to, st, &[], 0) {
                scratch.frames.push(ReachFrame { node: edge.to, next: 0, trail: mark as u32 });
            } else {
                self.undo(c, st, mark);
            }
        }
        Ok(false)
    }
}

/// Writes `value` under `keys` inside `root`; `None` if a key path runs
/// through a symbol.
fn set_path(root: &Val, keys: &[Sym], value: Val, levels: &[std::sync::Arc<CType>]) -> Option<Val> {
    let Some((&k, rest)) = keys.split_first() else {
        return Some(value);
    };
    let Val::Map(m) = root else {
        return None;
    };
    let child = m.get(k);
    let new_child = set_path(child, rest, value, &levels[1..])?;
    if new_child == *child {
        return Some(root.clone());
    }
    Some(levels[0].with_entry(m, k, new_child))
}
