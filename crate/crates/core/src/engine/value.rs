use std::cmp::Ordering;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use siphasher::sip128::{Hasher128, SipHasher13};

/// Interned symbol or tag name.
pub type Sym = u32;

/// Runtime value. Maps are shared and immutable; a write builds a new path.
#[derive(Clone, Debug)]
pub enum Val {
    Sym(Sym),
    Map(Arc<MapVal>),
}

/// Sparse map in canonical form under its type: the default is the most
/// frequent value over the source domain and `entries` (sorted by key)
/// hold only the exceptions.
#[derive(Debug)]
pub struct MapVal {
    pub default: Val,
    pub entries: Vec<(Sym, Val)>,
    hash: u128,
}

const SIP_KEYS: (u64, u64) = (0x05ee_d0f9_a3e5, 0x007a_11c0_de2b);

/// Finalizer used to spread structured inputs over all 128 bits.
pub(crate) fn mix(mut x: u128) -> u128 {
    const K1: u128 = 0x9e37_79b9_7f4a_7c15_f39c_c060_5ced_c835;
    const K2: u128 = 0xc2b2_ae3d_27d4_eb4f_1656_67b1_9e37_79f9;
    x ^= x >> 67;
    x = x.wrapping_mul(K1);
    x ^= x >> 61;
    x = x.wrapping_mul(K2);
    x ^= x >> 64;
    x
}

impl MapVal {
    pub fn new(default: Val, entries: Vec<(Sym, Val)>) -> MapVal {
        let mut h = SipHasher13::new_with_keys(SIP_KEYS.0, SIP_KEYS.1);
        h.write_u128(default.hash());
        for (k, v) in &entries {
            h.write_u32(*k);
            h.write_u128(v.hash());
        }
        let hash = h.finish128().as_u128();
        MapVal { default, entries, hash }
    }

    pub fn get(&self, key: Sym) -> &Val {
        match self.entries.binary_search_by_key(&key, |(k, _)| *k) {
            Ok(i) => &self.entries[i].1,
            Err(_) => &self.default,
        }
    }
}

impl Val {
    pub fn hash(&self) -> u128 {
        match self {
            Val::Sym(s) => mix(u128::from(*s) | (1 << 96)),
            Val::Map(m) => m.hash,
        }
    }

    pub fn map(default: Val, entries: Vec<(Sym, Val)>) -> Val {
        Val::Map(Arc::new(MapVal::new(default, entries)))
    }

    pub fn as_sym(&self) -> Option<Sym> {
        match self {
            Val::Sym(s) => Some(*s),
            Val::Map(_) => None,
        }
    }

    /// Entry for `key`, or the value itself for symbols.
    pub fn get(&self, key: Sym) -> &Val {
        match self {
            Val::Sym(_) => self,
            Val::Map(m) => m.get(key),
        }
    }
}

impl PartialEq for Val {
    fn eq(&self, other: &Val) -> bool {
        match (self, other) {
            (Val::Sym(a), Val::Sym(b)) => a == b,
            (Val::Map(a), Val::Map(b)) => {
                Arc::ptr_eq(a, b) || (a.hash == b.hash && a.default == b.default && a.entries == b.entries)
            }
            _ => false,
        }
    }
}

impl Eq for Val {}

impl Hash for Val {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u128(Val::hash(self));
    }
}

impl Ord for Val {
    fn cmp(&self, other: &Val) -> Ordering {
        match (self, other) {
            (Val::Sym(a), Val::Sym(b)) => a.cmp(b),
            (Val::Sym(_), Val::Map(_)) => Ordering::Less,
            (Val::Map(_), Val::Sym(_)) => Ordering::Greater,
            (Val::Map(a), Val::Map(b)) => {
                if Arc::ptr_eq(a, b) {
                    return Ordering::Equal;
                }
                a.default.cmp(&b.default).then_with(|| a.entries.cmp(&b.entries))
            }
        }
    }
}

impl PartialOrd for Val {
    fn partial_cmp(&self, other: &Val) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Compiled, alias-free type.
#[derive(Debug)]
pub enum CType {
    Set {
        members: Vec<u64>,
    },
    Arrow {
        /// Source domain, sorted by id.
        keys: Vec<Sym>,
        source: Arc<CType>,
        dest: Arc<CType>,
    },
}

impl CType {
    pub fn set(domain: Vec<Sym>) -> CType {
        let max = domain.iter().copied().max().unwrap_or(0) as usize;
        let mut members = vec![0u64; max / 64 + 1];
        for &s in &domain {
            members[s as usize / 64] |= 1 << (s % 64);
        }
        CType::Set { members }
    }

    pub fn contains(&self, s: Sym) -> bool {
        match self {
            CType::Set { members } => members.get(s as usize / 64).is_some_and(|w| w & (1 << (s % 64)) != 0),
            CType::Arrow { .. } => false,
        }
    }

    /// Whether `s` is in the source domain of this arrow type.
    pub fn has_key(&self, s: Sym) -> bool {
        match self {
            CType::Arrow { source, .. } => source.contains(s),
            CType::Set { .. } => false,
        }
    }

    /// Whether every symbol of `v` visible through this type's domains
    /// belongs to the set it is stored under.
    pub fn fits(&self, v: &Val) -> bool {
        match (self, v) {
            (CType::Set { .. }, Val::Sym(s)) => self.contains(*s),
            (CType::Arrow { keys, dest, .. }, Val::Map(m)) => {
                let covers_all = m.entries.len() >= keys.len()
                    && keys.iter().all(|k| m.entries.binary_search_by_key(k, |(e, _)| *e).is_ok());
                (covers_all || dest.fits(&m.default))
                    && m.entries.iter().filter(|(k, _)| keys.binary_search(k).is_ok()).all(|(_, v)| dest.fits(v))
            }
            _ => false,
        }
    }

    /// Rebuilds `v` in canonical form under this type.
    pub fn canonicalize(&self, v: &Val) -> Val {
        match (self, v) {
            (CType::Arrow { keys, dest, .. }, Val::Map(_)) => {
                let values: Vec<(Sym, Val)> = keys.iter().map(|&k| (k, dest.canonicalize(v.get(k)))).collect();
                let default = most_frequent(values.iter().map(|(_, v)| v), 0, None);
                let entries = values.into_iter().filter(|(_, v)| *v != default).collect();
                Val::map(default, entries)
            }
            _ => v.clone(),
        }
    }

    /// Sets `key` of the canonical map `m` (of this arrow type) to `value`,
    /// keeping the result canonical.
    pub fn with_entry(&self, m: &MapVal, key: Sym, value: Val) -> Val {
        let CType::Arrow { keys, .. } = self else {
            return value;
        };
        let mut entries = m.entries.clone();
        match entries.binary_search_by_key(&key, |(k, _)| *k) {
            Ok(i) if value == m.default => {
                entries.remove(i);
            }
            Ok(i) => entries[i].1 = value,
            Err(_) if value == m.default => return Val::Map(Arc::new(MapVal::new(m.default.clone(), entries))),
            Err(i) => entries.insert(i, (key, value)),
        }
        let n = keys.len();
        let implicit = n.saturating_sub(entries.len());
        if implicit > entries.len() {
            return Val::map(m.default.clone(), entries);
        }
        let best = most_frequent(entries.iter().map(|(_, v)| v), implicit, Some(&m.default));
        if best == m.default {
            return Val::map(best, entries);
        }
        // the default changes: keys that used the old default become explicit
        let mut out = Vec::with_capacity(n);
        let mut it = entries.into_iter().peekable();
        for &k in keys {
            let v = match it.peek() {
                Some((ek, _)) if *ek == k => it.next().expect("peeked").1,
                _ => m.default.clone(),
            };
            if v != best {
                out.push((k, v));
            }
        }
        Val::map(best, out)
    }
}

/// Most frequent value; `extra` occurrences are credited to `implicit`.
/// Ties go to the smallest value.
fn most_frequent<'a>(values: impl Iterator<Item = &'a Val>, extra: usize, implicit: Option<&'a Val>) -> Val {
    let mut all: Vec<&Val> = values.collect();
    all.sort();
    let mut best: Option<(&Val, usize)> = None;
    let consider = |v: &'a Val, c: usize, best: &mut Option<(&'a Val, usize)>| {
        let better = match *best {
            None => true,
            Some((bv, bc)) => c > bc || (c == bc && v < bv),
        };
        if better {
            *best = Some((v, c));
        }
    };
    let implicit_count = |v: &Val| if implicit == Some(v) { extra } else { 0 };
    let mut i = 0;
    let mut implicit_seen = false;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j] == all[i] {
            j += 1;
        }
        if implicit == Some(all[i]) {
            implicit_seen = true;
        }
        consider(all[i], j - i + implicit_count(all[i]), &mut best);
        i = j;
    }
    if let (Some(v), false) = (implicit, implicit_seen) {
        if extra > 0 {
            consider(v, extra, &mut best);
        }
    }
    best.expect("a map covers a non-empty domain").0.clone()
}
