use std::collections::BTreeMap;

use super::{ModelError, Name, TypeExpr, Value};

/// Value stored under `key`, falling back to the default. Symbols have no
/// entries; looking into one returns the symbol itself.
pub fn map_lookup<'a>(v: &'a Value, key: &str) -> &'a Value {
    match v {
        Value::Symbol(_) => v,
        Value::Map { default, entries } => entries.iter().find(|(k, _)| &**k == key).map(|(_, v)| v).unwrap_or(default),
    }
}

/// Canonical representative of `v` under the resolved type `t`.
///
/// Maps are rebuilt over the source domain: the default becomes the most
/// frequent value (ties go to the smallest value), entries equal to it are
/// dropped, keys outside the domain disappear and the rest is sorted.
pub fn canonicalize_value(t: &TypeExpr, v: &Value) -> Result<Value, ModelError> {
    match (t, v) {
        (TypeExpr::Set(_), Value::Symbol(_)) => Ok(v.clone()),
        (TypeExpr::Arrow(source, dest), Value::Map { .. }) => {
            let keys = source.as_set().ok_or(ModelError::ArrowSourceNotSet)?;
            let mut values = Vec::with_capacity(keys.len());
            for k in keys {
                values.push((k, canonicalize_value(dest, map_lookup(v, k))?));
            }
            let default = most_frequent(values.iter().map(|(_, v)| v));
            let mut entries: Vec<(Name, Value)> =
                values.into_iter().filter(|(_, v)| *v != default).map(|(k, v)| (k.clone(), v)).collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            entries.dedup_by(|a, b| a.0 == b.0);
            Ok(Value::map(default, entries))
        }
        (TypeExpr::Alias(_), _) => Err(ModelError::ShapeMismatch),
        _ => Err(ModelError::ShapeMismatch),
    }
}

fn most_frequent<'a>(values: impl Iterator<Item = &'a Value>) -> Value {
    let mut counts: BTreeMap<&Value, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    // BTreeMap iterates in ascending order, so the first maximum is the smallest
    let mut best: Option<(&Value, usize)> = None;
    for (v, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((v, c));
        }
    }
    best.expect("set types are non-empty").0.clone()
}

/// Extensional equality over the source domains of `t`.
pub fn value_equal(t: &TypeExpr, a: &Value, b: &Value) -> bool {
    match t {
        TypeExpr::Arrow(source, dest) => match (a, b) {
            (Value::Map { .. }, Value::Map { .. }) => source
                .as_set()
                .unwrap_or_default()
                .iter()
                .all(|k| value_equal(dest, map_lookup(a, k), map_lookup(b, k))),
            _ => false,
        },
        _ => match (a, b) {
            (Value::Symbol(x), Value::Symbol(y)) => x == y,
            _ => false,
        },
    }
}

/// Whether every symbol reachable through the domain of `t` belongs to the
/// set type it is stored under.
pub fn value_fits(t: &TypeExpr, v: &Value) -> bool {
    first_misfit(t, v).is_none() && shape_matches(t, v)
}

fn shape_matches(t: &TypeExpr, v: &Value) -> bool {
    match (t, v) {
        (TypeExpr::Set(_), Value::Symbol(_)) => true,
        (TypeExpr::Arrow(source, dest), Value::Map { .. }) => {
            source.as_set().unwrap_or_default().iter().all(|k| shape_matches(dest, map_lookup(v, k)))
        }
        _ => false,
    }
}

/// First symbol of `v` lying outside the set type it is stored under.
pub(crate) fn first_misfit<'a>(t: &TypeExpr, v: &'a Value) -> Option<&'a Name> {
    match (t, v) {
        (TypeExpr::Set(domain), Value::Symbol(s)) => (!domain.contains(s)).then_some(s),
        (TypeExpr::Arrow(source, dest), Value::Map { .. }) => {
            source.as_set().unwrap_or_default().iter().find_map(|k| first_misfit(dest, map_lookup(v, k)))
        }
        _ => None,
    }
}
