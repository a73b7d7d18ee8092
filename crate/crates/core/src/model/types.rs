use std::collections::{BTreeMap, BTreeSet};

use super::{ModelError, Name, TypeDecl, TypeExpr};

/// Anything that can look up an alias definition by name.
pub trait TypeAliases {
    fn alias(&self, name: &str) -> Option<&TypeExpr>;
}

impl TypeAliases for BTreeMap<Name, TypeDecl> {
    fn alias(&self, name: &str) -> Option<&TypeExpr> {
        self.get(name).map(|d| &d.ty)
    }
}

impl TypeAliases for BTreeMap<Name, TypeExpr> {
    fn alias(&self, name: &str) -> Option<&TypeExpr> {
        self.get(name)
    }
}

/// Expands every alias. The result contains no [`TypeExpr::Alias`].
pub fn resolve_type(t: &TypeExpr, aliases: &impl TypeAliases) -> Result<TypeExpr, ModelError> {
    let mut visiting = BTreeSet::new();
    resolve_inner(t, aliases, &mut visiting)
}

fn resolve_inner(
    t: &TypeExpr,
    aliases: &impl TypeAliases,
    visiting: &mut BTreeSet<Name>,
) -> Result<TypeExpr, ModelError> {
    match t {
        TypeExpr::Set(_) => Ok(t.clone()),
        TypeExpr::Arrow(source, dest) => {
            let source = resolve_inner(source, aliases, visiting)?;
            if !matches!(source, TypeExpr::Set(_)) {
                return Err(ModelError::ArrowSourceNotSet);
            }
            let dest = resolve_inner(dest, aliases, visiting)?;
            Ok(TypeExpr::arrow(source, dest))
        }
        TypeExpr::Alias(name) => {
            let target = aliases.alias(name).ok_or_else(|| ModelError::UnknownAlias(name.clone()))?;
            if !visiting.insert(name.clone()) {
                return Err(ModelError::RecursiveAlias(name.clone()));
            }
            let resolved = resolve_inner(target, aliases, visiting);
            visiting.remove(name);
            resolved
        }
    }
}

/// Structural equality of resolved types; set types compare as sets.
pub fn type_equal(t: &TypeExpr, u: &TypeExpr) -> bool {
    match (t, u) {
        (TypeExpr::Set(a), TypeExpr::Set(b)) => {
            let a: BTreeSet<&Name> = a.iter().collect();
            let b: BTreeSet<&Name> = b.iter().collect();
            a == b
        }
        (TypeExpr::Arrow(s1, d1), TypeExpr::Arrow(s2, d2)) => type_equal(s1, s2) && type_equal(d1, d2),
        _ => false,
    }
}

/// Symmetric assignability of resolved types: set domains overlap, arrows
/// are assignable componentwise.
pub fn assignable(t: &TypeExpr, u: &TypeExpr) -> bool {
    match (t, u) {
        (TypeExpr::Set(a), TypeExpr::Set(b)) => a.iter().any(|s| b.contains(s)),
        (TypeExpr::Arrow(s1, d1), TypeExpr::Arrow(s2, d2)) => assignable(s1, s2) && assignable(d1, d2),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tic_tac_toe_aliases() -> BTreeMap<Name, TypeExpr> {
        let mut a = BTreeMap::new();
        a.insert(Name::new("Coord"), TypeExpr::set(["0", "1", "2"]));
        a.insert(Name::new("Piece"), TypeExpr::set(["e", "X", "O"]));
        a.insert(Name::new("ColumnOfBoard"), TypeExpr::arrow(TypeExpr::alias("Coord"), TypeExpr::alias("Piece")));
        a.insert(Name::new("Board"), TypeExpr::arrow(TypeExpr::alias("Coord"), TypeExpr::alias("ColumnOfBoard")));
        a
    }

    #[test]
    fn resolves_nested_aliases() {
        let aliases = tic_tac_toe_aliases();
        let t = resolve_type(&TypeExpr::alias("ColumnOfBoard"), &aliases).unwrap();
        assert_eq!(t, TypeExpr::arrow(TypeExpr::set(["0", "1", "2"]), TypeExpr::set(["e", "X", "O"])));
        let set = TypeExpr::set(["a", "b"]);
        assert_eq!(resolve_type(&set, &aliases).unwrap(), set);
    }

    #[test]
    fn recursive_and_unknown_aliases() {
        let mut aliases = BTreeMap::new();
        aliases.insert(Name::new("X"), TypeExpr::alias("X"));
        assert_eq!(resolve_type(&TypeExpr::alias("X"), &aliases), Err(ModelError::RecursiveAlias(Name::new("X"))));
        assert_eq!(resolve_type(&TypeExpr::alias("Y"), &aliases), Err(ModelError::UnknownAlias(Name::new("Y"))));
    }

    #[test]
    fn arrow_source_must_be_set() {
        let mut aliases = BTreeMap::new();
        aliases.insert(Name::new("M"), TypeExpr::arrow(TypeExpr::set(["a"]), TypeExpr::set(["b"])));
        let bad = TypeExpr::arrow(TypeExpr::alias("M"), TypeExpr::set(["c"]));
        assert_eq!(resolve_type(&bad, &aliases), Err(ModelError::ArrowSourceNotSet));
    }

    #[test]
    fn equality_and_assignability() {
        let ab = TypeExpr::set(["a", "b"]);
        let ba = TypeExpr::set(["b", "a"]);
        assert!(type_equal(&ab, &ba));
        assert!(!type_equal(&TypeExpr::set(["a"]), &ab));
        let m = TypeExpr::arrow(TypeExpr::set(["a"]), TypeExpr::set(["b"]));
        assert!(type_equal(&m, &m.clone()));

        assert!(assignable(&TypeExpr::set(["0", "1", "2"]), &TypeExpr::set(["2", "3"])));
        assert!(!assignable(&TypeExpr::set(["a"]), &TypeExpr::set(["b"])));
        let left = TypeExpr::arrow(TypeExpr::set(["a", "b"]), TypeExpr::set(["x"]));
        let right = TypeExpr::arrow(TypeExpr::set(["b", "c"]), TypeExpr::set(["x", "y"]));
        assert!(assignable(&left, &right));
        assert!(!assignable(&left, &TypeExpr::set(["a"])));
    }
}
