//! Typing contexts with linear/unrestricted entries.

use std::collections::BTreeSet;

use indexmap::IndexMap;

use crate::diag::Diagnostic;
use crate::name::Name;
use crate::types::{PiType, SessionType, TypeExpr};

/// Whether an entry must be consumed by a derivation.
pub trait Linearity {
    fn is_linear(&self) -> bool;
}

impl Linearity for TypeExpr {
    fn is_linear(&self) -> bool {
        match self {
            TypeExpr::Session(s) => !matches!(s.head(), SessionType::End),
            _ => false,
        }
    }
}

impl Linearity for PiType {
    fn is_linear(&self) -> bool {
        match self {
            PiType::Rec(..) => {
                let h = self.head();
                !matches!(h, PiType::Rec(..)) && h.is_linear()
            }
            _ => PiType::is_linear(self),
        }
    }
}

/// Ordered map from names to types.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeEnv<T> {
    entries: IndexMap<Name, T>,
}

impl<T> Default for TypeEnv<T> {
    fn default() -> Self {
        TypeEnv {
            entries: IndexMap::new(),
        }
    }
}

impl<T: Clone + Linearity> TypeEnv<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fails on duplicate names.
    pub fn from_entries<I: IntoIterator<Item = (Name, T)>>(it: I) -> Result<Self, Diagnostic> {
        let mut env = Self::new();
        for (x, t) in it {
            if env.entries.contains_key(&x) {
                return Err(Diagnostic::error("type-mismatch", format!("{x} declared twice")));
            }
            env.entries.insert(x, t);
        }
        Ok(env)
    }

    pub fn get(&self, x: &Name) -> Option<&T> {
        self.entries.get(x)
    }

    pub fn contains(&self, x: &Name) -> bool {
        self.entries.contains_key(x)
    }

    /// Inserts or replaces, keeping the original position on replacement.
    pub fn insert(&mut self, x: Name, t: T) -> Option<T> {
        self.entries.insert(x, t)
    }

    pub fn remove(&mut self, x: &Name) -> Option<T> {
        self.entries.shift_remove(x)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &T)> {
        self.entries.iter()
    }

    pub fn names(&self) -> BTreeSet<Name> {
        self.entries.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn linear_names(&self) -> BTreeSet<Name> {
        self.entries
            .iter()
            .filter(|(_, t)| t.is_linear())
            .map(|(x, _)| x.clone())
            .collect()
    }

    pub fn unrestricted(&self) -> Self {
        TypeEnv {
            entries: self
                .entries
                .iter()
                .filter(|(_, t)| !t.is_linear())
                .map(|(x, t)| (x.clone(), t.clone()))
                .collect(),
        }
    }
}

impl<T> FromIterator<(Name, T)> for TypeEnv<T> {
    fn from_iter<I: IntoIterator<Item = (Name, T)>>(it: I) -> Self {
        TypeEnv {
            entries: it.into_iter().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitResult<T> {
    pub left: TypeEnv<T>,
    pub right: TypeEnv<T>,
}

/// Splits `env` for a parallel composition. Linear entries demanded by the
/// left go left, all other linear entries go right; unrestricted entries
/// go to both. A linear name demanded by both sides is a `linear-overlap`.
pub fn split_env<T: Clone + Linearity>(
    env: &TypeEnv<T>,
    demand_left: &BTreeSet<Name>,
    demand_right: &BTreeSet<Name>,
) -> Result<SplitResult<T>, Diagnostic> {
    let mut left = TypeEnv::new();
    let mut right = TypeEnv::new();
    for (x, t) in env.iter() {
        if !t.is_linear() {
            left.insert(x.clone(), t.clone());
            right.insert(x.clone(), t.clone());
        } else if demand_left.contains(x) {
            if demand_right.contains(x) {
                return Err(Diagnostic::error(
                    "linear-overlap",
                    format!("linear name {x} is used on both sides of |"),
                ));
            }
            left.insert(x.clone(), t.clone());
        } else {
            right.insert(x.clone(), t.clone());
        }
    }
    Ok(SplitResult { left, right })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_session_type;

    fn env() -> TypeEnv<TypeExpr> {
        TypeEnv::from_entries([
            ("x".into(), TypeExpr::Session(parse_session_type("!Int.end").unwrap())),
            ("n".into(), TypeExpr::int()),
        ])
        .unwrap()
    }

    #[test]
    fn unrestricted_entries_are_duplicated() {
        let r = split_env(&env(), &["x".into()].into(), &BTreeSet::new()).unwrap();
        assert_eq!(r.left.names(), ["x".into(), "n".into()].into());
        assert_eq!(r.right.names(), ["n".into()].into());
    }

    #[test]
    fn overlap_is_reported() {
        let both: BTreeSet<Name> = ["x".into()].into();
        let d = split_env(&env(), &both, &both).unwrap_err();
        assert_eq!(d.code, "linear-overlap");
    }

    #[test]
    fn end_is_not_linear() {
        assert!(!TypeExpr::Session(SessionType::End).is_linear());
        assert!(!Linearity::is_linear(&PiType::empty()));
    }
}
