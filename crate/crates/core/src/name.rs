//! Channel names, labels and a fresh-name supply.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A channel or variable name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Name(String);

impl Name {
    pub fn new(s: impl Into<String>) -> Self {
        Name(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name(s.to_string())
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name(s)
    }
}

/// A branch / variant label.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(String);

impl Label {
    pub fn new(s: impl Into<String>) -> Self {
        Label(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label(s.to_string())
    }
}

/// Monotone supply of names `prefix0`, `prefix1`, ... that never returns a
/// member of the avoid set, nor a name it has already handed out.
#[derive(Clone, Debug)]
pub struct FreshSupply {
    prefix: String,
    next: usize,
    avoid: BTreeSet<Name>,
}

impl FreshSupply {
    pub fn new(prefix: impl Into<String>) -> Self {
        FreshSupply {
            prefix: prefix.into(),
            next: 0,
            avoid: BTreeSet::new(),
        }
    }

    /// Starts the counter at `start`; two supplies with different starts
    /// produce disjoint, but alpha-equivalent, encodings.
    pub fn starting_at(prefix: impl Into<String>, start: usize) -> Self {
        FreshSupply {
            next: start,
            ..FreshSupply::new(prefix)
        }
    }

    pub fn avoid<I: IntoIterator<Item = Name>>(&mut self, names: I) {
        self.avoid.extend(names);
    }

    pub fn next_name(&mut self) -> Name {
        loop {
            let candidate = Name(format!("{}{}", self.prefix, self.next));
            self.next += 1;
            if self.avoid.insert(candidate.clone()) {
                return candidate;
            }
        }
    }

    /// A fresh name derived from `base`, e.g. `x'`, `x''`.
    pub fn prime(&mut self, base: &Name) -> Name {
        let mut s = base.0.clone();
        loop {
            s.push('\'');
            let candidate = Name(s.clone());
            if self.avoid.insert(candidate.clone()) {
                return candidate;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supply_skips_avoided_names() {
        let mut s = FreshSupply::new("c");
        s.avoid(["c0".into(), "c2".into()]);
        assert_eq!(s.next_name(), Name::from("c1"));
        assert_eq!(s.next_name(), Name::from("c3"));
    }

    #[test]
    fn prime_never_repeats() {
        let mut s = FreshSupply::new("c");
        s.avoid(["x'".into()]);
        assert_eq!(s.prime(&"x".into()), Name::from("x''"));
        assert_eq!(s.prime(&"x".into()), Name::from("x'''"));
    }
}
