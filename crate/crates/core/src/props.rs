//! Atomic proposition tables and bitmask proposition sets.
//!
//! Propositions are interned into a dense, declaration-ordered table. All
//! downstream structures (observation sets, automaton alphabets, MDP labels)
//! use `PropSet` bitmasks over that order, which makes state numbering
//! reproducible across runs.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Hard limit on the number of distinct propositions in one table.
pub const MAX_PROPS: usize = 32;

/// Ordered table of proposition names. Declaration order fixes bit positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl PropTable {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() > MAX_PROPS {
            return Err(Error::Capacity(format!(
                "{} propositions declared, at most {} supported",
                names.len(),
                MAX_PROPS
            )));
        }
        let mut index = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Validation(format!(
                    "proposition `{name}` declared twice"
                )));
            }
        }
        Ok(PropTable { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Builds a set from names, failing on undeclared propositions.
    pub fn set_of<'a, I: IntoIterator<Item = &'a str>>(&self, names: I) -> Result<PropSet> {
        let mut set = PropSet::EMPTY;
        for name in names {
            match self.index_of(name) {
                Some(i) => set.insert(i),
                None => {
                    return Err(Error::Validation(format!(
                        "proposition `{name}` is not declared"
                    )))
                }
            }
        }
        Ok(set)
    }

    /// Renders a set as `{a,b}` using declaration order.
    pub fn render(&self, set: PropSet) -> String {
        let mut out = String::from("{");
        let mut first = true;
        for i in set.iter() {
            if !first {
                out.push(',');
            }
            out.push_str(&self.names[i]);
            first = false;
        }
        out.push('}');
        out
    }
}

/// A subset of the proposition table, packed as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PropSet(u32);

impl PropSet {
    pub const EMPTY: PropSet = PropSet(0);

    pub fn from_bits(bits: u32) -> Self {
        PropSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn singleton(i: usize) -> Self {
        PropSet(1 << i)
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn with(mut self, i: usize) -> Self {
        self.insert(i);
        self
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn union(self, other: PropSet) -> PropSet {
        PropSet(self.0 | other.0)
    }

    pub fn intersection(self, other: PropSet) -> PropSet {
        PropSet(self.0 & other.0)
    }

    pub fn minus(self, other: PropSet) -> PropSet {
        PropSet(self.0 & !other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Member indices in ascending (declaration) order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }
}

impl fmt::Debug for PropSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PropSet{{")?;
        let mut first = true;
        for i in self.iter() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
            first = false;
        }
        write!(f, "}}")
    }
}
