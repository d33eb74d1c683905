//! Subsets of the relay index set {1, ..., n} packed into a bitmask.
//!
//! Bit `i - 1` of the mask corresponds to relay `i`; interfaces that accept
//! or report subsets use 1-based sorted index lists, the mask is internal.

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

/// Largest supported number of relays.
pub const MAX_RELAYS: usize = 8;

/// A subset of the relays, stored as a bitmask with bit `i - 1` for relay `i`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SubsetMask(u16);

impl SubsetMask {
    /// The empty subset.
    pub const EMPTY: SubsetMask = SubsetMask(0);

    /// The full set {1, ..., n}.
    pub fn full(n: usize) -> SubsetMask {
        assert!(n <= MAX_RELAYS, "at most {MAX_RELAYS} relays supported");
        SubsetMask(((1u32 << n) - 1) as u16)
    }

    /// The singleton {i} (1-based).
    pub fn singleton(i: usize) -> SubsetMask {
        assert!((1..=MAX_RELAYS).contains(&i), "relay index {i} out of range");
        SubsetMask(1 << (i - 1))
    }

    /// Builds a subset from 1-based relay indices, rejecting indices outside
    /// `1..=n` and duplicates.
    pub fn from_indices(indices: &[usize], n: usize) -> Result<SubsetMask, String> {
        let mut mask = SubsetMask::EMPTY;
        for &i in indices {
            if i < 1 || i > n {
                return Err(format!("relay index {i} outside 1..={n}"));
            }
            if mask.contains(i) {
                return Err(format!("relay index {i} listed twice"));
            }
            mask.0 |= 1 << (i - 1);
        }
        Ok(mask)
    }

    /// The 1-based indices of the members, ascending.
    pub fn indices(self) -> Vec<usize> {
        (1..=MAX_RELAYS).filter(|&i| self.contains(i)).collect()
    }

    pub fn contains(self, i: usize) -> bool {
        (1..=MAX_RELAYS).contains(&i) && self.0 & (1 << (i - 1)) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, other: SubsetMask) -> SubsetMask {
        SubsetMask(self.0 | other.0)
    }

    pub fn intersect(self, other: SubsetMask) -> SubsetMask {
        SubsetMask(self.0 & other.0)
    }

    /// Set difference `self \ other`.
    pub fn minus(self, other: SubsetMask) -> SubsetMask {
        SubsetMask(self.0 & !other.0)
    }

    /// Complement within {1, ..., n}.
    pub fn complement_in(self, n: usize) -> SubsetMask {
        SubsetMask::full(n).minus(self)
    }

    pub fn is_subset_of(self, other: SubsetMask) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint_from(self, other: SubsetMask) -> bool {
        self.0 & other.0 == 0
    }

    /// Iterates over all subsets of `self`, the empty set first and `self`
    /// last, in carry-rippler order.
    pub fn subsets(self) -> SubsetIter {
        SubsetIter { set: self.0, next: Some(0) }
    }

    /// Iterates over all nonempty proper subsets of `self` in ascending order
    /// of their 1-based index lists.
    pub fn proper_nonempty_subsets_lex(self) -> impl Iterator<Item = SubsetMask> {
        let mut subs: Vec<SubsetMask> = self
            .subsets()
            .filter(|s| !s.is_empty() && *s != self)
            .collect();
        subs.sort_by_key(|s| s.indices());
        subs.into_iter()
    }

    pub fn raw(self) -> u16 {
        self.0
    }
}

/// Enumerates the subsets of a fixed mask via `(sub - set) & set`.
pub struct SubsetIter {
    set: u16,
    next: Option<u16>,
}

impl Iterator for SubsetIter {
    type Item = SubsetMask;

    fn next(&mut self) -> Option<SubsetMask> {
        let current = self.next?;
        let following = current.wrapping_sub(self.set) & self.set;
        self.next = if following == 0 { None } else { Some(following) };
        Some(SubsetMask(current))
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let indices = self.indices();
        let parts: Vec<String> = indices.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl Serialize for SubsetMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.indices().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SubsetMask {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let indices = Vec::<usize>::deserialize(deserializer)?;
        SubsetMask::from_indices(&indices, MAX_RELAYS).map_err(serde::de::Error::custom)
    }
}
