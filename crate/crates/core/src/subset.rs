//! Sorted index sets over one side of the platform.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A set of agent indices from one side, stored sorted and deduplicated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct Subset(Vec<usize>);

impl Subset {
    pub fn empty() -> Self {
        Subset(Vec::new())
    }

    pub fn new(mut items: Vec<usize>) -> Self {
        items.sort_unstable();
        items.dedup();
        Subset(items)
    }

    /// Builds the set of bit positions of `mask`.
    pub fn from_mask(mask: u64) -> Self {
        let mut items = Vec::with_capacity(mask.count_ones() as usize);
        let mut rest = mask;
        while rest != 0 {
            let bit = rest.trailing_zeros() as usize;
            items.push(bit);
            rest &= rest - 1;
        }
        Subset(items)
    }

    /// Bitmask view; every index must be below 64.
    pub fn to_mask(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &i| {
            debug_assert!(i < 64, "index {i} does not fit a 64-bit mask");
            acc | (1u64 << i)
        })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn with(&self, i: usize) -> Subset {
        let mut items = self.0.clone();
        if let Err(pos) = items.binary_search(&i) {
            items.insert(pos, i);
        }
        Subset(items)
    }

    pub fn union(&self, other: &Subset) -> Subset {
        let mut items: Vec<usize> = self.0.iter().chain(other.0.iter()).copied().collect();
        items.sort_unstable();
        items.dedup();
        Subset(items)
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

impl From<Vec<usize>> for Subset {
    fn from(items: Vec<usize>) -> Self {
        Subset::new(items)
    }
}

impl From<Subset> for Vec<usize> {
    fn from(s: Subset) -> Self {
        s.0
    }
}

impl FromIterator<usize> for Subset {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Subset::new(iter.into_iter().collect())
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Tie-break order used by every deterministic argmax over sets:
/// fewer elements first, then lexicographic on the sorted indices.
pub(crate) fn prefer_smaller(a: &[usize], b: &[usize]) -> bool {
    a.len() < b.len() || (a.len() == b.len() && a < b)
}
