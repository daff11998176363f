//! Bitmask encoding of subsets of the coordinate indices.
//!
//! Coordinate `k` (zero-based) is a member iff bit `k` is set, so the
//! subset `{1, 3}` of a four-variable problem (one-based) is `0b0101`.
//! The same index addresses the mixed partial `∂_J` inside the vector of
//! length `2^m` carried by the holonomic system.

use std::fmt;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetIndex(pub u32);

impl SubsetIndex {
    pub const EMPTY: SubsetIndex = SubsetIndex(0);

    pub fn from_members(members: &[usize]) -> Self {
        SubsetIndex(members.iter().fold(0u32, |acc, &k| acc | (1 << k)))
    }

    pub fn singleton(k: usize) -> Self {
        SubsetIndex(1 << k)
    }

    #[inline]
    pub fn contains(self, k: usize) -> bool {
        self.0 & (1 << k) != 0
    }

    #[inline]
    pub fn with(self, k: usize) -> Self {
        SubsetIndex(self.0 | (1 << k))
    }

    #[inline]
    pub fn without(self, k: usize) -> Self {
        SubsetIndex(self.0 & !(1 << k))
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Members in increasing order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |k| bits & (1 << k) != 0)
    }

    /// All subsets of `{0, .., m-1}` in index order.
    pub fn all(m: usize) -> impl Iterator<Item = SubsetIndex> {
        (0..(1u32 << m)).map(SubsetIndex)
    }
}

impl fmt::Display for SubsetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, k) in self.members().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            // one-based, as in the mathematical notation
            write!(f, "{}", k + 1)?;
        }
        write!(f, "}}")
    }
}
