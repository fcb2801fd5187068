//! Admissible (downward-closed) multi-index sets over `ℕ₊^d`.
//!
//! Members are kept in lexicographic order; every iteration in the crate
//! (point enumeration, marking ties, logs) follows that order.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Result};

/// A vector of level numbers, each `≥ 1`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(levels: Vec<u32>) -> Result<Self> {
        if levels.is_empty() {
            return Err(invalid("multi-index must have at least one dimension"));
        }
        if levels.iter().any(|&l| l == 0) {
            return Err(invalid("multi-index levels start at 1"));
        }
        Ok(Self(levels))
    }

    /// The all-ones index `(1,…,1)`.
    pub fn ones(dim: usize) -> Self {
        Self(alloc::vec![1; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn levels(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, j: usize) -> u32 {
        self.0[j]
    }

    /// `ν + e_j`.
    pub fn raised(&self, j: usize) -> Self {
        let mut v = self.0.clone();
        v[j] += 1;
        Self(v)
    }

    /// `ν − e_j`, or `None` when `ν_j = 1`.
    pub fn lowered(&self, j: usize) -> Option<Self> {
        if self.0[j] <= 1 {
            return None;
        }
        let mut v = self.0.clone();
        v[j] -= 1;
        Some(Self(v))
    }

    /// `Σ (ν_i − 1)`.
    pub fn excess(&self) -> u32 {
        self.0.iter().map(|l| l - 1).sum()
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// Comma-separated levels, e.g. `2,1,1`.
impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl core::str::FromStr for MultiIndex {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        let levels = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<u32>().map_err(|_| invalid(alloc::format!("bad level `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(levels)
    }
}

/// An ordered set of multi-indices of a common dimension.
///
/// Sets built through [`MultiIndexSet::root`], [`MultiIndexSet::total_degree`],
/// [`MultiIndexSet::enhance`] and [`MultiIndexSet::union`] of admissible sets
/// stay admissible; [`MultiIndexSet::from_indices`] accepts arbitrary members
/// so that admissibility can be tested.
#[derive(Clone, PartialEq, Eq)]
pub struct MultiIndexSet {
    dim: usize,
    members: BTreeSet<MultiIndex>,
}

impl MultiIndexSet {
    /// The empty set in `dim` dimensions.
    pub fn empty(dim: usize) -> Self {
        Self { dim, members: BTreeSet::new() }
    }

    /// `{(1,…,1)}`.
    pub fn root(dim: usize) -> Self {
        let mut s = Self::empty(dim);
        s.members.insert(MultiIndex::ones(dim));
        s
    }

    pub fn from_indices<I: IntoIterator<Item = MultiIndex>>(dim: usize, it: I) -> Result<Self> {
        let mut s = Self::empty(dim);
        for m in it {
            s.insert(m)?;
        }
        Ok(s)
    }

    /// `{ν : Σ(ν_i − 1) ≤ w}`.
    pub fn total_degree(dim: usize, w: u32) -> Self {
        let mut s = Self::root(dim);
        for _ in 0..w {
            let m = s.margin();
            s.members.extend(m);
        }
        s
    }

    /// `{ν : ν_1 ≤ max_level}` in one dimension.
    pub fn chain(max_level: u32) -> Self {
        let mut s = Self::empty(1);
        for l in 1..=max_level {
            s.members.insert(MultiIndex(alloc::vec![l]));
        }
        s
    }

    pub fn insert(&mut self, m: MultiIndex) -> Result<bool> {
        if m.dim() != self.dim {
            return Err(crate::Error::DimensionMismatch { expected: self.dim, found: m.dim() });
        }
        Ok(self.members.insert(m))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, m: &MultiIndex) -> bool {
        self.members.contains(m)
    }

    /// Members in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> + '_ {
        self.members.iter()
    }

    /// Every member's lower neighbours are members.
    pub fn is_admissible(&self) -> bool {
        self.members.iter().all(|m| self.lower_neighbours_present(m))
    }

    fn lower_neighbours_present(&self, m: &MultiIndex) -> bool {
        (0..self.dim).all(|j| m.lowered(j).map_or(true, |l| self.members.contains(&l)))
    }

    /// All forward neighbours `ν + e_j` that are not already members.
    pub fn margin(&self) -> BTreeSet<MultiIndex> {
        let mut out = BTreeSet::new();
        for m in &self.members {
            for j in 0..self.dim {
                let r = m.raised(j);
                if !self.members.contains(&r) {
                    out.insert(r);
                }
            }
        }
        out
    }

    /// Margin members whose individual addition keeps the set admissible.
    pub fn reduced_margin(&self) -> BTreeSet<MultiIndex> {
        if self.members.is_empty() {
            let mut out = BTreeSet::new();
            out.insert(MultiIndex::ones(self.dim));
            return out;
        }
        self.margin().into_iter().filter(|m| self.lower_neighbours_present(m)).collect()
    }

    /// `I ∪ R(I)`.
    pub fn enhance(&self) -> Self {
        let mut out = self.clone();
        out.members.extend(self.reduced_margin());
        out
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(crate::Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut out = self.clone();
        out.members.extend(other.members.iter().cloned());
        Ok(out)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.members.is_subset(&other.members)
    }

    /// Largest level used in each dimension (`0` for an empty set).
    pub fn max_levels(&self) -> Vec<u32> {
        let mut out = alloc::vec![0; self.dim];
        for m in &self.members {
            for (o, &l) in out.iter_mut().zip(m.levels()) {
                *o = (*o).max(l);
            }
        }
        out
    }

    /// One member per line, levels comma separated.
    pub fn to_lines(&self) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        for m in &self.members {
            let _ = writeln!(s, "{m}");
        }
        s
    }

    pub fn from_lines(dim: usize, text: &str) -> Result<Self> {
        let mut s = Self::empty(dim);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            s.insert(line.parse()?)?;
        }
        Ok(s)
    }
}

impl fmt::Debug for MultiIndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    fn set(dim: usize, v: &[&[u32]]) -> MultiIndexSet {
        MultiIndexSet::from_indices(dim, v.iter().map(|x| mi(x))).unwrap()
    }

    fn collect(b: BTreeSet<MultiIndex>) -> Vec<MultiIndex> {
        b.into_iter().collect()
    }

    #[test]
    fn admissibility_examples() {
        assert!(set(2, &[&[1, 1]]).is_admissible());
        assert!(set(2, &[&[1, 1], &[2, 1], &[3, 1]]).is_admissible());
        assert!(!set(2, &[&[1, 1], &[3, 1]]).is_admissible());
    }

    #[test]
    fn margin_examples() {
        assert_eq!(collect(set(1, &[&[1]]).margin()), vec![mi(&[2])]);
        assert_eq!(collect(set(2, &[&[1, 1]]).margin()), vec![mi(&[1, 2]), mi(&[2, 1])]);
        assert_eq!(
            collect(set(2, &[&[1, 1], &[2, 1]]).margin()),
            vec![mi(&[1, 2]), mi(&[2, 2]), mi(&[3, 1])]
        );
    }

    #[test]
    fn reduced_margin_examples() {
        assert_eq!(collect(set(2, &[&[1, 1]]).reduced_margin()), vec![mi(&[1, 2]), mi(&[2, 1])]);
        // (2,2) needs (1,2), which is absent
        assert_eq!(
            collect(set(2, &[&[1, 1], &[2, 1]]).reduced_margin()),
            vec![mi(&[1, 2]), mi(&[3, 1])]
        );
        assert_eq!(
            collect(set(2, &[&[1, 1], &[1, 2]]).reduced_margin()),
            vec![mi(&[1, 3]), mi(&[2, 1])]
        );
    }

    #[test]
    fn enhance_examples() {
        assert_eq!(set(1, &[&[1]]).enhance(), set(1, &[&[1], &[2]]));
        assert_eq!(set(2, &[&[1, 1]]).enhance(), set(2, &[&[1, 1], &[2, 1], &[1, 2]]));
        assert_eq!(
            set(2, &[&[1, 1], &[2, 1]]).enhance(),
            set(2, &[&[1, 1], &[2, 1], &[3, 1], &[1, 2]])
        );
    }

    #[test]
    fn dimension_mixing_is_rejected() {
        let mut s = MultiIndexSet::root(2);
        assert!(s.insert(mi(&[1, 1, 1])).is_err());
        assert!(s.union(&MultiIndexSet::root(3)).is_err());
        assert!(MultiIndex::new(vec![0, 1]).is_err());
    }

    #[test]
    fn total_degree_counts() {
        // binomial(d + w, d)
        assert_eq!(MultiIndexSet::total_degree(4, 3).len(), 35);
        assert_eq!(MultiIndexSet::total_degree(2, 2).len(), 6);
        assert!(MultiIndexSet::total_degree(3, 4).is_admissible());
    }

    #[test]
    fn line_format_round_trips() {
        let s = MultiIndexSet::total_degree(3, 2);
        let text = s.to_lines();
        assert!(text.starts_with("1,1,1\n"));
        assert_eq!(MultiIndexSet::from_lines(3, &text).unwrap(), s);
    }
}
