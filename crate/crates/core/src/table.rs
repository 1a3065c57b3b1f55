//! Upper-triangular pair tables over `n` categories.
//!
//! Cells `(j, k)` with `1 <= j < k <= n` are stored densely in row-major
//! order, so `(1,2), (1,3), ..., (1,n), (2,3), ...` map to offsets
//! `0, 1, 2, ...`.

use std::fmt;
use std::ops::{Add, Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::MarkovMove;

/// A 1-based unordered pair of distinct categories, stored with `j < k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairIndex {
    j: usize,
    k: usize,
}

impl PairIndex {
    /// Builds a canonical pair; the arguments may come in either order.
    pub fn new(a: usize, b: usize, n: usize) -> Result<Self> {
        let (j, k) = if a < b { (a, b) } else { (b, a) };
        if j == 0 || j == k || k > n {
            return Err(Error::InvalidPair { j: a, k: b, n });
        }
        Ok(PairIndex { j, k })
    }

    pub(crate) fn new_unchecked(j: usize, k: usize) -> Self {
        debug_assert!(0 < j && j < k);
        PairIndex { j, k }
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn contains(&self, c: usize) -> bool {
        self.j == c || self.k == c
    }
}

impl fmt::Display for PairIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.j, self.k)
    }
}

/// Number of cells in a table over `n` categories.
pub const fn cell_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Flat offset of the 1-based pair `(j, k)`, `j < k`.
#[inline]
pub fn offset(n: usize, j: usize, k: usize) -> usize {
    debug_assert!(0 < j && j < k && k <= n);
    let r = j - 1;
    r * (2 * n - r - 1) / 2 + (k - j - 1)
}

/// All pairs of an `n`-category table in storage order.
pub fn pairs(n: usize) -> impl Iterator<Item = PairIndex> + Clone {
    (1..=n).flat_map(move |j| (j + 1..=n).map(move |k| PairIndex::new_unchecked(j, k)))
}

/// Dense storage for a value per unordered category pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangularTable<T> {
    n: usize,
    cells: Vec<T>,
}

/// Observed or sampled counts.
pub type PairTable = TriangularTable<u64>;
/// Expected counts such as a fitted MLE table.
pub type RealPairTable = TriangularTable<f64>;
/// Signed cellwise differences, e.g. observed minus expected.
pub type DeviationTable = TriangularTable<f64>;

impl<T: Copy + Default> TriangularTable<T> {
    pub fn zeros(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooSmall { n, min: 2 });
        }
        Ok(TriangularTable { n, cells: vec![T::default(); cell_count(n)] })
    }

    pub fn from_cells(n: usize, cells: Vec<T>) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooSmall { n, min: 2 });
        }
        if cells.len() != cell_count(n) {
            return Err(Error::InvalidConfig(format!(
                "expected {} cells for n = {n}, got {}",
                cell_count(n),
                cells.len()
            )));
        }
        Ok(TriangularTable { n, cells })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [T] {
        &mut self.cells
    }

    pub fn get(&self, idx: PairIndex) -> T {
        self.cells[offset(self.n, idx.j, idx.k)]
    }

    pub fn set(&mut self, idx: PairIndex, value: T) {
        let o = offset(self.n, idx.j, idx.k);
        self.cells[o] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (PairIndex, T)> + '_ {
        pairs(self.n).zip(self.cells.iter().copied())
    }

    pub fn map<U: Copy + Default>(&self, f: impl Fn(T) -> U) -> TriangularTable<U> {
        TriangularTable { n: self.n, cells: self.cells.iter().map(|&c| f(c)).collect() }
    }

    pub(crate) fn check_same_n<U>(&self, other: &TriangularTable<U>) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }
}

impl<T> Index<PairIndex> for TriangularTable<T> {
    type Output = T;
    fn index(&self, idx: PairIndex) -> &T {
        &self.cells[offset(self.n, idx.j, idx.k)]
    }
}

impl<T> IndexMut<PairIndex> for TriangularTable<T> {
    fn index_mut(&mut self, idx: PairIndex) -> &mut T {
        &mut self.cells[offset(self.n, idx.j, idx.k)]
    }
}

impl<T: Copy + Default + Add<Output = T>> Add for &TriangularTable<T> {
    type Output = Result<TriangularTable<T>>;
    fn add(self, rhs: Self) -> Self::Output {
        self.check_same_n(rhs)?;
        Ok(TriangularTable {
            n: self.n,
            cells: self.cells.iter().zip(&rhs.cells).map(|(&a, &b)| a + b).collect(),
        })
    }
}

/// Per-category totals `u_k`: the sum of all cells that contain `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MarginVector {
    u: Vec<u64>,
}

impl MarginVector {
    pub fn new(u: Vec<u64>) -> Result<Self> {
        let total: u64 = u.iter().sum();
        if !total.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!("margin total {total} is odd")));
        }
        Ok(MarginVector { u })
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    /// Margin of the 1-based category `k`.
    pub fn get(&self, k: usize) -> u64 {
        self.u[k - 1]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.u
    }

    /// Sample size: half the sum of margins.
    pub fn total(&self) -> u64 {
        self.u.iter().sum::<u64>() / 2
    }
}

impl PairTable {
    pub fn margins(&self) -> MarginVector {
        let mut u = vec![0u64; self.n];
        for (idx, c) in self.iter() {
            u[idx.j - 1] += c;
            u[idx.k - 1] += c;
        }
        MarginVector { u }
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }

    /// Returns `self + m`, or [`Error::NegativeCell`] if the move does not apply.
    pub fn apply_move(&self, m: &MarkovMove) -> Result<PairTable> {
        let mut out = self.clone();
        out.apply_move_in_place(m)?;
        Ok(out)
    }

    /// In-place variant of [`PairTable::apply_move`]; leaves `self` untouched on error.
    pub fn apply_move_in_place(&mut self, m: &MarkovMove) -> Result<()> {
        if m.n_min() > self.n {
            return Err(Error::DimensionMismatch { left: self.n, right: m.n_min() });
        }
        let [p0, p1] = m.plus_cells();
        let [m0, m1] = m.minus_cells();
        for cell in [m0, m1] {
            if self[cell] == 0 {
                return Err(Error::NegativeCell { cell });
            }
        }
        self[m0] -= 1;
        self[m1] -= 1;
        self[p0] += 1;
        self[p1] += 1;
        Ok(())
    }

    pub fn to_real(&self) -> RealPairTable {
        self.map(|c| c as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{MarkovMove, MoveVariant};

    fn pi(j: usize, k: usize) -> PairIndex {
        PairIndex::new(j, k, 22).unwrap()
    }

    #[test]
    fn offsets_follow_storage_order() {
        for n in 2..12 {
            for (o, p) in pairs(n).enumerate() {
                assert_eq!(offset(n, p.j(), p.k()), o);
            }
            assert_eq!(pairs(n).count(), cell_count(n));
        }
    }

    #[test]
    fn pair_index_rejects_diagonal_and_out_of_range() {
        assert!(PairIndex::new(5, 5, 22).is_err());
        assert!(PairIndex::new(0, 3, 22).is_err());
        assert!(PairIndex::new(3, 23, 22).is_err());
        assert_eq!(PairIndex::new(7, 2, 22).unwrap(), pi(2, 7));
    }

    #[test]
    fn margins_by_hand() {
        let mut t = PairTable::zeros(4).unwrap();
        t[PairIndex::new(1, 2, 4).unwrap()] = 3;
        t[PairIndex::new(3, 4, 4).unwrap()] = 5;
        assert_eq!(t.margins().as_slice(), &[3, 3, 5, 5]);
        assert_eq!(t.total(), 8);
        let z = PairTable::zeros(4).unwrap();
        assert_eq!(z.margins().as_slice(), &[0, 0, 0, 0]);
        assert_eq!(z.total(), 0);
    }

    #[test]
    fn swap_between_matchings() {
        let p = |j, k| PairIndex::new(j, k, 4).unwrap();
        let mut t = PairTable::zeros(4).unwrap();
        t[p(1, 3)] = 1;
        t[p(2, 4)] = 1;
        let m = MarkovMove::new([1, 2, 3, 4], MoveVariant::A, 1).unwrap();
        let out = t.apply_move(&m).unwrap();
        let mut want = PairTable::zeros(4).unwrap();
        want[p(1, 2)] = 1;
        want[p(3, 4)] = 1;
        assert_eq!(out, want);
        assert_eq!(out.apply_move(&m.negated()).unwrap(), t);
    }

    #[test]
    fn zero_table_rejects_every_move() {
        let t = PairTable::zeros(4).unwrap();
        for v in [MoveVariant::A, MoveVariant::B] {
            for s in [1, -1] {
                let m = MarkovMove::new([1, 2, 3, 4], v, s).unwrap();
                assert!(matches!(t.apply_move(&m), Err(Error::NegativeCell { .. })));
            }
        }
    }

    #[test]
    fn odd_margin_total_is_rejected() {
        assert!(MarginVector::new(vec![1, 1, 1]).is_err());
        assert_eq!(MarginVector::new(vec![1, 1, 2]).unwrap().total(), 2);
    }
}
