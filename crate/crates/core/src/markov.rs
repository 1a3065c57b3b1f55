//! Degree-two Markov basis of the no-proximity model and reduction to the
//! unique normal form of a fiber.
//!
//! For every 4-subset `i < j < k < l` there are three perfect matchings:
//! aligned `{(i,j),(k,l)}`, crossing `{(i,k),(j,l)}` and nested
//! `{(i,l),(j,k)}`. The two basis moves trade the crossing matching for one
//! of the other two. Reduction runs them backwards, always towards the
//! crossing matching, which is the sorted quadratic Gröbner basis of the
//! second hypersimplex; its normal forms are exactly the sorted tables.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::enumerate::enumerate_fiber;
use crate::error::{Error, Result};
use crate::table::{offset, MarginVector, PairIndex, PairTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveVariant {
    /// `+(i,j) +(k,l) -(i,k) -(j,l)`
    A,
    /// `+(i,l) +(j,k) -(i,k) -(j,l)`
    B,
}

/// A margin-preserving move on the 4-subset `quad`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MarkovMove {
    quad: [usize; 4],
    variant: MoveVariant,
    sign: i8,
}

impl MarkovMove {
    /// `quad` must be strictly increasing and 1-based; `sign` is `1` or `-1`.
    pub fn new(quad: [usize; 4], variant: MoveVariant, sign: i8) -> Result<Self> {
        let [i, j, k, l] = quad;
        if !(0 < i && i < j && j < k && k < l) {
            return Err(Error::InvalidConfig(format!("move quadruple {quad:?} is not increasing")));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidConfig(format!("move sign must be +1 or -1, got {sign}")));
        }
        Ok(MarkovMove { quad, variant, sign })
    }

    pub fn quad(&self) -> [usize; 4] {
        self.quad
    }

    pub fn variant(&self) -> MoveVariant {
        self.variant
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn negated(&self) -> Self {
        MarkovMove { sign: -self.sign, ..*self }
    }

    /// Smallest category count the move fits into.
    pub fn n_min(&self) -> usize {
        self.quad[3]
    }

    fn forward_cells(&self) -> ([PairIndex; 2], [PairIndex; 2]) {
        let [i, j, k, l] = self.quad;
        let p = PairIndex::new_unchecked;
        let minus = [p(i, k), p(j, l)];
        let plus = match self.variant {
            MoveVariant::A => [p(i, j), p(k, l)],
            MoveVariant::B => [p(i, l), p(j, k)],
        };
        (plus, minus)
    }

    /// Cells that gain one unit.
    pub fn plus_cells(&self) -> [PairIndex; 2] {
        let (plus, minus) = self.forward_cells();
        if self.sign > 0 {
            plus
        } else {
            minus
        }
    }

    /// Cells that lose one unit.
    pub fn minus_cells(&self) -> [PairIndex; 2] {
        let (plus, minus) = self.forward_cells();
        if self.sign > 0 {
            minus
        } else {
            plus
        }
    }

    /// Dense integer vector of the move over an `n`-category table.
    pub fn to_vector(&self, n: usize) -> Vec<i64> {
        let mut v = vec![0i64; crate::table::cell_count(n)];
        for c in self.plus_cells() {
            v[offset(n, c.j(), c.k())] += 1;
        }
        for c in self.minus_cells() {
            v[offset(n, c.j(), c.k())] -= 1;
        }
        v
    }
}

/// Flat offsets `[plus0, plus1, minus0, minus1]` of a move.
pub(crate) type MoveOffsets = [usize; 4];

/// Every basis move for `n` categories: two variants and two signs per 4-subset.
#[derive(Debug, Clone)]
pub struct MarkovBasis {
    n: usize,
    moves: Vec<MarkovMove>,
    offsets: Vec<MoveOffsets>,
}

impl MarkovBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn moves(&self) -> &[MarkovMove] {
        &self.moves
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub(crate) fn offsets(&self) -> &[MoveOffsets] {
        &self.offsets
    }
}

pub fn generate_basis(n: usize) -> Result<MarkovBasis> {
    if n < 4 {
        return Err(Error::TooSmall { n, min: 4 });
    }
    let mut moves = Vec::with_capacity(4 * quadruple_count(n));
    for [i, j, k, l] in quadruples(n) {
        for variant in [MoveVariant::A, MoveVariant::B] {
            for sign in [1, -1] {
                moves.push(MarkovMove { quad: [i, j, k, l], variant, sign });
            }
        }
    }
    let offsets = moves
        .iter()
        .map(|m| {
            let [p0, p1] = m.plus_cells();
            let [m0, m1] = m.minus_cells();
            [p0, p1, m0, m1].map(|c| offset(n, c.j(), c.k()))
        })
        .collect();
    Ok(MarkovBasis { n, moves, offsets })
}

fn quadruple_count(n: usize) -> usize {
    if n < 4 {
        0
    } else {
        n * (n - 1) * (n - 2) * (n - 3) / 24
    }
}

/// All 1-based 4-subsets in lexicographic order.
pub fn quadruples(n: usize) -> impl Iterator<Item = [usize; 4]> {
    (1..=n).flat_map(move |i| {
        (i + 1..=n).flat_map(move |j| {
            (j + 1..=n).flat_map(move |k| (k + 1..=n).map(move |l| [i, j, k, l]))
        })
    })
}

/// Offsets of the six cells of a 4-subset.
#[derive(Debug, Clone, Copy)]
struct QuadCells {
    ij: usize,
    kl: usize,
    ik: usize,
    jl: usize,
    il: usize,
    jk: usize,
}

fn quad_cells(n: usize) -> Vec<QuadCells> {
    quadruples(n)
        .map(|[i, j, k, l]| QuadCells {
            ij: offset(n, i, j),
            kl: offset(n, k, l),
            ik: offset(n, i, k),
            jl: offset(n, j, l),
            il: offset(n, i, l),
            jk: offset(n, j, k),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalForm {
    pub table: PairTable,
    /// Number of unit basis moves applied.
    pub steps: u64,
}

/// Reduces `t` to the unique sink of its fiber.
///
/// Quadruples are scanned lexicographically; at each one the aligned pair
/// and then the nested pair are traded for the crossing pair with the
/// largest multiplicity that keeps cells nonnegative. Passes repeat until a
/// pass changes nothing. The result has no 4-subset with both aligned cells
/// or both nested cells positive.
pub fn normal_form(t: &PairTable) -> NormalForm {
    let n = t.n();
    let mut cells = t.cells().to_vec();
    let mut steps = 0u64;
    if n >= 4 {
        let quads = quad_cells(n);
        loop {
            let mut changed = false;
            for q in &quads {
                let a = cells[q.ij].min(cells[q.kl]);
                if a > 0 {
                    cells[q.ij] -= a;
                    cells[q.kl] -= a;
                    cells[q.ik] += a;
                    cells[q.jl] += a;
                    steps += a;
                    changed = true;
                }
                let b = cells[q.il].min(cells[q.jk]);
                if b > 0 {
                    cells[q.il] -= b;
                    cells[q.jk] -= b;
                    cells[q.ik] += b;
                    cells[q.jl] += b;
                    steps += b;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
    NormalForm { table: PairTable::from_cells(n, cells).expect("same shape"), steps }
}

/// True when no reduction applies to `t`.
pub fn is_normal_form(t: &PairTable) -> bool {
    let n = t.n();
    let c = t.cells();
    n < 4 || quad_cells(n).iter().all(|q| (c[q.ij] == 0 || c[q.kl] == 0) && (c[q.il] == 0 || c[q.jk] == 0))
}

/// Checks that the basis moves connect every table of the fiber of `u`.
///
/// The fiber is enumerated first, so this is only usable on small instances;
/// more than `cap` tables yields [`Error::FiberTooLarge`].
pub fn connectivity_check(u: &MarginVector, basis: &MarkovBasis, cap: usize) -> Result<bool> {
    if basis.n() != u.n() {
        return Err(Error::DimensionMismatch { left: u.n(), right: basis.n() });
    }
    let fiber = enumerate_fiber(u, None, cap)?;
    let tables = fiber.tables();
    if tables.len() <= 1 {
        return Ok(true);
    }
    let index: HashMap<&[u64], usize> = tables.iter().enumerate().map(|(i, t)| (t.cells(), i)).collect();
    let mut seen = vec![false; tables.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(i) = queue.pop_front() {
        for &[p0, p1, m0, m1] in basis.offsets() {
            let cur = tables[i].cells();
            if cur[m0] == 0 || cur[m1] == 0 {
                continue;
            }
            let mut next = cur.to_vec();
            next[m0] -= 1;
            next[m1] -= 1;
            next[p0] += 1;
            next[p1] += 1;
            let &to = index.get(next.as_slice()).expect("basis move left the fiber");
            if !seen[to] {
                seen[to] = true;
                reached += 1;
                queue.push_back(to);
            }
        }
    }
    Ok(reached == tables.len())
}
