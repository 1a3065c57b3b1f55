//! No-proximity and single-pair proximity log-linear models.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{cell_count, pairs, MarginVector, PairIndex, PairTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `p_jk ∝ θ_j θ_k` for every pair.
    NoProximity,
    /// As above, with an extra factor `μ_rs` on the single cell `(r, s)`.
    SinglePair(PairIndex),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    n: usize,
    kind: ModelKind,
}

impl ModelSpec {
    pub fn no_proximity(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::TooSmall { n, min: 3 });
        }
        Ok(ModelSpec { n, kind: ModelKind::NoProximity })
    }

    pub fn single_pair(n: usize, r: usize, s: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::TooSmall { n, min: 3 });
        }
        Ok(ModelSpec { n, kind: ModelKind::SinglePair(PairIndex::new(r, s, n)?) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn proximity_pair(&self) -> Option<PairIndex> {
        match self.kind {
            ModelKind::NoProximity => None,
            ModelKind::SinglePair(p) => Some(p),
        }
    }

    /// Number of rows of the design matrix.
    pub fn parameter_count(&self) -> usize {
        self.n + usize::from(self.proximity_pair().is_some())
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModelKind::NoProximity => f.write_str("no-proximity"),
            ModelKind::SinglePair(p) => write!(f, "pair:{},{}", p.j(), p.k()),
        }
    }
}

/// Parses `no-proximity` or `pair:r,s` for a known category count.
pub fn parse_model(s: &str, n: usize) -> Result<ModelSpec> {
    let s = s.trim();
    if s == "no-proximity" {
        return ModelSpec::no_proximity(n);
    }
    let rest = s
        .strip_prefix("pair:")
        .ok_or_else(|| Error::InvalidConfig(format!("unknown model {s:?}; expected no-proximity or pair:r,s")))?;
    let (r, t) = parse_pair_text(rest)?;
    ModelSpec::single_pair(n, r, t)
}

/// Parses `r,s` into two integers (order not checked).
pub fn parse_pair_text(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidConfig(format!("expected a pair like 1,22, got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((usize::from_str(a.trim()).map_err(|_| bad())?, usize::from_str(b.trim()).map_err(|_| bad())?))
}

/// 0/1 design matrix, one column per pair in storage order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u8>,
}

impl DesignMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    /// Matrix-vector product with a cell vector.
    pub fn apply(&self, cells: &[u64]) -> Vec<u64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(cells).map(|(&a, &c)| u64::from(a) * c).sum())
            .collect()
    }

    /// Rank over the rationals by Gaussian elimination with partial pivoting.
    pub fn rank(&self) -> usize {
        let mut m: Vec<Vec<f64>> = (0..self.rows).map(|r| self.row(r).iter().map(|&x| f64::from(x)).collect()).collect();
        let mut rank = 0;
        for col in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let (pivot, best) = (rank..self.rows)
                .map(|r| (r, m[r][col].abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty range");
            if best < 1e-9 {
                continue;
            }
            m.swap(rank, pivot);
            let prow = m[rank].clone();
            for row in m.iter_mut().skip(rank + 1) {
                let factor = row[col] / prow[col];
                if factor != 0.0 {
                    for (x, p) in row.iter_mut().zip(&prow).skip(col) {
                        *x -= factor * p;
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

pub fn design_matrix(spec: &ModelSpec) -> DesignMatrix {
    let n = spec.n();
    let rows = spec.parameter_count();
    let cols = cell_count(n);
    let mut entries = vec![0u8; rows * cols];
    for (c, p) in pairs(n).enumerate() {
        entries[(p.j() - 1) * cols + c] = 1;
        entries[(p.k() - 1) * cols + c] = 1;
        if spec.proximity_pair() == Some(p) {
            entries[n * cols + c] = 1;
        }
    }
    DesignMatrix { rows, cols, entries }
}

pub fn model_rank(spec: &ModelSpec) -> usize {
    design_matrix(spec).rank()
}

/// Degrees of freedom of the likelihood-ratio test of the no-proximity model
/// against a single-pair model: the difference of their design ranks.
pub fn nested_df(n: usize, pair: PairIndex) -> Result<usize> {
    let small = model_rank(&ModelSpec::no_proximity(n)?);
    let big = model_rank(&ModelSpec::single_pair(n, pair.j(), pair.k())?);
    Ok(big - small)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SufficientStatistic {
    pub margins: MarginVector,
    pub fixed_cell: Option<(PairIndex, u64)>,
}

impl SufficientStatistic {
    /// Components in design-matrix row order.
    pub fn to_vec(&self) -> Vec<u64> {
        let mut v = self.margins.as_slice().to_vec();
        if let Some((_, c)) = self.fixed_cell {
            v.push(c);
        }
        v
    }
}

pub fn sufficient_statistic(spec: &ModelSpec, t: &PairTable) -> Result<SufficientStatistic> {
    if spec.n() != t.n() {
        return Err(Error::DimensionMismatch { left: spec.n(), right: t.n() });
    }
    Ok(SufficientStatistic { margins: t.margins(), fixed_cell: spec.proximity_pair().map(|p| (p, t[p])) })
}
