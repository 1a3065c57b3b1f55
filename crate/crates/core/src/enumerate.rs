//! Exhaustive fiber enumeration for small instances, exact conditional
//! p-values, and log-scale magnitude estimates for fibers far too large to
//! enumerate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::Target;
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::ln_gamma;
use crate::stats::{chi_square_stat, tail_threshold};
use crate::table::{cell_count, offset, MarginVector, PairIndex, PairTable, RealPairTable};

/// Every table with the given margins (and fixed cell, if any).
#[derive(Debug, Clone)]
pub struct FiberEnumeration {
    margins: MarginVector,
    fixed_cell: Option<(PairIndex, u64)>,
    tables: Vec<PairTable>,
    weights: Vec<f64>,
}

impl FiberEnumeration {
    pub fn margins(&self) -> &MarginVector {
        &self.margins
    }

    pub fn fixed_cell(&self) -> Option<(PairIndex, u64)> {
        self.fixed_cell
    }

    pub fn tables(&self) -> &[PairTable] {
        &self.tables
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Hypergeometric weights `∝ 1/∏ cells!`, normalized.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_for(&self, target: Target) -> Vec<f64> {
        match target {
            Target::Hypergeometric => self.weights.clone(),
            Target::Uniform => vec![1.0 / self.tables.len() as f64; self.tables.len()],
        }
    }
}

fn hypergeometric_weights(tables: &[PairTable]) -> Vec<f64> {
    let logw: Vec<f64> = tables.iter().map(|t| -t.cells().iter().map(|&c| ln_factorial(c)).sum::<f64>()).collect();
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

struct Search<'a> {
    n: usize,
    /// Cells in fill order as `(offset, a, b)` with 0-based categories.
    order: &'a [(usize, usize, usize)],
    /// Fill position of each cell offset; `usize::MAX` for pre-assigned cells.
    position: &'a [usize],
    remaining: Vec<u64>,
    open_cells: Vec<usize>,
    cells: Vec<u64>,
    out: Vec<PairTable>,
    cap: usize,
}

impl Search<'_> {
    fn open_capacity(&self, v: usize, pos: usize) -> u64 {
        (0..self.n)
            .filter(|&w| w != v)
            .filter(|&w| {
                let (a, b) = if v < w { (v, w) } else { (w, v) };
                let p = self.position[offset(self.n, a + 1, b + 1)];
                p != usize::MAX && p > pos
            })
            .map(|w| self.remaining[w])
            .sum()
    }

    fn run(&mut self, pos: usize) -> Result<()> {
        if pos == self.order.len() {
            if self.remaining.iter().all(|&r| r == 0) {
                if self.out.len() == self.cap {
                    return Err(Error::FiberTooLarge { cap: self.cap });
                }
                self.out.push(PairTable::from_cells(self.n, self.cells.clone())?);
            }
            return Ok(());
        }
        let (o, a, b) = self.order[pos];
        let hi = self.remaining[a].min(self.remaining[b]);
        let mut lo = 0;
        let mut top = hi;
        if self.open_cells[a] == 1 {
            lo = lo.max(self.remaining[a]);
            top = top.min(self.remaining[a]);
        }
        if self.open_cells[b] == 1 {
            lo = lo.max(self.remaining[b]);
            top = top.min(self.remaining[b]);
        }
        if lo > top {
            return Ok(());
        }
        self.open_cells[a] -= 1;
        self.open_cells[b] -= 1;
        for v in lo..=top {
            self.remaining[a] -= v;
            self.remaining[b] -= v;
            self.cells[o] = v;
            if self.remaining[a] <= self.open_capacity(a, pos) && self.remaining[b] <= self.open_capacity(b, pos) {
                self.run(pos + 1)?;
            }
            self.remaining[a] += v;
            self.remaining[b] += v;
        }
        self.cells[o] = 0;
        self.open_cells[a] += 1;
        self.open_cells[b] += 1;
        Ok(())
    }
}

/// Lists the fiber of `u` by depth-first search with margin-feasibility
/// pruning. Rows of categories with the smallest margins are filled first.
/// Fails with [`Error::FiberTooLarge`] instead of truncating.
pub fn enumerate_fiber(u: &MarginVector, fixed: Option<(PairIndex, u64)>, cap: usize) -> Result<FiberEnumeration> {
    let n = u.n();
    if n < 3 {
        return Err(Error::TooSmall { n, min: 3 });
    }
    if cap == 0 {
        return Err(Error::InvalidConfig("enumeration cap must be at least 1".into()));
    }
    let mut remaining = u.as_slice().to_vec();
    let mut cells = vec![0u64; cell_count(n)];
    let mut position = vec![0usize; cell_count(n)];
    let mut open_cells = vec![n - 1; n];
    let mut feasible = true;
    if let Some((p, v)) = fixed {
        if p.k() > n {
            return Err(Error::InvalidPair { j: p.j(), k: p.k(), n });
        }
        let (a, b) = (p.j() - 1, p.k() - 1);
        if remaining[a] < v || remaining[b] < v {
            feasible = false;
        } else {
            remaining[a] -= v;
            remaining[b] -= v;
            cells[offset(n, p.j(), p.k())] = v;
        }
        open_cells[a] -= 1;
        open_cells[b] -= 1;
    }

    let mut by_slack: Vec<usize> = (0..n).collect();
    by_slack.sort_by_key(|&v| (u.as_slice()[v], v));
    let mut order = Vec::with_capacity(cell_count(n));
    for (r, &a) in by_slack.iter().enumerate() {
        for &b in &by_slack[r + 1..] {
            let (x, y) = if a < b { (a, b) } else { (b, a) };
            let o = offset(n, x + 1, y + 1);
            if fixed.is_some_and(|(p, _)| p.j() == x + 1 && p.k() == y + 1) {
                position[o] = usize::MAX;
                continue;
            }
            position[o] = order.len();
            order.push((o, a, b));
        }
    }

    let tables = if feasible {
        let mut search = Search {
            n,
            order: &order,
            position: &position,
            remaining,
            open_cells,
            cells,
            out: Vec::new(),
            cap,
        };
        search.run(0)?;
        search.out
    } else {
        Vec::new()
    };
    let weights = hypergeometric_weights(&tables);
    Ok(FiberEnumeration { margins: u.clone(), fixed_cell: fixed, tables, weights })
}

/// Exact conditional p-value: total hypergeometric weight of the fiber
/// tables whose chi-square against `fhat` is at least the observed one.
pub fn exact_p_value(u: &MarginVector, observed: &PairTable, fhat: &RealPairTable, cap: usize) -> Result<f64> {
    exact_p_value_for(u, observed, fhat, cap, Target::Hypergeometric)
}

/// [`exact_p_value`] under an explicit fiber distribution.
pub fn exact_p_value_for(
    u: &MarginVector,
    observed: &PairTable,
    fhat: &RealPairTable,
    cap: usize,
    target: Target,
) -> Result<f64> {
    if &observed.margins() != u {
        return Err(Error::InvalidConfig("observed table is not in the fiber of the given margins".into()));
    }
    let fiber = enumerate_fiber(u, None, cap)?;
    let threshold = tail_threshold(chi_square_stat(observed, fhat)?);
    let weights = fiber.weights_for(target);
    let mut p = 0.0;
    for (t, w) in fiber.tables().iter().zip(weights) {
        if chi_square_stat(t, fhat)? >= threshold {
            p += w;
        }
    }
    Ok(p.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagnitudeKind {
    SubtableLowerBound,
    EllipsoidVolume,
    LatticeCorrection,
    BinomialCount,
    ComposedLowerBound,
    Ratio,
}

/// An order-of-magnitude quantity carried as its base-10 logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeEstimate {
    pub log10_value: f64,
    pub kind: MagnitudeKind,
}

impl MagnitudeEstimate {
    fn new(log10_value: f64, kind: MagnitudeKind) -> Self {
        MagnitudeEstimate { log10_value, kind }
    }

    /// `(mantissa, exponent)` with `1 <= mantissa < 10`.
    pub fn scientific(&self) -> (f64, i64) {
        let e = self.log10_value.floor();
        (10f64.powf(self.log10_value - e), e as i64)
    }
}

/// A positive count, either exact (decimal digits of any length) or as log10.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Count {
    Decimal(String),
    Log10(f64),
}

impl Count {
    pub fn log10(&self) -> Result<f64> {
        match self {
            Count::Decimal(s) => log10_decimal(s),
            Count::Log10(x) if x.is_finite() => Ok(*x),
            Count::Log10(x) => Err(Error::InvalidConfig(format!("log10 count {x} is not finite"))),
        }
    }
}

/// log10 of a positive decimal integer of arbitrary length.
pub fn log10_decimal(s: &str) -> Result<f64> {
    let s = s.trim();
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::InvalidConfig(format!("{s:?} is not a decimal integer")));
    }
    let digits = s.trim_start_matches('0');
    if digits.is_empty() {
        return Err(Error::InvalidConfig("count must be positive".into()));
    }
    let head_len = digits.len().min(17);
    let head: f64 = digits[..head_len].parse().expect("ascii digits");
    Ok(head.log10() + (digits.len() - head_len) as f64)
}

/// log10 of the product of subtable counts: a lower bound on the fiber size
/// when the subtables can be filled independently.
pub fn subtable_lower_bound(counts: &[Count]) -> Result<MagnitudeEstimate> {
    if counts.is_empty() {
        return Err(Error::InvalidConfig("at least one subtable count is required".into()));
    }
    let mut sum = 0.0;
    for c in counts {
        sum += c.log10()?;
    }
    Ok(MagnitudeEstimate::new(sum, MagnitudeKind::SubtableLowerBound))
}

/// log10 volume of the ellipsoid `Σ (x_c - e_c)² / e_c <= r²` in as many
/// dimensions as there are expected counts `e_c`.
pub fn ellipsoid_log_volume(expected: &[f64], r_squared: f64) -> Result<MagnitudeEstimate> {
    if !(r_squared > 0.0) {
        return Err(Error::InvalidConfig(format!("r² must be positive, got {r_squared}")));
    }
    if expected.is_empty() {
        return Err(Error::InvalidConfig("ellipsoid needs at least one dimension".into()));
    }
    let d = expected.len() as f64;
    let mut ln_axes = 0.0;
    for (o, &e) in expected.iter().enumerate() {
        if !(e > 0.0) {
            return Err(Error::ZeroExpected { cell: nth_pair(o) });
        }
        ln_axes += 0.5 * (r_squared * e).ln();
    }
    let ln_unit_ball = 0.5 * d * std::f64::consts::PI.ln() - ln_gamma(0.5 * d + 1.0);
    Ok(MagnitudeEstimate::new((ln_unit_ball + ln_axes) / std::f64::consts::LN_10, MagnitudeKind::EllipsoidVolume))
}

fn nth_pair(o: usize) -> PairIndex {
    // smallest n whose table holds offset o
    let mut n = 2;
    while cell_count(n) <= o {
        n += 1;
    }
    crate::table::pairs(n).nth(o).expect("offset in range")
}

/// log10 of the lattice-point error term `r^(n/2)`.
pub fn lattice_correction_magnitude(r_squared: f64, n: usize) -> Result<MagnitudeEstimate> {
    if !(r_squared > 0.0) || n == 0 {
        return Err(Error::InvalidConfig("need r² > 0 and n >= 1".into()));
    }
    Ok(MagnitudeEstimate::new(n as f64 / 4.0 * r_squared.log10(), MagnitudeKind::LatticeCorrection))
}

/// log10 of the binomial coefficient `C(n, k)`.
pub fn log_binomial(n: u64, k: u64) -> Result<MagnitudeEstimate> {
    if k > n {
        return Err(Error::InvalidConfig(format!("C({n}, {k}) needs k <= n")));
    }
    let k = k.min(n - k);
    let value = if k <= 4096 {
        (0..k).map(|i| ((n - i) as f64 / (k - i) as f64).log10()).sum()
    } else {
        (ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0))
            / std::f64::consts::LN_10
    };
    Ok(MagnitudeEstimate::new(value, MagnitudeKind::BinomialCount))
}

/// Subtable bound times the number of ways to pick `applied` of `moves`
/// boundary-crossing moves.
pub fn composed_lower_bound(subtable_log10: f64, moves: u64, applied: u64) -> Result<MagnitudeEstimate> {
    let b = log_binomial(moves, applied)?;
    Ok(MagnitudeEstimate::new(subtable_log10 + b.log10_value, MagnitudeKind::ComposedLowerBound))
}

/// log10 of (tables inside the ellipsoid) / (fiber size). With
/// `conservative_floor` set, that value replaces the fiber lower bound.
pub fn fiber_ratio_report(
    lower_bound_log10: f64,
    ellipsoid_log10: f64,
    conservative_floor: Option<f64>,
) -> Result<MagnitudeEstimate> {
    let lower = conservative_floor.unwrap_or(lower_bound_log10);
    if !lower.is_finite() || !ellipsoid_log10.is_finite() {
        return Err(Error::InvalidConfig("magnitudes must be finite".into()));
    }
    Ok(MagnitudeEstimate::new(ellipsoid_log10 - lower, MagnitudeKind::Ratio))
}
