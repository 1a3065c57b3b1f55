//! Test statistics, chi-square tail probabilities, Bonferroni adjustment,
//! deviation tables and the all-pairs likelihood-ratio scan.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mle::{fit, FitConfig};
use crate::model::{nested_df, ModelSpec};
use crate::parallel::{map_collect, Execution};
use statrs::function::gamma::{gamma_lr, gamma_ur};
use crate::table::{pairs, DeviationTable, PairIndex, PairTable, RealPairTable};

/// Relative slack used when comparing statistics for "at least as extreme",
/// so that tables whose statistics agree up to rounding count as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Smallest value counted as `>= observed`.
pub fn tail_threshold(observed: f64) -> f64 {
    observed - TIE_TOLERANCE * observed.abs().max(1.0)
}

/// Pearson statistic `Σ (F - f̂)² / f̂`.
pub fn chi_square_stat(table: &PairTable, fhat: &RealPairTable) -> Result<f64> {
    table.check_same_n(fhat)?;
    let mut sum = 0.0;
    for ((p, f), &e) in table.iter().zip(fhat.cells()) {
        if !(e > 0.0) {
            return Err(Error::ZeroExpected { cell: p });
        }
        let d = f as f64 - e;
        sum += d * d / e;
    }
    Ok(sum)
}

/// `2 Σ f̂¹ log(f̂¹ / f̂⁰)`, with `0 log 0 = 0`.
pub fn g_squared(fhat1: &RealPairTable, fhat0: &RealPairTable) -> Result<f64> {
    fhat1.check_same_n(fhat0)?;
    let mut sum = 0.0;
    for ((p, a), &b) in fhat1.iter().zip(fhat0.cells()) {
        if !(b > 0.0) {
            return Err(Error::ZeroNull { cell: p });
        }
        if a > 0.0 {
            sum += a * (a / b).ln();
        }
    }
    Ok(2.0 * sum)
}

/// Deviance difference `2 Σ f log(f̂¹ / f̂⁰)` over cells with `f > 0`.
pub fn deviance_difference(data: &PairTable, fhat1: &RealPairTable, fhat0: &RealPairTable) -> Result<f64> {
    data.check_same_n(fhat1)?;
    data.check_same_n(fhat0)?;
    let mut sum = 0.0;
    for ((p, f), (&a, &b)) in data.iter().zip(fhat1.cells().iter().zip(fhat0.cells())) {
        if f == 0 {
            continue;
        }
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::ZeroExpected { cell: p });
        }
        sum += f as f64 * (a / b).ln();
    }
    Ok(2.0 * sum)
}

/// `P(X >= x)` for `X ~ χ²(df)`.
pub fn chisq_sf(x: f64, df: u32) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if df == 0 {
        return 0.0;
    }
    gamma_ur(f64::from(df) / 2.0, x / 2.0)
}

/// `P(X <= x)` for `X ~ χ²(df)`.
pub fn chisq_cdf(x: f64, df: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if df == 0 {
        return 1.0;
    }
    gamma_lr(f64::from(df) / 2.0, x / 2.0)
}

pub fn bonferroni(p: f64, tests: usize) -> f64 {
    (p * tests as f64).min(1.0)
}

/// Cellwise `f - f̂`.
pub fn deviation_table(f: &PairTable, fhat: &RealPairTable) -> Result<DeviationTable> {
    f.check_same_n(fhat)?;
    let cells = f.cells().iter().zip(fhat.cells()).map(|(&a, &b)| a as f64 - b).collect();
    DeviationTable::from_cells(f.n(), cells)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum RowStatus {
    Fitted,
    /// The proximity cell is zero, so the fitted proximity factor is zero.
    ZeroCount,
    /// The single-pair fit could not be produced; the reason is recorded.
    Unfittable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScanRow {
    pub pair: PairIndex,
    pub observed: u64,
    /// Expected count at the pair under the no-proximity fit.
    pub expected_null: f64,
    pub mu: Option<f64>,
    /// `2 Σ f̂¹ log(f̂¹ / f̂⁰)`.
    pub statistic: Option<f64>,
    /// `2 Σ f log(f̂¹ / f̂⁰)`; equals `statistic` at converged fits.
    pub deviance: Option<f64>,
    /// Pearson contribution of the pair's own cell under the null fit.
    pub pearson_cell: f64,
    pub df: usize,
    pub p_raw: Option<f64>,
    pub p_adjusted: Option<f64>,
    pub status: RowStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub fit: FitConfig,
    /// Bonferroni multiplier; defaults to the number of pairs.
    pub tests: Option<usize>,
    pub execution: Execution,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { fit: FitConfig::default(), tests: None, execution: Execution::Auto }
    }
}

/// Fits every single-pair model and tests it against the no-proximity fit.
/// Rows are sorted by raw p-value, then by pair; rows without a statistic
/// come last.
pub fn pair_scan(data: &PairTable, cfg: &ScanConfig) -> Result<Vec<PairScanRow>> {
    let n = data.n();
    let null = fit(&ModelSpec::no_proximity(n)?, data, &cfg.fit)?.ensure_converged()?;
    let all: Vec<PairIndex> = pairs(n).collect();
    let tests = cfg.tests.unwrap_or(all.len());
    if tests == 0 {
        return Err(Error::InvalidConfig("number of tests must be at least 1".into()));
    }
    let rows = map_collect(cfg.execution, &all, |&p| scan_row(data, &null.fitted, p, &cfg.fit, tests));
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        let ka = a.p_raw.unwrap_or(f64::INFINITY);
        let kb = b.p_raw.unwrap_or(f64::INFINITY);
        ka.total_cmp(&kb).then(a.pair.cmp(&b.pair))
    });
    Ok(rows)
}

fn scan_row(data: &PairTable, null: &RealPairTable, p: PairIndex, cfg: &FitConfig, tests: usize) -> Result<PairScanRow> {
    let n = data.n();
    let df = nested_df(n, p)?;
    let observed = data[p];
    let expected_null = null[p];
    let d = observed as f64 - expected_null;
    let mut row = PairScanRow {
        pair: p,
        observed,
        expected_null,
        mu: None,
        statistic: None,
        deviance: None,
        pearson_cell: d * d / expected_null,
        df,
        p_raw: None,
        p_adjusted: None,
        status: RowStatus::Fitted,
    };
    let alt = match fit(&ModelSpec::single_pair(n, p.j(), p.k())?, data, cfg).and_then(|m| m.ensure_converged()) {
        Ok(m) => m,
        Err(e @ (Error::ZeroMargin { .. } | Error::DidNotConverge { .. })) => {
            row.status = RowStatus::Unfittable(e.to_string());
            return Ok(row);
        }
        Err(e) => return Err(e),
    };
    let g2 = g_squared(&alt.fitted, null)?.max(0.0);
    let p_raw = chisq_sf(g2, df as u32);
    row.mu = alt.mu;
    row.statistic = Some(g2);
    row.deviance = Some(deviance_difference(data, &alt.fitted, null)?);
    row.p_raw = Some(p_raw);
    row.p_adjusted = Some(bonferroni(p_raw, tests));
    if observed == 0 {
        row.status = RowStatus::ZeroCount;
    }
    Ok(row)
}
