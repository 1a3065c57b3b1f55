//! Maximum-likelihood fitting by iterative proportional scaling.
//!
//! Every cell sits in two margins, so a sweep rescales all cells at once by
//! the geometric mean of the two margin ratios,
//! `f(j,k) <- f(j,k) * sqrt((u_j / m_j) * (u_k / m_k))`. The table stays of
//! the form `θ_j θ_k` throughout, so the iteration is run on `θ` directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelSpec};
use crate::table::{cell_count, PairIndex, PairTable, RealPairTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Largest allowed absolute gap between a fitted and an observed margin.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { tolerance: 1e-8, max_iterations: 100_000 }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    /// Count-scale parameters: `fitted(j,k) = θ_j θ_k` off the proximity cell.
    pub theta: Vec<f64>,
    /// Proximity factor `μ_rs`; zero when the observed proximity cell is zero.
    pub mu: Option<f64>,
    pub fitted: RealPairTable,
    /// `Σ f log(f̂ / N)` over cells with `f > 0`.
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest absolute margin violation at exit.
    pub max_violation: f64,
}

impl FittedModel {
    pub fn expected_cell(&self, idx: PairIndex) -> f64 {
        self.fitted[idx]
    }

    /// Cell probabilities `f̂ / N`.
    pub fn probabilities(&self) -> RealPairTable {
        let total: f64 = self.fitted.cells().iter().sum();
        self.fitted.map(|c| c / total)
    }

    /// `β_j = log θ_j`.
    pub fn beta(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t.ln()).collect()
    }

    /// `α_rs = log μ_rs`, if this is a single-pair fit.
    pub fn alpha(&self) -> Option<f64> {
        self.mu.map(f64::ln)
    }

    /// Turns a fit that ran out of iterations into [`Error::DidNotConverge`].
    pub fn ensure_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::DidNotConverge { iterations: self.iterations, violation: self.max_violation })
        }
    }
}

/// Fits `spec` to `data`.
///
/// A single-pair model pins its proximity cell at the observed count and
/// fits the remaining cells against the margins with that count removed.
/// Running out of iterations is not an error here; the partial fit comes
/// back with `converged == false`.
pub fn fit(spec: &ModelSpec, data: &PairTable, cfg: &FitConfig) -> Result<FittedModel> {
    cfg.validate()?;
    let n = spec.n();
    if n != data.n() {
        return Err(Error::DimensionMismatch { left: n, right: data.n() });
    }
    let u = data.margins();
    for k in 1..=n {
        if u.get(k) == 0 {
            return Err(Error::ZeroMargin { component: format!("u_{k}") });
        }
    }
    let excluded = match spec.kind() {
        ModelKind::NoProximity => None,
        ModelKind::SinglePair(p) => Some((p, data[p])),
    };
    let mut target: Vec<f64> = u.as_slice().iter().map(|&x| x as f64).collect();
    if let Some((p, c)) = excluded {
        for v in [p.j(), p.k()] {
            target[v - 1] -= c as f64;
            if target[v - 1] <= 0.0 {
                return Err(Error::ZeroMargin { component: format!("u_{v} - f{p}") });
            }
        }
    }

    let free_cells = cell_count(n) - usize::from(excluded.is_some());
    let free_total: f64 = target.iter().sum::<f64>() / 2.0;
    let mut theta = vec![(free_total / free_cells as f64).sqrt(); n];
    let mut fitted_margins = vec![0.0; n];
    let mut iterations = 0;
    let mut violation;
    loop {
        free_margins(&theta, excluded.map(|(p, _)| p), &mut fitted_margins);
        violation = fitted_margins.iter().zip(&target).map(|(m, u)| (m - u).abs()).fold(0.0, f64::max);
        if violation <= cfg.tolerance || iterations == cfg.max_iterations {
            break;
        }
        for ((t, m), u) in theta.iter_mut().zip(&fitted_margins).zip(&target) {
            *t *= (u / m).sqrt();
        }
        iterations += 1;
    }

    let mut fitted = RealPairTable::zeros(n)?;
    for p in crate::table::pairs(n) {
        fitted[p] = theta[p.j() - 1] * theta[p.k() - 1];
    }
    let mu = excluded.map(|(p, c)| {
        fitted[p] = c as f64;
        c as f64 / (theta[p.j() - 1] * theta[p.k() - 1])
    });
    let total = data.total() as f64;
    let loglik = data
        .iter()
        .filter(|&(_, f)| f > 0)
        .map(|(p, f)| f as f64 * (fitted[p] / total).ln())
        .sum();
    Ok(FittedModel {
        spec: *spec,
        theta,
        mu,
        fitted,
        loglik,
        iterations,
        converged: violation <= cfg.tolerance,
        max_violation: violation,
    })
}

/// Margins of the product table `θ_j θ_k`, leaving out one cell if given.
fn free_margins(theta: &[f64], skip: Option<PairIndex>, out: &mut [f64]) {
    let s: f64 = theta.iter().sum();
    for (m, &t) in out.iter_mut().zip(theta) {
        *m = t * (s - t);
    }
    if let Some(p) = skip {
        let x = theta[p.j() - 1] * theta[p.k() - 1];
        out[p.j() - 1] -= x;
        out[p.k() - 1] -= x;
    }
}

/// Recovers `θ` from a product-form table via
/// `θ_j = sqrt(f(j,k) f(j,l) / f(k,l))` using the two lowest other indices.
pub fn recover_theta(fitted: &RealPairTable) -> Result<Vec<f64>> {
    let n = fitted.n();
    if n < 3 {
        return Err(Error::TooSmall { n, min: 3 });
    }
    (1..=n)
        .map(|j| {
            let mut others = (1..=n).filter(|&x| x != j);
            let (k, l) = (others.next().expect("n >= 3"), others.next().expect("n >= 3"));
            theta_from_triple(fitted, j, k, l)
        })
        .collect()
}

/// `sqrt(f(j,k) f(j,l) / f(k,l))` for distinct `j, k, l`.
pub fn theta_from_triple(fitted: &RealPairTable, j: usize, k: usize, l: usize) -> Result<f64> {
    let n = fitted.n();
    let jk = fitted[PairIndex::new(j, k, n)?];
    let jl = fitted[PairIndex::new(j, l, n)?];
    let kl_idx = PairIndex::new(k, l, n)?;
    let kl = fitted[kl_idx];
    if !(kl > 0.0) {
        return Err(Error::ZeroExpected { cell: kl_idx });
    }
    Ok((jk * jl / kl).sqrt())
}
