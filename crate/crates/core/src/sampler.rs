//! Metropolis–Hastings walk on a fiber using the degree-two Markov basis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{MarkovBasis, MarkovMove};
use crate::parallel::{map_collect, Execution};
use crate::stats::tail_threshold;
use crate::table::PairTable;

/// Stationary distribution of the walk on the fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Every table of the fiber equally likely.
    #[default]
    Uniform,
    /// `π(t) ∝ 1 / ∏ t(cell)!`, the conditional law of multinomial counts
    /// given their sufficient statistic.
    Hypergeometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub seed: u64,
    pub burn_in: u64,
    /// Steps between retained samples.
    pub thinning: u64,
    /// Number of retained samples.
    pub samples: usize,
    pub target: Target,
    /// Keep every retained statistic in [`GofResult::stream`].
    pub keep_stream: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            seed: 1,
            burn_in: 30_000,
            thinning: 30_000,
            samples: 10_000,
            target: Target::default(),
            keep_stream: false,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(Error::InvalidConfig("thinning must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidConfig("samples must be at least 1".into()));
        }
        Ok(())
    }

    pub fn total_steps(&self) -> u64 {
        self.burn_in + self.samples as u64 * self.thinning
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub observed_stat: f64,
    pub samples: usize,
    /// Retained samples whose statistic is at least the observed one.
    pub exceed_count: usize,
    pub p_value: f64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub steps_total: u64,
    pub accepted: u64,
    pub stream: Option<Vec<f64>>,
}

impl GofResult {
    pub fn acceptance_rate(&self) -> f64 {
        if self.steps_total == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps_total as f64
        }
    }
}

/// Draws a basis move uniformly. The basis holds each move together with
/// its negation, so the proposal is symmetric.
pub fn propose<R: Rng + ?Sized>(basis: &MarkovBasis, rng: &mut R) -> MarkovMove {
    basis.moves()[rng.random_range(0..basis.len())]
}

/// Hypergeometric ratio `π(t + m) / π(t) = ∏ t(c)! / (t + m)(c)!` over the
/// four touched cells, or `0` when the move would leave the fiber.
pub fn acceptance_ratio(t: &PairTable, m: &MarkovMove) -> f64 {
    let [p0, p1] = m.plus_cells();
    let [m0, m1] = m.minus_cells();
    hypergeometric_ratio(t[p0], t[p1], t[m0], t[m1])
}

#[inline]
fn hypergeometric_ratio(p0: u64, p1: u64, m0: u64, m1: u64) -> f64 {
    if m0 == 0 || m1 == 0 {
        return 0.0;
    }
    (m0 as f64 * m1 as f64) / ((p0 + 1) as f64 * (p1 + 1) as f64)
}

/// A single Markov chain on the fiber of its start table.
pub struct Chain<'a> {
    basis: &'a MarkovBasis,
    table: PairTable,
    target: Target,
    rng: ChaCha8Rng,
    steps: u64,
    accepted: u64,
}

impl<'a> Chain<'a> {
    pub fn new(start: &PairTable, basis: &'a MarkovBasis, target: Target, seed: u64) -> Result<Self> {
        if basis.n() != start.n() {
            return Err(Error::DimensionMismatch { left: start.n(), right: basis.n() });
        }
        Ok(Chain {
            basis,
            table: start.clone(),
            target,
            rng: ChaCha8Rng::seed_from_u64(seed),
            steps: 0,
            accepted: 0,
        })
    }

    pub fn table(&self) -> &PairTable {
        &self.table
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    /// One proposal; returns whether it was accepted. Rejections still count
    /// as a step.
    pub fn step(&mut self) -> bool {
        self.steps += 1;
        let offsets = self.basis.offsets();
        let [p0, p1, m0, m1] = offsets[self.rng.random_range(0..offsets.len())];
        let cells = self.table.cells_mut();
        if cells[m0] == 0 || cells[m1] == 0 {
            return false;
        }
        if self.target == Target::Hypergeometric {
            let r = hypergeometric_ratio(cells[p0], cells[p1], cells[m0], cells[m1]);
            if r < 1.0 && self.rng.random::<f64>() >= r {
                return false;
            }
        }
        cells[m0] -= 1;
        cells[m1] -= 1;
        cells[p0] += 1;
        cells[p1] += 1;
        self.accepted += 1;
        true
    }

    pub fn advance(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }
}

/// Runs `burn_in + samples * thinning` steps from `start` and records
/// `stat` after every `thinning` steps past burn-in. The observed statistic
/// is `stat(start)`.
pub fn run_chain<F>(start: &PairTable, basis: &MarkovBasis, cfg: &ChainConfig, stat: F) -> Result<GofResult>
where
    F: Fn(&PairTable) -> f64,
{
    cfg.validate()?;
    let observed = stat(start);
    let threshold = tail_threshold(observed);
    #[cfg(debug_assertions)]
    let margins = start.margins();
    let mut chain = Chain::new(start, basis, cfg.target, cfg.seed)?;
    chain.advance(cfg.burn_in);
    let mut stream = cfg.keep_stream.then(|| Vec::with_capacity(cfg.samples));
    let (mut exceed, mut sum) = (0usize, 0.0);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..cfg.samples {
        chain.advance(cfg.thinning);
        #[cfg(debug_assertions)]
        debug_assert_eq!(chain.table().margins(), margins, "sample left the fiber");
        let s = stat(chain.table());
        if s >= threshold {
            exceed += 1;
        }
        sum += s;
        min = min.min(s);
        max = max.max(s);
        if let Some(v) = stream.as_mut() {
            v.push(s);
        }
    }
    Ok(GofResult {
        observed_stat: observed,
        samples: cfg.samples,
        exceed_count: exceed,
        p_value: exceed as f64 / cfg.samples as f64,
        min,
        max,
        mean: sum / cfg.samples as f64,
        steps_total: chain.steps(),
        accepted: chain.accepted(),
        stream,
    })
}

/// Independent chains seeded `seed, seed + 1, ...`, pooled in seed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledGof {
    pub pooled: GofResult,
    pub chains: Vec<GofResult>,
}

pub fn run_chains<F>(
    start: &PairTable,
    basis: &MarkovBasis,
    cfg: &ChainConfig,
    chains: usize,
    exec: Execution,
    stat: F,
) -> Result<PooledGof>
where
    F: Fn(&PairTable) -> f64 + Sync + Send,
{
    if chains == 0 {
        return Err(Error::InvalidConfig("need at least one chain".into()));
    }
    let seeds: Vec<u64> = (0..chains as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let results = map_collect(exec, &seeds, |&seed| run_chain(start, basis, &ChainConfig { seed, ..*cfg }, &stat));
    let chains = results.into_iter().collect::<Result<Vec<_>>>()?;
    let samples: usize = chains.iter().map(|c| c.samples).sum();
    let exceed: usize = chains.iter().map(|c| c.exceed_count).sum();
    let stream = cfg
        .keep_stream
        .then(|| chains.iter().flat_map(|c| c.stream.iter().flatten().copied()).collect());
    let pooled = GofResult {
        observed_stat: chains[0].observed_stat,
        samples,
        exceed_count: exceed,
        p_value: exceed as f64 / samples as f64,
        min: chains.iter().map(|c| c.min).fold(f64::INFINITY, f64::min),
        max: chains.iter().map(|c| c.max).fold(f64::NEG_INFINITY, f64::max),
        mean: chains.iter().map(|c| c.mean * c.samples as f64).sum::<f64>() / samples as f64,
        steps_total: chains.iter().map(|c| c.steps_total).sum(),
        accepted: chains.iter().map(|c| c.accepted).sum(),
        stream,
    };
    Ok(PooledGof { pooled, chains })
}

/// Fraction of `sampled` that are at least `observed` (ties within
/// [`crate::stats::TIE_TOLERANCE`] count).
pub fn estimate_p_value(sampled: &[f64], observed: f64) -> Result<f64> {
    if sampled.is_empty() {
        return Err(Error::InvalidConfig("no sampled statistics".into()));
    }
    let threshold = tail_threshold(observed);
    Ok(sampled.iter().filter(|&&s| s >= threshold).count() as f64 / sampled.len() as f64)
}
