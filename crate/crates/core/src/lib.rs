//! Log-linear analysis of symmetric pair-count tables: maximum-likelihood
//! fitting of the no-proximity and single-pair models, a degree-two Markov
//! basis with Metropolis–Hastings sampling on fibers, exact enumeration of
//! small fibers, per-pair likelihood-ratio scans and order-of-magnitude
//! estimates of fiber sizes.

pub mod enumerate;
pub mod error;
pub mod io;
pub mod markov;
pub mod mle;
pub mod model;
pub mod parallel;
pub mod sampler;
pub mod stats;
pub mod table;

pub use enumerate::{
    composed_lower_bound, ellipsoid_log_volume, enumerate_fiber, exact_p_value, exact_p_value_for,
    fiber_ratio_report, lattice_correction_magnitude, log_binomial, subtable_lower_bound, Count,
    FiberEnumeration, MagnitudeEstimate, MagnitudeKind,
};
pub use error::{Error, Result};
pub use markov::{
    connectivity_check, generate_basis, is_normal_form, normal_form, MarkovBasis, MarkovMove, MoveVariant,
    NormalForm,
};
pub use mle::{fit, FitConfig, FittedModel};
pub use model::{design_matrix, model_rank, nested_df, parse_model, sufficient_statistic, ModelKind, ModelSpec};
pub use parallel::Execution;
pub use sampler::{estimate_p_value, run_chain, run_chains, ChainConfig, GofResult, PooledGof, Target};
pub use stats::{
    bonferroni, chi_square_stat, chisq_sf, deviation_table, g_squared, pair_scan, PairScanRow, RowStatus,
    ScanConfig,
};
pub use table::{DeviationTable, MarginVector, PairIndex, PairTable, RealPairTable, TriangularTable};
