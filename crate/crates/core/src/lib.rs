//! Mendelian randomization toolkit: summary- and individual-level causal
//! effect estimators, valid-instrument selection, identification checks on
//! enumerated causal populations, and a seeded simulation engine for
//! weak-instrument bias analysis.
//!
//! The crate is organized by workflow stage:
//!
//! - [`types`]: shared domain model (SNP summary records, individual-level
//!   datasets, simulation configuration, estimator results).
//! - [`population`] / [`estimand`] / [`popgen`]: finite causal populations,
//!   exact identification checks, and randomized population builders.
//! - [`summary`]: ratio, IVW, weighted-median, mode-based, and Egger
//!   estimators on summary statistics.
//! - [`individual`]: OLS, 2SLS, split-sample IV, first-stage diagnostics,
//!   and marginal associations on individual-level data.
//! - [`select`]: LD clumping, relevance filtering, validity voting, maximum
//!   cliques, and the resampling-based robust confidence interval.
//! - [`alice`]: the structural simulation model and Monte-Carlo bias
//!   experiments.
//!
//! Everything randomized takes an explicit seed and fans out through one
//! documented seed-splitting rule ([`stats::derive_seed`]), so results are
//! reproducible regardless of thread scheduling.

pub mod alice;
pub mod error;
pub mod estimand;
pub mod individual;
pub mod popgen;
pub mod population;
pub mod rational;
pub mod select;
pub mod stats;
pub mod summary;
pub mod types;

pub use error::{MrError, Result};
pub use types::{
    AliceConfig, Design, DiagValue, EstimateResult, IndividualDataset, InstrumentDistribution,
    Method, SnpRecord, SummaryDataset,
};
