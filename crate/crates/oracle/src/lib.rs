//! Independent brute-force ground truth for conditional laws.
//!
//! Conditioning on exact values is approximated by rejection: simulate the
//! field unconditionally, keep realizations whose values at the conditioning
//! sites fall in a multiplicative band around the target, and read hitting
//! scenarios off the kept realizations. Statistical test helpers turn the
//! comparisons into pass/fail reports.
//!
//! This crate deliberately depends only on the model definitions and the
//! unconditional simulation path of `maxcond-core`; none of the conditional
//! machinery in `maxcond-kernels` is visible here (the dependency graph
//! enforces it), so agreement between the two is evidence, not tautology.

// `!(x > 0)`-style checks are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod band;
pub mod reject;
pub mod report;

pub use band::BandSpec;
pub use reject::{reject_condition, AcceptedSample, RejectionReport};
pub use report::{
    chi2_independence_test, chi2_test, ks_test, ks_test_two_sample, se_distance_test, TestReport,
};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, OracleError>;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Core(#[from] maxcond_core::CoreError),

    #[error(
        "no sample fell in the conditioning band (rate < 1/{n_raw}); widen the band or raise n_raw"
    )]
    ZeroAcceptance { n_raw: usize },

    #[error("invalid oracle request: {0}")]
    Invalid(String),
}
