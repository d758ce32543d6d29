//! Conditional distributions of max-i.d. fields given exact observations.
//!
//! Observing `eta(t_i) = y_i` at finitely many sites splits the Poisson point
//! measure behind the field into finitely many extremal atoms (those attaining
//! the maximum at one or more conditioning sites) and the sub-extremal rest.
//! The conditional law factorizes accordingly:
//!
//! 1. the hitting scenario — the partition of the conditioning sites by shared
//!    extremal atom — has an explicit posterior `pi` over set partitions,
//! 2. given the scenario, the extremal atoms are independent draws of the
//!    exponent measure conditioned to pass through the block observations and
//!    to stay below `y` elsewhere,
//! 3. independently, the sub-extremal atoms form a Poisson measure with the
//!    original intensity thinned by `{f(t) < y}`.
//!
//! This crate computes those ingredients for discrete-spectral and
//! regular-density models, assembles conditional CDFs, and implements the
//! three-step conditional sampler built on the factorization. Fields returned
//! by the sampler satisfy the conditioning constraints bitwise.

// `!(x > 0)`-style checks are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cdf;
pub mod conditional;
pub mod error;
pub mod mvn;
pub mod posterior;
pub mod subextremal;

mod blocks;

pub use cdf::{conditional_cdf, single_site_discrete_cdf, CdfEstimate};
pub use conditional::{sample_conditional, sample_conditional_fields, ConditionalSample};
pub use error::{KernelError, Result};
pub use mvn::{mvn_cdf, MvnProblem};
pub use posterior::{
    observation_density, partition_log_weight, scenario_posterior, ConditionalLaw, KernelOpts,
};
pub use subextremal::sample_subextremal;
