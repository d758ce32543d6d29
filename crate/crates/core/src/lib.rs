//! Core building blocks for conditional simulation of max-stable and
//! max-infinitely-divisible random fields on a finite site grid.
//!
//! A max-i.d. field `eta` observed on a grid is represented through a Poisson
//! point measure `Phi` on the space of nonnegative functions (here: vectors on
//! the grid) with intensity given by the exponent measure `mu` of the model:
//!
//! ```text
//! eta(t) = max { phi(t) : phi atom of Phi },      P(eta(t) < x) = exp(-mu_t([x, oo)))
//! ```
//!
//! This crate provides the grid and observation types, the three shipped
//! exponent-measure models (max-linear, bounded moving maxima, log-Gaussian),
//! truncated and exact simulation of `Phi`, the extremal/sub-extremal
//! decomposition of a realization, set-partition combinatorics for hitting
//! scenarios, and a counter-based splittable RNG so every sampler is
//! reproducible from a `(seed, stream)` pair.

// `!(x > 0)`-style checks are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atoms;
pub mod error;
pub mod gauss;
pub mod grid;
pub mod model;
pub mod partition;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use atoms::{AtomFunction, AtomOrigin, PointMeasureRealization};
pub use error::{CoreError, Result};
pub use grid::{Grid, ObservationSet, Site};
pub use model::{Model, ModelKind, SpectralAtom};
pub use partition::{
    bell_number, enumerate_partitions, partition_from_assignment, scenario_from_realization,
    HittingScenario, Partition,
};
pub use rng::SplitRng;
pub use simulate::{decompose, simulate_unconditional, Decomposition, SimOpts};
