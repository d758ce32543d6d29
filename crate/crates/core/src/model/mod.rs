//! Exponent-measure models.
//!
//! A model describes the exponent measure `mu` of a max-i.d. field on the grid
//! through its tail functionals, finite-dimensional densities or atoms, and a
//! spectral sampler. Three families ship:
//!
//! * max-linear: `eta(t) = max_j Z_j f_j(t)` with independent Frechet `Z_j`;
//!   `mu` lives on finitely many rays (discrete spectral measure),
//! * bounded moving maxima: a compactly supported kernel translated by a
//!   uniform shift, normalized to unit Frechet margins; bounded spectral
//!   functions make exact simulation possible,
//! * log-Gaussian (Brown-Resnick type): spectral functions
//!   `exp(W(t) - Var W(t) / 2)` for a centered Gaussian `W` derived from a
//!   semivariogram; the finite-dimensional margins of `mu` have explicit
//!   lognormal densities.
//!
//! All models are immutable after construction and safe to share across
//! threads. Samplers take an explicit RNG handle.

mod log_gaussian;
mod max_linear;
mod moving_max;
mod spec;

pub use log_gaussian::{LogGaussianModel, Variogram};
pub use max_linear::MaxLinearModel;
pub use moving_max::{Kernel, MovingMaxModel};
pub use spec::ModelSpec;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::Grid;
use crate::rng::SplitRng;

/// Structural class of a model's exponent measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// `mu` concentrated on finitely many rays `{r f_j : r > 0}`.
    DiscreteSpectral,
    /// Finite-dimensional margins of `mu` have Lebesgue densities.
    RegularDensity,
    /// Spectral functions uniformly bounded with compact support.
    BoundedMovingMax,
}

/// One ray of a discrete spectral measure: intensity `weight / r^2 dr` of
/// atoms `r * values`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralAtom {
    pub weight: f64,
    pub values: Vec<f64>,
}

impl SpectralAtom {
    pub fn sup(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

/// A concrete exponent-measure model on a grid.
#[derive(Clone, Debug)]
pub enum Model {
    MaxLinear(MaxLinearModel),
    MovingMax(MovingMaxModel),
    LogGaussian(LogGaussianModel),
}

impl Model {
    pub fn grid(&self) -> &Grid {
        match self {
            Model::MaxLinear(m) => m.grid(),
            Model::MovingMax(m) => m.grid(),
            Model::LogGaussian(m) => m.grid(),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::MaxLinear(_) => ModelKind::DiscreteSpectral,
            Model::MovingMax(_) => ModelKind::BoundedMovingMax,
            Model::LogGaussian(_) => ModelKind::RegularDensity,
        }
    }

    /// `mu({f : f(t) >= x})` for a single site, `x > 0`.
    pub fn marginal_tail(&self, site: usize, x: f64) -> f64 {
        debug_assert!(x > 0.0);
        match self {
            Model::MaxLinear(m) => m.marginal_tail(site, x),
            Model::MovingMax(m) => m.marginal_tail(site, x),
            Model::LogGaussian(m) => m.marginal_tail(site, x),
        }
    }

    /// `mu({f : f(s_i) >= x_i for some i})`. Repeated sites are merged with
    /// the minimum of their limits, so conditioning sets may overlap query
    /// sets. Coincides exactly with `marginal_tail` for a single site.
    pub fn joint_tail(&self, sites: &[usize], x: &[f64]) -> Result<f64> {
        if sites.len() != x.len() || sites.is_empty() {
            return Err(CoreError::InvalidObservation(
                "joint_tail: sites and limits must be nonempty and matched".into(),
            ));
        }
        if x.iter().any(|&v| !(v > 0.0)) {
            return Err(CoreError::InvalidObservation(
                "joint_tail: limits must be strictly positive".into(),
            ));
        }
        let (sites, x) = dedupe_min(sites, x);
        if sites.len() == 1 {
            return Ok(self.marginal_tail(sites[0], x[0]));
        }
        match self {
            Model::MaxLinear(m) => Ok(m.joint_tail(&sites, &x)),
            Model::MovingMax(m) => Ok(m.joint_tail(&sites, &x)),
            Model::LogGaussian(m) => m.joint_tail(&sites, &x),
        }
    }

    /// Density of `mu_s` at `z` for regular models.
    pub fn joint_density(&self, sites: &[usize], z: &[f64]) -> Result<f64> {
        match self {
            Model::LogGaussian(m) => m.joint_density(sites, z),
            _ => Err(CoreError::Unsupported(
                "joint_density requires a regular-density model".into(),
            )),
        }
    }

    /// Rays of the discrete spectral measure, if the model has them.
    pub fn atoms(&self) -> Option<&[SpectralAtom]> {
        match self {
            Model::MaxLinear(m) => Some(m.atoms()),
            _ => None,
        }
    }

    /// One draw of the spectral function `Y` on the full grid (`E[Y(t)] = 1`
    /// at every site for simple max-stable models).
    pub fn spectral_sample(&self, rng: &mut SplitRng) -> Vec<f64> {
        match self {
            Model::MaxLinear(m) => m.spectral_sample(rng),
            Model::MovingMax(m) => m.spectral_sample(rng),
            Model::LogGaussian(m) => m.spectral_sample(rng),
        }
    }

    /// Uniform upper bound on `sup_t Y(t)` when one exists.
    pub fn spectral_bound(&self) -> Option<f64> {
        match self {
            Model::MaxLinear(m) => Some(m.spectral_bound()),
            Model::MovingMax(m) => Some(m.spectral_bound()),
            Model::LogGaussian(_) => None,
        }
    }

    /// Total spectral weight `sum_j w_j f_j(t)` at a site (marginal Frechet
    /// scale); equals 1 everywhere for simple max-stable models.
    pub fn frechet_scale(&self, site: usize) -> f64 {
        self.marginal_tail(site, 1.0)
    }

    pub fn max_linear(
        grid: Grid,
        weights: Vec<f64>,
        profiles: Vec<Vec<f64>>,
        normalize: bool,
    ) -> Result<Self> {
        Ok(Model::MaxLinear(MaxLinearModel::new(
            grid, weights, profiles, normalize,
        )?))
    }

    pub fn moving_max(grid: Grid, kernel: Kernel, window: (f64, f64)) -> Result<Self> {
        Ok(Model::MovingMax(MovingMaxModel::new(grid, kernel, window)?))
    }

    /// Log-Gaussian model from a semivariogram. A variogram that is
    /// identically zero over the grid yields a perfectly dependent field; that
    /// degenerate case is returned as the equivalent single-ray discrete model
    /// (the regular-density formulas do not exist for it).
    pub fn log_gaussian(grid: Grid, vario: Variogram) -> Result<Self> {
        if LogGaussianModel::is_degenerate(&grid, &vario) {
            let n = grid.len();
            return Ok(Model::MaxLinear(MaxLinearModel::new(
                grid,
                vec![1.0],
                vec![vec![1.0; n]],
                false,
            )?));
        }
        Ok(Model::LogGaussian(LogGaussianModel::new(grid, vario)?))
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        spec.build()
    }

    pub fn from_spec_json(json: &str) -> Result<Self> {
        let spec: ModelSpec =
            serde_json::from_str(json).map_err(|e| CoreError::Spec(e.to_string()))?;
        spec.build()
    }
}

/// Merge repeated site ids, keeping the minimum limit for each.
fn dedupe_min(sites: &[usize], x: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut out_sites: Vec<usize> = Vec::with_capacity(sites.len());
    let mut out_x: Vec<f64> = Vec::with_capacity(x.len());
    for (&s, &v) in sites.iter().zip(x) {
        match out_sites.iter().position(|&t| t == s) {
            Some(p) => {
                if v < out_x[p] {
                    out_x[p] = v;
                }
            }
            None => {
                out_sites.push(s);
                out_x.push(v);
            }
        }
    }
    (out_sites, out_x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedupe_takes_minimum() {
        let (s, x) = dedupe_min(&[0, 1, 0], &[2.0, 3.0, 1.5]);
        assert_eq!(s, vec![0, 1]);
        assert_eq!(x, vec![1.5, 3.0]);
    }
}
