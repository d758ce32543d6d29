//! Multivariate normal CDF problems with explicit accuracy contracts, backed
//! by the quasi-Monte Carlo integrator.

use maxcond_core::gauss::{self, MvnOpts, MAX_MVN_DIM};
use maxcond_core::CoreError;
use nalgebra::DMatrix;

use crate::error::{KernelError, Result};

/// `P(X < upper)` for `X ~ N(mean, cov)`, dimension at most 6.
#[derive(Clone, Debug)]
pub struct MvnProblem {
    mean: Vec<f64>,
    cov: DMatrix<f64>,
    upper: Vec<f64>,
    /// Requested relative accuracy of the estimate (standard error / value).
    rel_accuracy: Option<f64>,
}

impl MvnProblem {
    pub fn new(
        mean: Vec<f64>,
        cov: DMatrix<f64>,
        upper: Vec<f64>,
        rel_accuracy: Option<f64>,
    ) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || upper.len() != dim || cov.nrows() != dim || cov.ncols() != dim {
            return Err(KernelError::InvalidQuery(
                "mvn problem dimensions mismatch".into(),
            ));
        }
        if dim > MAX_MVN_DIM {
            return Err(KernelError::Core(CoreError::DimensionCapacity {
                what: "multivariate normal CDF".into(),
                dim,
                cap: MAX_MVN_DIM,
            }));
        }
        for i in 0..dim {
            for j in 0..dim {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * cov[(i, i)].abs().max(1.0) {
                    return Err(KernelError::InvalidQuery("covariance not symmetric".into()));
                }
            }
        }
        Ok(Self {
            mean,
            cov,
            upper,
            rel_accuracy,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Estimate with standard error; deterministic for a fixed seed in `opts`.
    /// The point budget doubles (up to 16x) until the requested relative
    /// accuracy is met; failing that, the achieved accuracy is reported in the
    /// error.
    pub fn solve(&self, opts: &MvnOpts) -> Result<(f64, f64)> {
        let shifted: Vec<f64> = self
            .upper
            .iter()
            .zip(&self.mean)
            .map(|(&u, &m)| u - m)
            .collect();
        let mut opts = *opts;
        for _ in 0..5 {
            let (p, se) = gauss::mvn_cdf(&shifted, &self.cov, &opts)?;
            let achieved = if p > 0.0 { se / p } else { se };
            match self.rel_accuracy {
                Some(target) if achieved > target => {
                    opts.points *= 2;
                }
                _ => return Ok((p, se)),
            }
        }
        let (p, se) = gauss::mvn_cdf(&shifted, &self.cov, &opts)?;
        let achieved = if p > 0.0 { se / p } else { se };
        match self.rel_accuracy {
            Some(target) if achieved > target => Err(KernelError::AccuracyNotReached {
                requested: target,
                achieved,
            }),
            _ => Ok((p, se)),
        }
    }
}

/// One-shot solve with default-style options.
pub fn mvn_cdf(problem: &MvnProblem, opts: &MvnOpts) -> Result<(f64, f64)> {
    problem.solve(opts)
}
