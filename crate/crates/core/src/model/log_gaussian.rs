//! Log-Gaussian (Brown-Resnick type) max-stable model.
//!
//! Spectral functions are `Y(t) = exp(W(t) - Var W(t) / 2)` for a centered
//! Gaussian vector `W` built from a semivariogram `gamma`:
//! `E[(W(s) - W(t))^2] = 2 gamma(s - t)`, anchored so `W` vanishes at the
//! coordinate origin. The max-stable law only depends on the pairwise
//! increment variances `G_ij = 2 gamma(s_i - s_j)`, never on the anchor.
//!
//! Everything here follows from one fact: under the exponent measure tilted by
//! the atom value at a base site, the log ratios `U_j = log(f(s_j) / f(base))`
//! are jointly Gaussian with mean `-G_{j,base} / 2` and covariance
//! `(G_{j,base} + G_{k,base} - G_{jk}) / 2`. That gives closed forms for the
//! finite-dimensional densities `h_s`, the tail functional, and the size-biased
//! kernels used elsewhere, each involving a normal CDF of one dimension less
//! than the number of sites.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::gauss::{self, MvnOpts};
use crate::grid::Grid;
use crate::rng::SplitRng;
use crate::stats::phi;

/// Densities and tails involve normal CDFs of dimension (sites - 1); costs and
/// accuracy degrade quickly, so larger requests are rejected outright.
pub const MAX_DENSITY_SITES: usize = 6;
pub const MAX_TAIL_SITES: usize = 7;

/// Semivariogram families, conditionally negative definite by construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Variogram {
    /// `gamma(h) = scale * |h|^exponent`, `0 < exponent <= 2`.
    Power { scale: f64, exponent: f64 },
}

impl Variogram {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Variogram::Power { scale, exponent } => {
                if !(scale >= 0.0) || !scale.is_finite() {
                    return Err(CoreError::InvalidModel(
                        "variogram scale must be >= 0".into(),
                    ));
                }
                if !(exponent > 0.0 && exponent <= 2.0) {
                    return Err(CoreError::InvalidModel(
                        "variogram exponent must lie in (0, 2]".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, h: f64) -> f64 {
        match *self {
            Variogram::Power { scale, exponent } => {
                if h == 0.0 {
                    0.0
                } else {
                    scale * h.abs().powf(exponent)
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct LogGaussianModel {
    grid: Grid,
    vario: Variogram,
    /// `G_ij = 2 gamma(|s_i - s_j|)`: variance of `W(s_i) - W(s_j)`.
    increment_var: DMatrix<f64>,
    /// PSD factor of the anchored covariance, for sampling `W`.
    cov_factor: DMatrix<f64>,
    /// Row-major copy of the factor for the allocation-free sampling path.
    factor_rows: Vec<f64>,
    /// `Var W(s_i)` under the origin anchor.
    sigma2: Vec<f64>,
    mvn_opts: MvnOpts,
}

impl LogGaussianModel {
    pub fn new(grid: Grid, vario: Variogram) -> Result<Self> {
        vario.validate()?;
        let n = grid.len();
        let norm = |i: usize| -> f64 { grid.coords(i).iter().map(|c| c * c).sum::<f64>().sqrt() };
        let cov = DMatrix::from_fn(n, n, |i, j| {
            vario.eval(norm(i)) + vario.eval(norm(j)) - vario.eval(grid.distance(i, j))
        });
        let cov_factor = gauss::psd_factor(&cov)?;
        let sigma2 = (0..n).map(|i| cov[(i, i)]).collect();
        let increment_var = DMatrix::from_fn(n, n, |i, j| 2.0 * vario.eval(grid.distance(i, j)));
        let mut factor_rows = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                factor_rows[i * n + j] = cov_factor[(i, j)];
            }
        }
        Ok(Self {
            grid,
            vario,
            increment_var,
            cov_factor,
            factor_rows,
            sigma2,
            mvn_opts: MvnOpts::default(),
        })
    }

    /// True when the variogram carries no dependence structure over this grid
    /// (perfectly dependent field; the regular-density formulas degenerate).
    pub fn is_degenerate(grid: &Grid, vario: &Variogram) -> bool {
        let n = grid.len();
        let mut max_g = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                max_g = max_g.max(2.0 * vario.eval(grid.distance(i, j)));
            }
        }
        max_g < 1e-12
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn variogram(&self) -> &Variogram {
        &self.vario
    }

    /// Variance of `W(s_i) - W(s_j)`.
    pub fn increment_var(&self, i: usize, j: usize) -> f64 {
        self.increment_var[(i, j)]
    }

    /// Variance of `W(s_i)` under the origin anchor (the log-variance of the
    /// spectral function at the site).
    pub fn sigma2(&self, i: usize) -> f64 {
        self.sigma2[i]
    }

    pub fn marginal_tail(&self, _site: usize, x: f64) -> f64 {
        1.0 / x
    }

    /// Law of the log ratios `U_j = log(f(s_j) / f(base))` under the exponent
    /// measure size-biased by the value at `base`: Gaussian with mean
    /// `-G_{j,base}/2` and covariance `(G_{j,base} + G_{k,base} - G_{jk}) / 2`.
    pub fn log_ratio_law(&self, base: usize, others: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
        let g = &self.increment_var;
        let mean =
            DVector::from_iterator(others.len(), others.iter().map(|&o| -0.5 * g[(o, base)]));
        let cov = DMatrix::from_fn(others.len(), others.len(), |a, b| {
            0.5 * (g[(others[a], base)] + g[(others[b], base)] - g[(others[a], others[b])])
        });
        (mean, cov)
    }

    /// Tail functional `mu({f : f(s_i) >= x_i for some i})`; callers must have
    /// deduplicated sites. Dimension 2 is exact; higher dimensions use the QMC
    /// normal CDF with the model's fixed seed.
    pub fn joint_tail(&self, sites: &[usize], x: &[f64]) -> Result<f64> {
        let l = sites.len();
        if l > MAX_TAIL_SITES {
            return Err(CoreError::DimensionCapacity {
                what: "log-Gaussian joint tail".into(),
                dim: l,
                cap: MAX_TAIL_SITES,
            });
        }
        debug_assert!(l >= 2);
        if l == 2 {
            let g = self.increment_var[(sites[0], sites[1])];
            let a = g.sqrt();
            let r = (x[1] / x[0]).ln();
            return Ok(phi(r / a + 0.5 * a) / x[0] + phi(-r / a + 0.5 * a) / x[1]);
        }
        let mut total = 0.0;
        for i in 0..l {
            let others: Vec<usize> = (0..l).filter(|&j| j != i).map(|j| sites[j]).collect();
            let (mean, cov) = self.log_ratio_law(sites[i], &others);
            let limits: Vec<f64> = (0..l)
                .filter(|&j| j != i)
                .enumerate()
                .map(|(pos, j)| (x[j] / x[i]).ln() - mean[pos])
                .collect();
            let (p, _se) = gauss::mvn_cdf(&limits, &cov, &self.mvn_opts)?;
            total += p / x[i];
        }
        Ok(total)
    }

    /// Density `h_s(z)` of the finite-dimensional margin `mu_s` at `z > 0`.
    pub fn joint_density(&self, sites: &[usize], z: &[f64]) -> Result<f64> {
        let l = sites.len();
        if l == 0 || z.len() != l {
            return Err(CoreError::InvalidObservation(
                "joint_density: empty or mismatched".into(),
            ));
        }
        for a in 0..l {
            for b in (a + 1)..l {
                if sites[a] == sites[b] {
                    return Err(CoreError::InvalidObservation(
                        "joint_density: repeated sites".into(),
                    ));
                }
            }
        }
        if l > MAX_DENSITY_SITES {
            return Err(CoreError::DimensionCapacity {
                what: "log-Gaussian joint density".into(),
                dim: l,
                cap: MAX_DENSITY_SITES,
            });
        }
        match self.log_density(sites, z)? {
            Some(ld) => Ok(ld.exp()),
            None => Ok(0.0),
        }
    }

    /// `log h_s(z)`, or `None` when the density vanishes (some `z_i <= 0`).
    pub fn log_density(&self, sites: &[usize], z: &[f64]) -> Result<Option<f64>> {
        if z.iter().any(|&v| v <= 0.0) {
            return Ok(None);
        }
        let base = sites[0];
        let z0 = z[0];
        if sites.len() == 1 {
            return Ok(Some(-2.0 * z0.ln()));
        }
        let others = &sites[1..];
        let (mean, cov) = self.log_ratio_law(base, others);
        let u = DVector::from_iterator(others.len(), z[1..].iter().map(|&zi| (zi / z0).ln()));
        let chol = nalgebra::Cholesky::new(cov).ok_or_else(|| {
            CoreError::NotPsd("degenerate log-ratio covariance in joint density".into())
        })?;
        let diff = u - mean;
        let solved = chol.solve(&diff);
        let quad = diff.dot(&solved);
        let logdet: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        let p = others.len() as f64;
        let log_normal_density = -0.5 * (quad + logdet + p * (2.0 * std::f64::consts::PI).ln());
        let log_jacobian: f64 = -2.0 * z0.ln() - z[1..].iter().map(|zi| zi.ln()).sum::<f64>();
        Ok(Some(log_normal_density + log_jacobian))
    }

    pub fn spectral_sample(&self, rng: &mut SplitRng) -> Vec<f64> {
        let n = self.grid.len();
        let xi = DVector::from_iterator(n, (0..n).map(|_| rng.normal()));
        let w = &self.cov_factor * xi;
        (0..n)
            .map(|i| (w[i] - 0.5 * self.sigma2[i]).exp())
            .collect()
    }

    /// Log of a spectral sample written into `out`, using `xi` as normal
    /// scratch space; allocation-free so large simulation loops stay cheap.
    pub fn log_spectral_sample_into(&self, rng: &mut SplitRng, xi: &mut [f64], out: &mut [f64]) {
        let n = self.grid.len();
        debug_assert_eq!(out.len(), n);
        debug_assert_eq!(xi.len(), n);
        for x in xi.iter_mut() {
            *x = rng.normal();
        }
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.factor_rows[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for (l, x) in row.iter().zip(xi.iter()) {
                acc += l * x;
            }
            *o = acc - 0.5 * self.sigma2[i];
        }
    }

    pub fn mvn_opts(&self) -> &MvnOpts {
        &self.mvn_opts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Model;

    fn unit_vario() -> Variogram {
        Variogram::Power {
            scale: 1.0,
            exponent: 1.0,
        }
    }

    fn two_site_model() -> LogGaussianModel {
        let grid = Grid::line(0.0, 1.0, 2).unwrap();
        LogGaussianModel::new(grid, unit_vario()).unwrap()
    }

    #[test]
    fn single_site_density_is_inverse_square() {
        let m = two_site_model();
        assert!((m.joint_density(&[0], &[2.0]).unwrap() - 0.25).abs() < 1e-14);
        assert!((m.joint_density(&[1], &[0.5]).unwrap() - 4.0).abs() < 1e-14);
        assert!((m.marginal_tail(0, 4.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn bivariate_tail_matches_huesler_reiss_form() {
        // distance 1, semivariogram |h|: increment variance G = 2,
        // V(1,1) = 2 Phi(sqrt(G)/2)
        let m = two_site_model();
        let v = m.joint_tail(&[0, 1], &[1.0, 1.0]).unwrap();
        let expect = 2.0 * phi((2.0f64).sqrt() / 2.0);
        assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
        // tails dominate marginals and never exceed their sum
        assert!((1.0..=2.0).contains(&v));
    }

    #[test]
    fn density_is_base_invariant() {
        let grid = Grid::line(0.0, 2.0, 3).unwrap();
        let m = LogGaussianModel::new(grid, unit_vario()).unwrap();
        let z = [0.8, 1.7, 0.6];
        let a = m.joint_density(&[0, 1, 2], &z).unwrap();
        let b = m.joint_density(&[2, 0, 1], &[0.6, 0.8, 1.7]).unwrap();
        assert!((a - b).abs() < 1e-12 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn density_vanishes_at_nonpositive_values() {
        let m = two_site_model();
        assert_eq!(m.joint_density(&[0, 1], &[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_variogram_becomes_single_ray_model() {
        let grid = Grid::line(0.0, 1.0, 3).unwrap();
        let m = Model::log_gaussian(
            grid,
            Variogram::Power {
                scale: 0.0,
                exponent: 1.0,
            },
        )
        .unwrap();
        assert!(matches!(m, Model::MaxLinear(_)));
        // perfect dependence: joint tail is 1 / min(x)
        let v = m.joint_tail(&[0, 1, 2], &[2.0, 0.5, 1.0]).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_sample_has_unit_mean() {
        let grid = Grid::line(0.0, 2.0, 3).unwrap();
        let m = LogGaussianModel::new(grid, unit_vario()).unwrap();
        let mut rng = SplitRng::new(17, 0);
        let n = 200_000;
        let mut mean = vec![0.0; 3];
        for _ in 0..n {
            let y = m.spectral_sample(&mut rng);
            for (acc, v) in mean.iter_mut().zip(y) {
                *acc += v;
            }
        }
        for acc in &mut mean {
            *acc /= n as f64;
        }
        for (i, v) in mean.iter().enumerate() {
            // lognormal with log-sd up to 2 at the far site: generous band
            assert!((v - 1.0).abs() < 0.05, "site {i}: mean {v}");
        }
    }

    #[test]
    fn capacity_limits_enforced() {
        let grid = Grid::line(0.0, 7.0, 8).unwrap();
        let m = LogGaussianModel::new(grid, unit_vario()).unwrap();
        let sites: Vec<usize> = (0..8).collect();
        let z = vec![1.0; 8];
        assert!(m.joint_density(&sites, &z).is_err());
        assert!(m.joint_tail(&sites, &z).is_err());
        assert!(m.joint_density(&[0, 0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn variogram_validation() {
        assert!(Variogram::Power {
            scale: 1.0,
            exponent: 2.5
        }
        .validate()
        .is_err());
        assert!(Variogram::Power {
            scale: -1.0,
            exponent: 1.0
        }
        .validate()
        .is_err());
        assert!(Variogram::Power {
            scale: 0.5,
            exponent: 2.0
        }
        .validate()
        .is_ok());
    }
}
