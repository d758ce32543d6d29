//! Conditional CDFs: `P(eta(s) < z | eta(t) = y)`.
//!
//! The probability factorizes as
//!
//! ```text
//! exp(-mu({f(s) not< z, f(t) < y}))                    (sub-extremal atoms)
//!   * sum_tau pi(tau) prod_j P_j(extremal atom of block j stays below z at s)
//! ```
//!
//! and the sub-extremal exponent reduces to joint tails:
//! `mu({f(s) not< z, f(t) < y}) = mu_(t,s)(y, z) - mu_t(y)`, with repeated
//! sites merged at the minimum of their limits.

use maxcond_core::gauss::mvn_cdf as gauss_mvn_cdf;
use maxcond_core::model::{Model, ModelKind};
use maxcond_core::ObservationSet;
use nalgebra::DMatrix;

use crate::blocks::BlockKernel;
use crate::error::{KernelError, Result};
use crate::posterior::{scenario_posterior, ConditionalLaw, KernelOpts};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CdfEstimate {
    pub value: f64,
    /// Standard error of the quasi-Monte Carlo parts; zero for closed-form
    /// (discrete-spectral) evaluations.
    pub se: f64,
}

/// Convenience wrapper building the posterior first.
pub fn conditional_cdf(
    model: &Model,
    obs: &ObservationSet,
    sites: &[usize],
    z: &[f64],
    opts: &KernelOpts,
) -> Result<CdfEstimate> {
    scenario_posterior(model, obs, opts)?.conditional_cdf(sites, z)
}

impl ConditionalLaw {
    pub fn conditional_cdf(&self, sites: &[usize], z: &[f64]) -> Result<CdfEstimate> {
        if sites.is_empty() || sites.len() != z.len() {
            return Err(KernelError::InvalidQuery(
                "query sites and limits must be nonempty and matched".into(),
            ));
        }
        if z.iter()
            .any(|&v| !(v > 0.0) || !v.is_finite() && v != f64::INFINITY)
        {
            return Err(KernelError::InvalidQuery("limits must be positive".into()));
        }
        for &s in sites {
            if s >= self.model().grid().len() {
                return Err(KernelError::InvalidQuery(format!(
                    "site id {s} outside the grid"
                )));
            }
        }
        let obs = self.observations();

        // sub-extremal factor
        let mut all_sites: Vec<usize> = obs.site_ids().to_vec();
        all_sites.extend_from_slice(sites);
        let mut all_limits: Vec<f64> = obs.values().to_vec();
        all_limits.extend_from_slice(z);
        let joint = self.model().joint_tail(&all_sites, &all_limits)?;
        let t_only = self.model().joint_tail(obs.site_ids(), obs.values())?;
        let thin_factor = (-(joint - t_only)).exp();

        // extremal blocks, mixed over the posterior
        let mut total = 0.0;
        let mut var = 0.0;
        for (idx, &pi) in self.pi().iter().enumerate() {
            if pi <= 0.0 {
                continue;
            }
            let mut prod = 1.0;
            let mut rel_var = 0.0;
            for kernel in self.kernels_for(idx)? {
                let (ratio, se) = self.block_cdf_ratio(kernel, sites, z)?;
                if ratio <= 0.0 {
                    prod = 0.0;
                    break;
                }
                rel_var += (se / ratio) * (se / ratio);
                prod *= ratio;
            }
            total += pi * prod;
            var += (pi * prod) * (pi * prod) * rel_var;
        }
        let estimate = CdfEstimate {
            value: (thin_factor * total).clamp(0.0, 1.0),
            se: thin_factor * var.sqrt(),
        };
        if let Some(target) = self.opts().target_se {
            if estimate.se > target {
                return Err(KernelError::AccuracyNotReached {
                    requested: target,
                    achieved: estimate.se,
                });
            }
        }
        Ok(estimate)
    }

    /// `P(block atom < z at the query sites AND < y off-block) /
    ///  P(block atom < y off-block)`.
    fn block_cdf_ratio(
        &self,
        kernel: &BlockKernel,
        sites: &[usize],
        z: &[f64],
    ) -> Result<(f64, f64)> {
        let obs = self.observations();
        match kernel {
            BlockKernel::Discrete {
                block_pos,
                rays,
                total,
            } => {
                let ids = obs.site_ids();
                let y = obs.values();
                let mut num = 0.0;
                'rays: for ray in rays {
                    let spec = &self.model().atoms().expect("discrete")[ray.ray];
                    for (&s, &zi) in sites.iter().zip(z) {
                        // value the atom takes at the query site, with the
                        // exact block assignment honored
                        let v = match block_pos.iter().find(|&&p| ids[p] == s) {
                            Some(&p) => y[p],
                            None => ray.scale * spec.values[s],
                        };
                        if v >= zi {
                            continue 'rays;
                        }
                    }
                    num += ray.weight;
                }
                Ok((num / total, 0.0))
            }
            BlockKernel::Regular(rb) => {
                // deterministic part: query sites lying on the block itself
                let ids = obs.site_ids();
                let y = obs.values();
                let mut limits: Vec<f64> = rb
                    .y_constraint
                    .iter()
                    .map(|&yc| yc.ln() - rb.log_y0)
                    .collect();
                let mut idxs: Vec<usize> = (0..rb.n_constrained).collect();
                for (&s, &zi) in sites.iter().zip(z) {
                    if let Some(&p) = rb.block_pos.iter().find(|&&p| ids[p] == s) {
                        if y[p] >= zi {
                            return Ok((0.0, 0.0));
                        }
                        continue;
                    }
                    let pos = rb
                        .sampled_sites
                        .iter()
                        .position(|&ss| ss == s)
                        .expect("query site is on the grid");
                    let lim = zi.ln() - rb.log_y0;
                    match idxs.iter().position(|&i| i == pos) {
                        Some(at) => limits[at] = limits[at].min(lim),
                        None => {
                            idxs.push(pos);
                            limits.push(lim);
                        }
                    }
                }
                if idxs.is_empty() {
                    return Ok((1.0, 0.0));
                }
                let dim = idxs.len();
                let mean: Vec<f64> = idxs.iter().map(|&i| rb.mean[i]).collect();
                let cov = DMatrix::from_fn(dim, dim, |a, b| rb.cov[(idxs[a], idxs[b])]);
                let shifted: Vec<f64> = limits.iter().zip(&mean).map(|(&l, &m)| l - m).collect();
                let (num, num_se) = gauss_mvn_cdf(&shifted, &cov, &self.opts().mvn)?;
                let den = rb.accept_prob;
                if den <= 0.0 {
                    return Ok((0.0, 0.0));
                }
                Ok((num / den, num_se / den))
            }
        }
    }
}

/// Closed-form conditional CDF for single-point conditioning under a
/// discrete-spectral model, evaluated as a finite sum over the rays:
///
/// ```text
/// P(eta(s) < z | eta(t) = y)
///   = exp(- sum_j w_j (max_i f_j(s_i)/z_i - f_j(t)/y)^+ )
///     * sum_j w_j f_j(t) 1{max_i f_j(s_i)/z_i < f_j(t)/y} / sum_j w_j f_j(t)
/// ```
pub fn single_site_discrete_cdf(
    model: &Model,
    t_site: usize,
    y: f64,
    sites: &[usize],
    z: &[f64],
) -> Result<f64> {
    if model.kind() != ModelKind::DiscreteSpectral {
        return Err(KernelError::Unsupported(
            "closed-form single-site CDF requires a discrete-spectral model".into(),
        ));
    }
    if !(y > 0.0) || sites.len() != z.len() || sites.is_empty() {
        return Err(KernelError::InvalidQuery(
            "need y > 0 and matched query".into(),
        ));
    }
    let atoms = model.atoms().unwrap();
    let mut exponent = 0.0;
    let mut num = 0.0;
    let mut den = 0.0;
    for ray in atoms {
        let ft_y = ray.values[t_site] / y;
        let max_fs_z = sites
            .iter()
            .zip(z)
            .map(|(&s, &zi)| ray.values[s] / zi)
            .fold(0.0f64, f64::max);
        exponent += ray.weight * (max_fs_z - ft_y).max(0.0);
        den += ray.weight * ray.values[t_site];
        if max_fs_z < ft_y {
            num += ray.weight * ray.values[t_site];
        }
    }
    if den <= 0.0 {
        return Err(KernelError::InconsistentObservation);
    }
    Ok((-exponent).exp() * num / den)
}
