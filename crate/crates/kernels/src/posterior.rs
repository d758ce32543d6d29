//! Hitting-scenario posterior.
//!
//! For an observation `eta(t) = y` and a partition `tau` of the conditioning
//! indices, the unnormalized weight of `tau` is the product over blocks `b` of
//!
//! ```text
//! I_b = integral over { z < y_(b^c) } of the exponent-measure mass of atoms
//!       passing exactly through y_b and staying below y off the block
//! ```
//!
//! The common factor `exp(-mu_t(y))` cancels in the posterior and is applied
//! only where the observation density itself is needed. Per model kind:
//!
//! * regular density: `I_b = h_b(y_b) * P(U_c < log(y_c / y_base))` where `U`
//!   is the conditional Gaussian of log ratios given the block observations;
//!   all weights are densities with respect to the same Lebesgue measure and
//!   the posterior is their normalization.
//! * discrete spectral: a block is compatible with ray `j` when `y_b` is
//!   proportional to `f_j` on the block (relative tolerance) and the scaled
//!   atom stays strictly below `y` off the block; its weight is
//!   `sum_j w_j f_j(t_b0) / y_b0`. Weights of partitions with different block
//!   counts live on strata of different dimension: an observation lying
//!   exactly on a multi-site ray is explained by the coarser partition with
//!   conditional probability one. The posterior therefore charges only the
//!   compatible partitions with the fewest blocks; finer ones keep their
//!   finite reported weight but zero posterior mass. This matches the
//!   vanishing-bandwidth limit of conditioning on a band around `y`.

use maxcond_core::error::CoreError;
use maxcond_core::gauss::{condition_gaussian, mvn_cdf, psd_factor, MvnOpts};
use maxcond_core::model::{Model, ModelKind};
use maxcond_core::partition::enumerate_partitions;
use maxcond_core::simulate::SimOpts;
use maxcond_core::stats::log_sum_exp;
use maxcond_core::{ObservationSet, Partition, SplitRng};
use nalgebra::DMatrix;

use crate::blocks::{BlockKernel, DiscreteRay, RegularBlock};
use crate::error::{KernelError, Result};

/// Maximum number of conditioning sites for regular-density models (each
/// partition weight involves a normal CDF of dimension up to `k - 1`).
pub const MAX_REGULAR_K: usize = 6;

#[derive(Clone, Debug)]
pub struct KernelOpts {
    pub mvn: MvnOpts,
    /// Relative tolerance for testing whether a block observation lies on a
    /// spectral ray.
    pub pattern_rtol: f64,
    /// Error out when a block's rejection acceptance probability falls below
    /// this floor.
    pub rejection_floor: f64,
    /// When set, conditional-CDF evaluations whose combined standard error
    /// exceeds this target fail with the achieved accuracy.
    pub target_se: Option<f64>,
    /// Options for the sub-extremal (thinned) simulation.
    pub sim: SimOpts,
}

impl Default for KernelOpts {
    fn default() -> Self {
        Self {
            mvn: MvnOpts::default(),
            pattern_rtol: 1e-9,
            rejection_floor: 1e-6,
            target_se: None,
            sim: SimOpts::default(),
        }
    }
}

/// The assembled conditional law for one observation set: the partition
/// posterior plus per-block extremal kernels and the thinning constraint for
/// the sub-extremal measure. Immutable once built.
#[derive(Clone, Debug)]
pub struct ConditionalLaw {
    model: Model,
    obs: ObservationSet,
    partitions: Vec<Partition>,
    log_weights: Vec<f64>,
    pi: Vec<f64>,
    kernels: Vec<Option<Vec<BlockKernel>>>,
    opts: KernelOpts,
}

impl ConditionalLaw {
    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn observations(&self) -> &ObservationSet {
        &self.obs
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    /// Unnormalized log weights, aligned with `partitions()`; `-inf` marks
    /// incompatible partitions.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Normalized hitting-scenario posterior, aligned with `partitions()`.
    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn opts(&self) -> &KernelOpts {
        &self.opts
    }

    /// The thinning constraint defining the sub-extremal intensity
    /// `1{f(t) < y} mu(df)`.
    pub fn subextremal_constraint(&self) -> (&[usize], &[f64]) {
        (self.obs.site_ids(), self.obs.values())
    }

    /// Index of a partition equal to `tau`, if any.
    pub fn partition_index(&self, tau: &Partition) -> Option<usize> {
        self.partitions.iter().position(|p| p == tau)
    }

    /// Draw a partition index from the posterior.
    pub fn sample_partition(&self, rng: &mut SplitRng) -> usize {
        let mut u = rng.next_f64();
        for (i, &p) in self.pi.iter().enumerate() {
            u -= p;
            if u < 0.0 {
                return i;
            }
        }
        // numerical leftovers: last partition with positive mass
        self.pi
            .iter()
            .rposition(|&p| p > 0.0)
            .expect("posterior has positive mass")
    }

    pub(crate) fn kernels_for(&self, partition_idx: usize) -> Result<&[BlockKernel]> {
        self.kernels[partition_idx].as_deref().ok_or_else(|| {
            KernelError::InvalidQuery(format!(
                "partition {} carries no posterior mass",
                self.partitions[partition_idx].rgs_string()
            ))
        })
    }
}

/// Log of the unnormalized posterior weight of one partition; `-inf` when the
/// partition is incompatible with the observation. See the module docs for the
/// discrete-spectral stratum semantics.
pub fn partition_log_weight(
    model: &Model,
    obs: &ObservationSet,
    tau: &Partition,
    opts: &KernelOpts,
) -> Result<f64> {
    check_supported(model, obs)?;
    if tau.universe() != obs.len() {
        return Err(KernelError::InvalidQuery(
            "partition universe does not match the observation size".into(),
        ));
    }
    Ok(weigh_partition(model, obs, tau, opts)?.log_weight)
}

pub(crate) struct WeighedPartition {
    pub log_weight: f64,
}

fn check_supported(model: &Model, obs: &ObservationSet) -> Result<()> {
    match model.kind() {
        ModelKind::DiscreteSpectral => Ok(()),
        ModelKind::RegularDensity => {
            if obs.len() > MAX_REGULAR_K {
                Err(KernelError::Core(CoreError::DimensionCapacity {
                    what: "conditioning sites for a regular-density model".into(),
                    dim: obs.len(),
                    cap: MAX_REGULAR_K,
                }))
            } else {
                Ok(())
            }
        }
        ModelKind::BoundedMovingMax => Err(KernelError::Unsupported(
            "conditional laws require a discrete-spectral or regular-density model".into(),
        )),
    }
}

fn weigh_partition(
    model: &Model,
    obs: &ObservationSet,
    tau: &Partition,
    opts: &KernelOpts,
) -> Result<WeighedPartition> {
    let mut log_weight = 0.0;
    for j in 0..tau.num_blocks() {
        let lw = match model.kind() {
            ModelKind::DiscreteSpectral => discrete_block_weight(model, obs, tau, j, opts).0,
            ModelKind::RegularDensity => regular_block_log_weight(model, obs, tau, j, opts)?,
            ModelKind::BoundedMovingMax => unreachable!("checked in check_supported"),
        };
        if lw == f64::NEG_INFINITY {
            return Ok(WeighedPartition {
                log_weight: f64::NEG_INFINITY,
            });
        }
        log_weight += lw;
    }
    Ok(WeighedPartition { log_weight })
}

/// Log weight of one block of a discrete-spectral partition together with the
/// compatible rays (for sampling).
fn discrete_block_weight(
    model: &Model,
    obs: &ObservationSet,
    tau: &Partition,
    j: usize,
    opts: &KernelOpts,
) -> (f64, Vec<DiscreteRay>) {
    let atoms = model.atoms().expect("discrete model");
    let block = &tau.blocks()[j];
    let comp = tau.complement(j);
    let ids = obs.site_ids();
    let y = obs.values();
    let mut rays = Vec::new();
    let mut total = 0.0;
    'rays: for (ridx, ray) in atoms.iter().enumerate() {
        let f0 = ray.values[ids[block[0]]];
        if f0 <= 0.0 {
            continue;
        }
        let scale = y[block[0]] / f0;
        for &pos in &block[1..] {
            let f = ray.values[ids[pos]];
            if f <= 0.0 || (y[pos] - scale * f).abs() > opts.pattern_rtol * y[pos] {
                continue 'rays;
            }
        }
        for &pos in &comp {
            if scale * ray.values[ids[pos]] >= y[pos] {
                continue 'rays;
            }
        }
        let weight = ray.weight * f0 / y[block[0]];
        total += weight;
        rays.push(DiscreteRay {
            ray: ridx,
            weight,
            scale,
        });
    }
    if total <= 0.0 {
        (f64::NEG_INFINITY, rays)
    } else {
        (total.ln(), rays)
    }
}

/// Log weight of one block for a regular-density model:
/// `log h_b(y_b) + log P(U_c < log(y_c / y_base) | block)`.
fn regular_block_log_weight(
    model: &Model,
    obs: &ObservationSet,
    tau: &Partition,
    j: usize,
    opts: &KernelOpts,
) -> Result<f64> {
    let lg = match model {
        Model::LogGaussian(lg) => lg,
        _ => unreachable!("regular-density models are log-Gaussian"),
    };
    let ids = obs.site_ids();
    let y = obs.values();
    let block = &tau.blocks()[j];
    let comp = tau.complement(j);
    let sites_b: Vec<usize> = block.iter().map(|&p| ids[p]).collect();
    let y_b: Vec<f64> = block.iter().map(|&p| y[p]).collect();
    let log_h = lg
        .log_density(&sites_b, &y_b)?
        .expect("observed values are positive");
    if comp.is_empty() {
        return Ok(log_h);
    }
    let base = sites_b[0];
    let y0 = y_b[0];
    let others: Vec<usize> = sites_b[1..]
        .iter()
        .cloned()
        .chain(comp.iter().map(|&p| ids[p]))
        .collect();
    let (mean, cov) = lg.log_ratio_law(base, &others);
    let nb = sites_b.len() - 1;
    let obs_idx: Vec<usize> = (0..nb).collect();
    let obs_vals: Vec<f64> = y_b[1..].iter().map(|&v| (v / y0).ln()).collect();
    let rest_idx: Vec<usize> = (nb..others.len()).collect();
    let (cmean, ccov) = condition_gaussian(&mean, &cov, &obs_idx, &obs_vals, &rest_idx)?;
    let limits: Vec<f64> = comp
        .iter()
        .enumerate()
        .map(|(i, &pos)| (y[pos] / y0).ln() - cmean[i])
        .collect();
    let (p, _se) = mvn_cdf(&limits, &ccov, &opts.mvn)?;
    if p <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(log_h + p.ln())
}

/// Build the full conditional law: posterior over all partitions plus block
/// kernels for every partition with positive mass.
pub fn scenario_posterior(
    model: &Model,
    obs: &ObservationSet,
    opts: &KernelOpts,
) -> Result<ConditionalLaw> {
    check_supported(model, obs)?;
    model.grid().check_site_ids(obs.site_ids())?;
    let k = obs.len();
    let partitions = enumerate_partitions(k).map_err(KernelError::Core)?;
    let mut log_weights = Vec::with_capacity(partitions.len());
    for tau in &partitions {
        log_weights.push(weigh_partition(model, obs, tau, opts)?.log_weight);
    }

    // Discrete models: observations on a coarse stratum are explained by the
    // partition with the fewest blocks; finer compatible partitions carry no
    // mass in the vanishing-band limit.
    let mut selectable = vec![true; partitions.len()];
    if model.kind() == ModelKind::DiscreteSpectral {
        let min_blocks = partitions
            .iter()
            .zip(&log_weights)
            .filter(|(_, &lw)| lw > f64::NEG_INFINITY)
            .map(|(p, _)| p.num_blocks())
            .min();
        if let Some(min_blocks) = min_blocks {
            for (sel, p) in selectable.iter_mut().zip(&partitions) {
                *sel = p.num_blocks() == min_blocks;
            }
        }
    }

    let selected: Vec<f64> = log_weights
        .iter()
        .zip(&selectable)
        .map(|(&lw, &sel)| if sel { lw } else { f64::NEG_INFINITY })
        .collect();
    let norm = log_sum_exp(&selected);
    if norm == f64::NEG_INFINITY {
        return Err(KernelError::InconsistentObservation);
    }
    let pi: Vec<f64> = selected.iter().map(|&lw| (lw - norm).exp()).collect();

    let mut kernels = Vec::with_capacity(partitions.len());
    for (idx, tau) in partitions.iter().enumerate() {
        if pi[idx] > 0.0 {
            kernels.push(Some(build_kernels(model, obs, tau, opts)?));
        } else {
            kernels.push(None);
        }
    }

    Ok(ConditionalLaw {
        model: model.clone(),
        obs: obs.clone(),
        partitions,
        log_weights,
        pi,
        kernels,
        opts: opts.clone(),
    })
}

fn build_kernels(
    model: &Model,
    obs: &ObservationSet,
    tau: &Partition,
    opts: &KernelOpts,
) -> Result<Vec<BlockKernel>> {
    let mut out = Vec::with_capacity(tau.num_blocks());
    for j in 0..tau.num_blocks() {
        match model.kind() {
            ModelKind::DiscreteSpectral => {
                let (lw, rays) = discrete_block_weight(model, obs, tau, j, opts);
                debug_assert!(lw > f64::NEG_INFINITY);
                let total = rays.iter().map(|r| r.weight).sum();
                out.push(BlockKernel::Discrete {
                    block_pos: tau.blocks()[j].clone(),
                    rays,
                    total,
                });
            }
            ModelKind::RegularDensity => {
                out.push(BlockKernel::Regular(Box::new(build_regular_block(
                    model, obs, tau, j, opts,
                )?)));
            }
            ModelKind::BoundedMovingMax => unreachable!(),
        }
    }
    Ok(out)
}

/// Conditional Gaussian of the log ratios at every non-block grid site given
/// the block observations; the first `n_constrained` sampled sites are the
/// complement conditioning sites with their strict upper constraints.
fn build_regular_block(
    model: &Model,
    obs: &ObservationSet,
    tau: &Partition,
    j: usize,
    opts: &KernelOpts,
) -> Result<RegularBlock> {
    let lg = match model {
        Model::LogGaussian(lg) => lg,
        _ => unreachable!(),
    };
    let grid_len = model.grid().len();
    let ids = obs.site_ids();
    let y = obs.values();
    let block = &tau.blocks()[j];
    let comp = tau.complement(j);
    let sites_b: Vec<usize> = block.iter().map(|&p| ids[p]).collect();
    let base = sites_b[0];
    let y0 = y[block[0]];
    let comp_sites: Vec<usize> = comp.iter().map(|&p| ids[p]).collect();
    let rest_sites: Vec<usize> = (0..grid_len)
        .filter(|s| !sites_b.contains(s) && !comp_sites.contains(s))
        .collect();
    let sampled_sites: Vec<usize> = comp_sites.iter().cloned().chain(rest_sites).collect();

    let others: Vec<usize> = sites_b[1..]
        .iter()
        .cloned()
        .chain(sampled_sites.iter().cloned())
        .collect();
    let (mean, cov) = lg.log_ratio_law(base, &others);
    let nb = sites_b.len() - 1;
    let obs_idx: Vec<usize> = (0..nb).collect();
    let obs_vals: Vec<f64> = block[1..].iter().map(|&p| (y[p] / y0).ln()).collect();
    let rest_idx: Vec<usize> = (nb..others.len()).collect();
    let (cmean, ccov) = condition_gaussian(&mean, &cov, &obs_idx, &obs_vals, &rest_idx)?;

    let n_constrained = comp.len();
    let y_constraint: Vec<f64> = comp.iter().map(|&p| y[p]).collect();
    let accept_prob = if n_constrained == 0 {
        1.0
    } else {
        let limits: Vec<f64> = comp
            .iter()
            .enumerate()
            .map(|(i, &pos)| (y[pos] / y0).ln() - cmean[i])
            .collect();
        let sub = DMatrix::from_fn(n_constrained, n_constrained, |a, b| ccov[(a, b)]);
        mvn_cdf(&limits, &sub, &opts.mvn)?.0
    };

    let factor = psd_factor(&ccov)?;
    Ok(RegularBlock {
        block_pos: block.clone(),
        log_y0: y0.ln(),
        sampled_sites,
        n_constrained,
        y_constraint,
        mean: cmean,
        cov: ccov,
        factor,
        accept_prob,
    })
}

/// Density of the observation vector for regular models:
/// `exp(-mu_t(y)) * sum_tau prod_b I_b`.
pub fn observation_density(model: &Model, obs: &ObservationSet, opts: &KernelOpts) -> Result<f64> {
    if model.kind() != ModelKind::RegularDensity {
        return Err(KernelError::Unsupported(
            "the observation density requires a regular-density model".into(),
        ));
    }
    check_supported(model, obs)?;
    let partitions = enumerate_partitions(obs.len()).map_err(KernelError::Core)?;
    let mut lws = Vec::with_capacity(partitions.len());
    for tau in &partitions {
        lws.push(weigh_partition(model, obs, tau, opts)?.log_weight);
    }
    let log_sum = log_sum_exp(&lws);
    let tail = model.joint_tail(obs.site_ids(), obs.values())?;
    Ok((log_sum - tail).exp())
}
