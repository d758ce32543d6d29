//! Extremal-function block kernels: sampling one atom of the point measure
//! conditioned to pass exactly through the block observations and to stay
//! strictly below the remaining observations.

use maxcond_core::atoms::{AtomFunction, AtomOrigin};
use maxcond_core::{Partition, SplitRng};
use nalgebra::{DMatrix, DVector};

use crate::error::{KernelError, Result};
use crate::posterior::ConditionalLaw;

#[derive(Clone, Debug)]
pub(crate) struct DiscreteRay {
    pub ray: usize,
    pub weight: f64,
    pub scale: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct RegularBlock {
    /// Observation positions belonging to the block.
    pub block_pos: Vec<usize>,
    pub log_y0: f64,
    /// Non-block grid sites in sampling order; the first `n_constrained` are
    /// the complement conditioning sites.
    pub sampled_sites: Vec<usize>,
    pub n_constrained: usize,
    /// Observed values bounding the constrained sites (strictly).
    pub y_constraint: Vec<f64>,
    /// Conditional Gaussian of the log ratios given the block observations.
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub factor: DMatrix<f64>,
    /// Probability of the box constraint under the conditional Gaussian.
    pub accept_prob: f64,
}

#[derive(Clone, Debug)]
pub(crate) enum BlockKernel {
    Discrete {
        block_pos: Vec<usize>,
        rays: Vec<DiscreteRay>,
        total: f64,
    },
    Regular(Box<RegularBlock>),
}

impl ConditionalLaw {
    /// Deterministic values the extremal block atoms can take at `site` under
    /// partitions with positive mass: the point masses of the conditional law
    /// of the field there. Empty for regular-density models (their conditional
    /// laws are continuous off the conditioning sites).
    pub fn deterministic_values_at(&self, site: usize) -> Vec<f64> {
        let mut out = Vec::new();
        let ids = self.observations().site_ids();
        let y = self.observations().values();
        for (idx, &pi) in self.pi().iter().enumerate() {
            if pi <= 0.0 {
                continue;
            }
            let Ok(kernels) = self.kernels_for(idx) else {
                continue;
            };
            for k in kernels {
                if let BlockKernel::Discrete {
                    block_pos, rays, ..
                } = k
                {
                    match block_pos.iter().find(|&&p| ids[p] == site) {
                        Some(&p) => out.push(y[p]),
                        None => {
                            let atoms = self.model().atoms().expect("discrete model");
                            for r in rays {
                                out.push(r.scale * atoms[r.ray].values[site]);
                            }
                        }
                    }
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    /// Draw the extremal function of block `j` of `tau`: an atom equal to the
    /// observed values on the block sites (bitwise) and strictly below the
    /// observations elsewhere.
    pub fn sample_extremal_block(
        &self,
        tau: &Partition,
        j: usize,
        rng: &mut SplitRng,
    ) -> Result<AtomFunction> {
        let idx = self.partition_index(tau).ok_or_else(|| {
            KernelError::InvalidQuery("partition does not belong to this observation size".into())
        })?;
        self.sample_block_by_index(idx, j, rng)
    }

    pub(crate) fn sample_block_by_index(
        &self,
        partition_idx: usize,
        j: usize,
        rng: &mut SplitRng,
    ) -> Result<AtomFunction> {
        let kernels = self.kernels_for(partition_idx)?;
        let kernel = kernels
            .get(j)
            .ok_or_else(|| KernelError::InvalidQuery(format!("block index {j} out of range")))?;
        match kernel {
            BlockKernel::Discrete {
                block_pos,
                rays,
                total,
            } => Ok(self.sample_discrete_block(block_pos, rays, *total, rng)),
            BlockKernel::Regular(rb) => self.sample_regular_block(rb, rng),
        }
    }

    fn sample_discrete_block(
        &self,
        block_pos: &[usize],
        rays: &[DiscreteRay],
        total: f64,
        rng: &mut SplitRng,
    ) -> AtomFunction {
        debug_assert!(!rays.is_empty());
        let mut u = rng.next_f64() * total;
        let mut chosen = &rays[rays.len() - 1];
        for ray in rays {
            u -= ray.weight;
            if u < 0.0 {
                chosen = ray;
                break;
            }
        }
        let spec = &self.model().atoms().expect("discrete model")[chosen.ray];
        let mut values: Vec<f64> = spec.values.iter().map(|&f| chosen.scale * f).collect();
        // exact assignment on the block sites
        let ids = self.observations().site_ids();
        let y = self.observations().values();
        for &pos in block_pos {
            values[ids[pos]] = y[pos];
        }
        AtomFunction::new(values, chosen.scale, AtomOrigin::ExtremalDraw)
            .expect("block atom is positive at its block sites")
    }

    /// Rejection sampling from the unconstrained conditional kernel; the
    /// acceptance test runs in value space so accepted atoms are strictly
    /// below the foreign observations after rounding, never just in log space.
    fn sample_regular_block(&self, rb: &RegularBlock, rng: &mut SplitRng) -> Result<AtomFunction> {
        let floor = self.opts().rejection_floor;
        if rb.accept_prob < floor {
            return Err(KernelError::AcceptanceTooLow {
                estimate: rb.accept_prob,
                floor,
            });
        }
        let attempts = ((60.0 / rb.accept_prob.max(floor)).ceil() as usize).clamp(1_000, 5_000_000);
        let grid_len = self.model().grid().len();
        let dim = rb.sampled_sites.len();
        let ids = self.observations().site_ids();
        let y = self.observations().values();
        let mut values = vec![0.0f64; grid_len];
        for _ in 0..attempts {
            let xi = DVector::from_iterator(dim, (0..dim).map(|_| rng.normal()));
            let u = &rb.mean + &rb.factor * xi;
            let mut ok = true;
            for (pos, &site) in rb.sampled_sites.iter().enumerate() {
                let v = (rb.log_y0 + u[pos]).exp();
                if pos < rb.n_constrained && v >= rb.y_constraint[pos] {
                    ok = false;
                    break;
                }
                values[site] = v;
            }
            if !ok {
                continue;
            }
            for &pos in &rb.block_pos {
                values[ids[pos]] = y[pos];
            }
            return Ok(
                AtomFunction::new(values, rb.log_y0.exp(), AtomOrigin::ExtremalDraw)
                    .expect("block atom is positive"),
            );
        }
        Err(KernelError::AcceptanceTooLow {
            estimate: rb.accept_prob,
            floor,
        })
    }
}
