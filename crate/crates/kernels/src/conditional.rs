//! The three-step conditional sampler: draw a hitting scenario from the
//! posterior, draw one extremal function per block, draw the thinned
//! sub-extremal Poisson measure, and take the pointwise maximum. Every sample
//! satisfies `field[t_i] == y_i` bitwise at all conditioning sites.

use maxcond_core::atoms::{AtomFunction, PointMeasureRealization};
use maxcond_core::{Partition, SplitRng};

use crate::error::{KernelError, Result};
use crate::posterior::ConditionalLaw;
use crate::subextremal::thinned_realization;

/// Number of whole-triple redraws after a rejection-budget failure before
/// giving up; retrying the full triple (not just the failing block) keeps the
/// joint law intact.
const TRIPLE_RETRIES: usize = 4;

#[derive(Clone, Debug)]
pub struct ConditionalSample {
    pub field: Vec<f64>,
    pub partition: Partition,
    pub extremal_atoms: Vec<AtomFunction>,
    pub subextremal: PointMeasureRealization,
}

/// Draw `n` independent conditional samples.
pub fn sample_conditional(
    law: &ConditionalLaw,
    rng: &mut SplitRng,
    n: usize,
) -> Result<Vec<ConditionalSample>> {
    (0..n).map(|_| sample_one(law, rng)).collect()
}

/// Field values only.
pub fn sample_conditional_fields(
    law: &ConditionalLaw,
    rng: &mut SplitRng,
    n: usize,
) -> Result<Vec<Vec<f64>>> {
    Ok(sample_conditional(law, rng, n)?
        .into_iter()
        .map(|s| s.field)
        .collect())
}

fn sample_one(law: &ConditionalLaw, rng: &mut SplitRng) -> Result<ConditionalSample> {
    let mut last_err = None;
    for _ in 0..TRIPLE_RETRIES {
        match try_triple(law, rng) {
            Ok(sample) => return Ok(sample),
            Err(e @ KernelError::AcceptanceTooLow { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("loop ran"))
}

fn try_triple(law: &ConditionalLaw, rng: &mut SplitRng) -> Result<ConditionalSample> {
    let grid_len = law.model().grid().len();
    let idx = law.sample_partition(rng);
    let n_blocks = law.partitions()[idx].num_blocks();

    let mut extremal_atoms = Vec::with_capacity(n_blocks);
    let mut field = vec![0.0f64; grid_len];
    for j in 0..n_blocks {
        let atom = law.sample_block_by_index(idx, j, rng)?;
        for (f, &v) in field.iter_mut().zip(&atom.values) {
            if v > *f {
                *f = v;
            }
        }
        extremal_atoms.push(atom);
    }

    let subextremal = thinned_realization(
        law.model(),
        law.observations(),
        rng,
        &law.opts().sim,
        Some(&field),
    )?;
    for atom in &subextremal.atoms {
        for (f, &v) in field.iter_mut().zip(&atom.values) {
            if v > *f {
                *f = v;
            }
        }
    }

    debug_assert!(law
        .observations()
        .site_ids()
        .iter()
        .zip(law.observations().values())
        .all(|(&s, &y)| field[s].to_bits() == y.to_bits()));

    Ok(ConditionalSample {
        field,
        partition: law.partitions()[idx].clone(),
        extremal_atoms,
        subextremal,
    })
}
