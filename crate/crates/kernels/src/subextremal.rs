//! The sub-extremal part of the conditional law: a Poisson measure with the
//! model's intensity thinned by `{f(t) < y}`. Thinning happens in value space,
//! so kept atoms are strictly below the observations at every conditioning
//! site even after rounding.

use maxcond_core::atoms::{AtomFunction, AtomOrigin, PointMeasureRealization};
use maxcond_core::model::Model;
use maxcond_core::simulate::{truncation_miss_bound, SimOpts};
use maxcond_core::{CoreError, ObservationSet, SplitRng};

use crate::error::Result;
use crate::posterior::ConditionalLaw;

/// Draw one realization of the thinned sub-extremal Poisson measure.
pub fn sample_subextremal(
    law: &ConditionalLaw,
    rng: &mut SplitRng,
) -> Result<PointMeasureRealization> {
    thinned_realization(law.model(), law.observations(), rng, &law.opts().sim, None)
}

/// Thinned Poisson realization; `floor`, when given, is a pointwise lower
/// bound on the final conditional field (the extremal blocks), which sharpens
/// the stopping rules without changing the law of the kept atoms.
pub(crate) fn thinned_realization(
    model: &Model,
    obs: &ObservationSet,
    rng: &mut SplitRng,
    sim: &SimOpts,
    floor: Option<&[f64]>,
) -> Result<PointMeasureRealization> {
    match model {
        Model::MaxLinear(_) => thinned_discrete(model, obs, rng, sim),
        Model::MovingMax(_) => thinned_bounded(model, obs, rng, sim, floor),
        Model::LogGaussian(_) => thinned_truncated(model, obs, rng, sim, floor),
    }
}

fn keeps(atom_values: &[f64], obs: &ObservationSet) -> bool {
    obs.site_ids()
        .iter()
        .zip(obs.values())
        .all(|(&s, &y)| atom_values[s] < y)
}

/// Per ray, the thinned process is the restriction of the radial Poisson
/// process to scales below `min_i y_i / f_j(t_i)`; its top atom is always
/// stored so the thinned field is exact, deeper atoms down to the storage
/// threshold.
fn thinned_discrete(
    model: &Model,
    obs: &ObservationSet,
    rng: &mut SplitRng,
    sim: &SimOpts,
) -> Result<PointMeasureRealization> {
    let rays = model.atoms().expect("discrete model");
    let mut atoms = Vec::new();
    for ray in rays {
        let sup = ray.sup();
        let mut r_max = f64::INFINITY;
        for (&s, &y) in obs.site_ids().iter().zip(obs.values()) {
            if ray.values[s] > 0.0 {
                r_max = r_max.min(y / ray.values[s]);
            }
        }
        // arrivals beyond w / r_max land strictly inside the constraint
        let mut arrival = if r_max.is_finite() {
            ray.weight / r_max
        } else {
            0.0
        };
        let mut top = true;
        loop {
            arrival += rng.exp1();
            let r = ray.weight / arrival;
            if !top && r * sup <= sim.atom_threshold {
                break;
            }
            let values: Vec<f64> = ray.values.iter().map(|&f| r * f).collect();
            // rounding can push a value onto the boundary; thinning is strict
            if keeps(&values, obs) {
                atoms.push(AtomFunction::new(values, r, AtomOrigin::SubextremalDraw)?);
            }
            if top && r * sup <= sim.atom_threshold {
                break;
            }
            top = false;
            if atoms.len() > sim.atom_budget {
                return Err(CoreError::AtomBudget {
                    budget: sim.atom_budget,
                }
                .into());
            }
        }
    }
    Ok(PointMeasureRealization::exact(atoms, sim.atom_threshold))
}

fn thinned_bounded(
    model: &Model,
    obs: &ObservationSet,
    rng: &mut SplitRng,
    sim: &SimOpts,
    floor: Option<&[f64]>,
) -> Result<PointMeasureRealization> {
    let n = model.grid().len();
    let bound = model.spectral_bound().expect("bounded model");
    let mut partial: Vec<f64> = match floor {
        Some(f) => f.to_vec(),
        None => vec![0.0; n],
    };
    let mut atoms = Vec::new();
    let mut arrival = 0.0f64;
    let mut drawn = 0usize;
    loop {
        arrival += rng.exp1();
        let level = 1.0 / arrival;
        let low = partial.iter().cloned().fold(f64::INFINITY, f64::min);
        if low > 0.0 && level * bound < low {
            break;
        }
        drawn += 1;
        if drawn > sim.atom_budget {
            return Err(CoreError::AtomBudget {
                budget: sim.atom_budget,
            }
            .into());
        }
        let y = model.spectral_sample(rng);
        if y.iter().all(|&v| v == 0.0) {
            continue;
        }
        let values: Vec<f64> = y.iter().map(|&v| v * level).collect();
        if !keeps(&values, obs) {
            continue;
        }
        for (p, &v) in partial.iter_mut().zip(&values) {
            if v > *p {
                *p = v;
            }
        }
        atoms.push(AtomFunction::new(
            values,
            level,
            AtomOrigin::SubextremalDraw,
        )?);
    }
    Ok(PointMeasureRealization::exact(atoms, 0.0))
}

fn thinned_truncated(
    model: &Model,
    obs: &ObservationSet,
    rng: &mut SplitRng,
    sim: &SimOpts,
    floor: Option<&[f64]>,
) -> Result<PointMeasureRealization> {
    let lg = match model {
        Model::LogGaussian(lg) => lg,
        _ => unreachable!(),
    };
    let n = lg.grid().len();
    let mut log_partial: Vec<f64> = match floor {
        Some(f) => f
            .iter()
            .map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
            .collect(),
        None => vec![f64::NEG_INFINITY; n],
    };
    let mut buf = vec![0.0f64; n];
    let mut xi = vec![0.0f64; n];
    let mut atoms = Vec::new();
    let log_eps = sim.trunc_epsilon.ln();
    let mut arrival = 0.0f64;
    let mut drawn = 0usize;
    let stop_level;
    loop {
        arrival += rng.exp1();
        let log_level = -arrival.ln();
        let low = log_partial.iter().cloned().fold(f64::INFINITY, f64::min);
        if low > f64::NEG_INFINITY && log_level < log_eps + low {
            stop_level = log_level.exp();
            break;
        }
        drawn += 1;
        if drawn > sim.atom_budget {
            return Err(CoreError::AtomBudget {
                budget: sim.atom_budget,
            }
            .into());
        }
        lg.log_spectral_sample_into(rng, &mut xi, &mut buf);
        let values: Vec<f64> = buf.iter().map(|&lv| (lv + log_level).exp()).collect();
        if !keeps(&values, obs) {
            continue;
        }
        for (p, &lv) in log_partial.iter_mut().zip(&buf) {
            let l = lv + log_level;
            if l > *p {
                *p = l;
            }
        }
        atoms.push(AtomFunction::new(
            values,
            log_level.exp(),
            AtomOrigin::SubextremalDraw,
        )?);
    }
    let miss = truncation_miss_bound(lg, &log_partial, stop_level);
    Ok(PointMeasureRealization::truncated(atoms, 0.0, miss))
}
