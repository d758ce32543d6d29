//! Unconditional simulation of the Poisson point measure and the field, plus
//! the extremal/sub-extremal decomposition over a set of sites.
//!
//! Simulation schemes by model kind:
//!
//! * discrete spectral (max-linear): each ray `{r f_j}` carries an independent
//!   Poisson process with intensity `w_j r^-2 dr`; its points are `w_j / A_i`
//!   for the arrival times `A_i` of a unit-rate Poisson process. The top atom
//!   of every ray is always stored, which makes the realization exact: atoms
//!   below the storage threshold are dominated by their ray's top atom
//!   everywhere, hence never extremal.
//! * bounded spectral (moving maxima): the series `max_i G_i Y_i` with
//!   `G_1 > G_2 > ...` the points of the `r^-2 dr` process is stopped once
//!   `G_(i+1) * sup Y < min_t` current partial maximum; the tail of the series
//!   provably cannot touch the field, so the realization is exact.
//! * unbounded spectral (log-Gaussian): the series is truncated at
//!   `G < eps * min_t` partial maximum. The realization is flagged inexact and
//!   carries an upper bound on the expected number of discarded atoms that
//!   could have mattered.

use crate::atoms::{AtomFunction, AtomOrigin, PointMeasureRealization};
use crate::error::{CoreError, Result};
use crate::model::{LogGaussianModel, Model};
use crate::partition::{partition_from_assignment, Partition};
use crate::rng::SplitRng;
use crate::stats::{ks_statistic, phi};

#[derive(Clone, Copy, Debug)]
pub struct SimOpts {
    /// Sup-norm storage cutoff for sub-top atoms of discrete rays.
    pub atom_threshold: f64,
    /// Radial truncation factor for unbounded spectral models: stop once the
    /// level drops below `trunc_epsilon * min` partial maximum.
    pub trunc_epsilon: f64,
    /// Hard cap on drawn atoms per realization.
    pub atom_budget: usize,
}

impl Default for SimOpts {
    fn default() -> Self {
        Self {
            atom_threshold: 0.05,
            trunc_epsilon: 1e-3,
            atom_budget: 1_000_000,
        }
    }
}

/// Simulate one realization of the point measure and the field it induces.
/// The field equals the pointwise maximum of the stored atoms (bitwise).
pub fn simulate_unconditional(
    model: &Model,
    rng: &mut SplitRng,
    opts: &SimOpts,
) -> Result<(PointMeasureRealization, Vec<f64>)> {
    let real = match model {
        Model::MaxLinear(_) => simulate_discrete(model, rng, opts)?,
        Model::MovingMax(_) => simulate_bounded_series(model, rng, opts)?,
        Model::LogGaussian(lg) => simulate_truncated_series(lg, rng, opts)?,
    };
    let field = real.field(model.grid().len());
    Ok((real, field))
}

fn simulate_discrete(
    model: &Model,
    rng: &mut SplitRng,
    opts: &SimOpts,
) -> Result<PointMeasureRealization> {
    let atoms_spec = model.atoms().expect("discrete model has atoms");
    let mut atoms = Vec::new();
    for ray in atoms_spec {
        let sup = ray.sup();
        let mut arrival = rng.exp1();
        let mut top = true;
        loop {
            let r = ray.weight / arrival;
            if !top && r * sup <= opts.atom_threshold {
                break;
            }
            let values: Vec<f64> = ray.values.iter().map(|&v| v * r).collect();
            atoms.push(AtomFunction::new(values, r, AtomOrigin::Simulated)?);
            if atoms.len() > opts.atom_budget {
                return Err(CoreError::AtomBudget {
                    budget: opts.atom_budget,
                });
            }
            arrival += rng.exp1();
            top = false;
        }
    }
    Ok(PointMeasureRealization::exact(atoms, opts.atom_threshold))
}

fn simulate_bounded_series(
    model: &Model,
    rng: &mut SplitRng,
    opts: &SimOpts,
) -> Result<PointMeasureRealization> {
    let n = model.grid().len();
    let bound = model.spectral_bound().expect("bounded model");
    let mut atoms: Vec<AtomFunction> = Vec::new();
    let mut partial = vec![0.0f64; n];
    let mut arrival = 0.0f64;
    let mut drawn = 0usize;
    loop {
        arrival += rng.exp1();
        let level = 1.0 / arrival;
        let floor = partial.iter().cloned().fold(f64::INFINITY, f64::min);
        if floor > 0.0 && level * bound < floor {
            break;
        }
        drawn += 1;
        if drawn > opts.atom_budget {
            return Err(CoreError::AtomBudget {
                budget: opts.atom_budget,
            });
        }
        let y = model.spectral_sample(rng);
        if y.iter().all(|&v| v == 0.0) {
            // the bump fell between grid sites; invisible on the grid
            continue;
        }
        let values: Vec<f64> = y.iter().map(|&v| v * level).collect();
        for (p, &v) in partial.iter_mut().zip(&values) {
            if v > *p {
                *p = v;
            }
        }
        atoms.push(AtomFunction::new(values, level, AtomOrigin::Simulated)?);
    }
    Ok(PointMeasureRealization::exact(atoms, 0.0))
}

fn simulate_truncated_series(
    lg: &LogGaussianModel,
    rng: &mut SplitRng,
    opts: &SimOpts,
) -> Result<PointMeasureRealization> {
    let n = lg.grid().len();
    let mut atoms: Vec<AtomFunction> = Vec::new();
    let mut log_partial = vec![f64::NEG_INFINITY; n];
    let mut buf = vec![0.0f64; n];
    let mut xi = vec![0.0f64; n];
    let log_eps = opts.trunc_epsilon.ln();
    let mut arrival = 0.0f64;
    let mut drawn = 0usize;
    let stop_level;
    loop {
        arrival += rng.exp1();
        let log_level = -arrival.ln();
        let floor = log_partial.iter().cloned().fold(f64::INFINITY, f64::min);
        if floor > f64::NEG_INFINITY && log_level < log_eps + floor {
            stop_level = log_level.exp();
            break;
        }
        drawn += 1;
        if drawn > opts.atom_budget {
            return Err(CoreError::AtomBudget {
                budget: opts.atom_budget,
            });
        }
        lg.log_spectral_sample_into(rng, &mut xi, &mut buf);
        let values: Vec<f64> = buf.iter().map(|&lv| (lv + log_level).exp()).collect();
        for (p, &lv) in log_partial.iter_mut().zip(&buf) {
            let l = lv + log_level;
            if l > *p {
                *p = l;
            }
        }
        atoms.push(AtomFunction::new(
            values,
            log_level.exp(),
            AtomOrigin::Simulated,
        )?);
    }
    let miss = truncation_miss_bound(lg, &log_partial, stop_level);
    Ok(PointMeasureRealization::truncated(atoms, 0.0, miss))
}

/// Expected number of atoms below `stop_level` that would exceed the field
/// `exp(log_field)` somewhere: `sum_t E[(Y(t)/m_t - 1/level)^+]` with
/// lognormal `Y(t)`; a union bound over sites.
pub fn truncation_miss_bound(lg: &LogGaussianModel, log_field: &[f64], stop_level: f64) -> f64 {
    let mut total = 0.0;
    for (i, &lm) in log_field.iter().enumerate() {
        let var = lg.sigma2(i);
        let log_c = lm - stop_level.ln();
        if var < 1e-300 {
            // Y(t) = 1 almost surely
            total += (((-lm).exp()) - stop_level.recip().min((-lm).exp())).max(0.0);
            continue;
        }
        let sd = var.sqrt();
        let upper = phi(-(log_c - 0.5 * var) / sd) * (-lm).exp()
            - phi(-(log_c + 0.5 * var) / sd) / stop_level;
        total += upper.max(0.0);
    }
    total
}

/// Split of a realization into the atoms touching the maximum somewhere on
/// `k_sites` and the rest.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub extremal: PointMeasureRealization,
    pub subextremal: PointMeasureRealization,
    pub k_sites: Vec<usize>,
    /// Inherited from the input realization; decompositions of truncated
    /// realizations are approximate.
    pub exact: bool,
}

/// Partition the atoms of `real` by whether they attain the running maximum at
/// some site of `k_sites`. The union of the two parts is the input (as a
/// multiset) and the extremal part reproduces the field on `k_sites` bitwise.
pub fn decompose(real: &PointMeasureRealization, k_sites: &[usize]) -> Decomposition {
    let max_at: Vec<f64> = k_sites
        .iter()
        .map(|&s| real.atoms.iter().map(|a| a.values[s]).fold(0.0, f64::max))
        .collect();
    let mut extremal = Vec::new();
    let mut subextremal = Vec::new();
    for atom in &real.atoms {
        let is_sub = k_sites
            .iter()
            .zip(&max_at)
            .all(|(&s, &m)| atom.values[s] < m);
        if is_sub {
            subextremal.push(atom.clone());
        } else {
            extremal.push(atom.clone());
        }
    }
    let mk = |atoms: Vec<AtomFunction>| PointMeasureRealization {
        atoms,
        truncation_threshold: real.truncation_threshold,
        exact: real.exact,
        miss_bound: real.miss_bound,
    };
    Decomposition {
        extremal: mk(extremal),
        subextremal: mk(subextremal),
        k_sites: k_sites.to_vec(),
        exact: real.exact,
    }
}

/// One streamed realization reduced to its field and the hitting scenario on
/// `k_sites`; nothing is stored per atom, which keeps large Monte Carlo runs
/// cheap.
#[derive(Clone, Debug)]
pub struct ScenarioSample {
    pub field: Vec<f64>,
    pub partition: Partition,
}

pub fn simulate_scenario(
    model: &Model,
    rng: &mut SplitRng,
    opts: &SimOpts,
    k_sites: &[usize],
) -> Result<ScenarioSample> {
    match model {
        Model::MaxLinear(ml) => {
            let n = ml.grid().len();
            let k_pos = k_position_map(n, k_sites);
            let mut field = vec![0.0f64; n];
            let mut arg = vec![(0u64, false); k_sites.len()];
            for (j, ray) in ml.atoms().iter().enumerate() {
                // only the top atom of each ray can be extremal anywhere
                let r = rng.frechet(ray.weight);
                update_stream(&mut field, &mut arg, &k_pos, j as u64, |s| {
                    r * ray.values[s]
                });
            }
            finish_scenario(field, arg, k_sites)
        }
        Model::MovingMax(_) => {
            let n = model.grid().len();
            let k_pos = k_position_map(n, k_sites);
            let bound = model.spectral_bound().unwrap();
            let mut field = vec![0.0f64; n];
            let mut arg = vec![(0u64, false); k_sites.len()];
            let mut arrival = 0.0f64;
            let mut drawn = 0u64;
            loop {
                arrival += rng.exp1();
                let level = 1.0 / arrival;
                let floor = field.iter().cloned().fold(f64::INFINITY, f64::min);
                if floor > 0.0 && level * bound < floor {
                    break;
                }
                if drawn as usize > opts.atom_budget {
                    return Err(CoreError::AtomBudget {
                        budget: opts.atom_budget,
                    });
                }
                let y = model.spectral_sample(rng);
                update_stream(&mut field, &mut arg, &k_pos, drawn, |s| level * y[s]);
                drawn += 1;
            }
            finish_scenario(field, arg, k_sites)
        }
        Model::LogGaussian(lg) => {
            let n = lg.grid().len();
            let k_pos = k_position_map(n, k_sites);
            let mut log_field = vec![f64::NEG_INFINITY; n];
            let mut arg = vec![(0u64, false); k_sites.len()];
            let mut buf = vec![0.0f64; n];
            let mut xi = vec![0.0f64; n];
            let log_eps = opts.trunc_epsilon.ln();
            let mut arrival = 0.0f64;
            let mut drawn = 0u64;
            loop {
                arrival += rng.exp1();
                let log_level = -arrival.ln();
                let floor = log_field.iter().cloned().fold(f64::INFINITY, f64::min);
                if floor > f64::NEG_INFINITY && log_level < log_eps + floor {
                    break;
                }
                if drawn as usize > opts.atom_budget {
                    return Err(CoreError::AtomBudget {
                        budget: opts.atom_budget,
                    });
                }
                lg.log_spectral_sample_into(rng, &mut xi, &mut buf);
                update_stream(&mut log_field, &mut arg, &k_pos, drawn, |s| {
                    log_level + buf[s]
                });
                drawn += 1;
            }
            let field = log_field.iter().map(|&l| l.exp()).collect();
            finish_scenario(field, arg, k_sites)
        }
    }
}

fn k_position_map(n: usize, k_sites: &[usize]) -> Vec<Option<usize>> {
    let mut map = vec![None; n];
    for (pos, &s) in k_sites.iter().enumerate() {
        map[s] = Some(pos);
    }
    map
}

#[inline]
fn update_stream(
    field: &mut [f64],
    arg: &mut [(u64, bool)],
    k_pos: &[Option<usize>],
    ordinal: u64,
    value_at: impl Fn(usize) -> f64,
) {
    for (s, f) in field.iter_mut().enumerate() {
        let v = value_at(s);
        if v > *f {
            *f = v;
            if let Some(pos) = k_pos[s] {
                arg[pos] = (ordinal, false);
            }
        } else if v == *f && v > f64::NEG_INFINITY && v != 0.0 {
            if let Some(pos) = k_pos[s] {
                arg[pos].1 = true;
            }
        }
    }
}

fn finish_scenario(
    field: Vec<f64>,
    arg: Vec<(u64, bool)>,
    k_sites: &[usize],
) -> Result<ScenarioSample> {
    for (pos, &(_, tie)) in arg.iter().enumerate() {
        if tie {
            return Err(CoreError::TieDetected {
                site: pos,
                tol: 0.0,
            });
        }
        if !(field[k_sites[pos]] > 0.0) {
            return Err(CoreError::InvalidObservation(format!(
                "field vanished at conditioning site {}",
                k_sites[pos]
            )));
        }
    }
    let labels: Vec<u64> = arg.iter().map(|&(o, _)| o).collect();
    Ok(ScenarioSample {
        field,
        partition: partition_from_assignment(&labels)?,
    })
}

/// Simulate a max-i.d. field whose exponent measure is a finite sum of point
/// masses `m_i` at fixed functions `g_i`: each atom appears a Poisson(`m_i`)
/// number of times and the field may be identically zero (with probability
/// `exp(-sum_i m_i)`).
pub fn simulate_finite_atoms(
    masses: &[(f64, Vec<f64>)],
    rng: &mut SplitRng,
) -> Result<PointMeasureRealization> {
    let mut atoms = Vec::new();
    for (mass, g) in masses {
        if !(*mass >= 0.0) {
            return Err(CoreError::InvalidModel(
                "point masses must be nonnegative".into(),
            ));
        }
        let count = rng.poisson(*mass);
        for _ in 0..count {
            atoms.push(AtomFunction::new(g.clone(), 1.0, AtomOrigin::Simulated)?);
        }
    }
    Ok(PointMeasureRealization::exact(atoms, 0.0))
}

/// Report of the single-site extremal-function check.
#[derive(Clone, Debug)]
pub struct ExtremalCheckReport {
    pub runs: usize,
    /// KS statistic of the extremal atom's value at the site against the
    /// field's own marginal CDF `exp(-mu_t(x))`.
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    /// Full grid values of the extremal atom, one row per run.
    pub extremal_atoms: Vec<Vec<f64>>,
}

/// Simulate `runs` realizations, decompose each at the single site, and check
/// that exactly one atom is extremal there; errors on the first violation.
/// Returns the observed extremal functions for distributional checks.
pub fn extremal_function_distribution_check(
    model: &Model,
    site: usize,
    runs: usize,
    rng: &mut SplitRng,
    opts: &SimOpts,
) -> Result<ExtremalCheckReport> {
    let mut values_at_site = Vec::with_capacity(runs);
    let mut extremal_atoms = Vec::with_capacity(runs);
    for _ in 0..runs {
        let (real, _field) = simulate_unconditional(model, rng, opts)?;
        let dec = decompose(&real, &[site]);
        if dec.extremal.len() != 1 {
            return Err(CoreError::InvariantViolation(format!(
                "{} atoms extremal at site {site}; expected exactly one",
                dec.extremal.len()
            )));
        }
        let atom = &dec.extremal.atoms[0];
        values_at_site.push(atom.values[site]);
        extremal_atoms.push(atom.values.clone());
    }
    let scale = model.frechet_scale(site);
    let ks = ks_statistic(&mut values_at_site, |x| {
        if x <= 0.0 {
            0.0
        } else {
            (-scale / x).exp()
        }
    });
    Ok(ExtremalCheckReport {
        runs,
        ks_statistic: ks,
        ks_p_value: crate::stats::ks_p_value(ks, runs),
        extremal_atoms,
    })
}
