//! Rejection conditioning: unconditional simulation filtered to a band around
//! the target observation, with hitting-scenario labels read off each kept
//! realization.

use maxcond_core::model::Model;
use maxcond_core::simulate::{simulate_scenario, SimOpts};
use maxcond_core::{Partition, SplitRng};

use crate::band::BandSpec;
use crate::{OracleError, Result};

#[derive(Clone, Debug)]
pub struct AcceptedSample {
    /// Field values on the full grid.
    pub field: Vec<f64>,
    /// Hitting scenario over the conditioning sites.
    pub partition: Partition,
}

#[derive(Clone, Debug)]
pub struct RejectionReport {
    pub n_raw: usize,
    pub accepted: Vec<AcceptedSample>,
    pub acceptance_rate: f64,
}

impl RejectionReport {
    /// Restrict the accepted set to a narrower band over the same sites (the
    /// raw-sample count is unchanged, so nested bands come for free from one
    /// simulation run).
    pub fn filtered(&self, band: &BandSpec, k_sites: &[usize]) -> Result<RejectionReport> {
        let accepted: Vec<AcceptedSample> = self
            .accepted
            .iter()
            .filter(|s| {
                let vals: Vec<f64> = k_sites.iter().map(|&site| s.field[site]).collect();
                band.contains(&vals)
            })
            .cloned()
            .collect();
        if accepted.is_empty() {
            return Err(OracleError::ZeroAcceptance { n_raw: self.n_raw });
        }
        let acceptance_rate = accepted.len() as f64 / self.n_raw as f64;
        Ok(RejectionReport {
            n_raw: self.n_raw,
            accepted,
            acceptance_rate,
        })
    }

    /// Empirical frequency of each partition among the accepted samples,
    /// in the order of the provided list.
    pub fn scenario_frequencies(&self, partitions: &[Partition]) -> Vec<f64> {
        let n = self.accepted.len().max(1) as f64;
        partitions
            .iter()
            .map(|p| self.accepted.iter().filter(|s| &s.partition == p).count() as f64 / n)
            .collect()
    }

    /// Empirical CDF of the kept fields at one grid site.
    pub fn empirical_cdf_at(&self, site: usize, z: f64) -> f64 {
        let n = self.accepted.len().max(1) as f64;
        self.accepted.iter().filter(|s| s.field[site] < z).count() as f64 / n
    }

    /// Empirical quantiles of the kept fields at one site.
    pub fn quantiles_at(&self, site: usize, probs: &[f64]) -> Vec<f64> {
        let mut vals: Vec<f64> = self.accepted.iter().map(|s| s.field[site]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        probs
            .iter()
            .map(|&p| {
                let idx = ((vals.len() as f64 - 1.0) * p).round() as usize;
                vals[idx.min(vals.len() - 1)]
            })
            .collect()
    }
}

/// Simulate `n_raw` unconditional fields (replicate `i` always uses stream `i`
/// of `seed`, so the result is independent of the thread count) and keep those
/// whose values at `k_sites` fall inside the band.
pub fn reject_condition(
    model: &Model,
    k_sites: &[usize],
    band: &BandSpec,
    n_raw: usize,
    seed: u64,
    threads: usize,
    sim: &SimOpts,
) -> Result<RejectionReport> {
    if n_raw < 10_000 {
        return Err(OracleError::Invalid(format!(
            "rejection conditioning needs n_raw >= 10^4, got {n_raw}"
        )));
    }
    if k_sites.len() != band.len() {
        return Err(OracleError::Invalid(
            "band and site dimensions differ".into(),
        ));
    }
    model.grid().check_site_ids(k_sites)?;

    let threads = threads.max(1);
    let chunk = n_raw.div_ceil(threads);
    let mut per_thread: Vec<Vec<(usize, AcceptedSample)>> = Vec::new();
    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for t in 0..threads {
            let lo = t * chunk;
            let hi = ((t + 1) * chunk).min(n_raw);
            if lo >= hi {
                break;
            }
            handles.push(
                scope.spawn(move || -> Result<Vec<(usize, AcceptedSample)>> {
                    let mut kept = Vec::new();
                    let mut buf = Vec::with_capacity(k_sites.len());
                    for rep in lo..hi {
                        let mut rng = SplitRng::new(seed, rep as u64);
                        let sample = simulate_scenario(model, &mut rng, sim, k_sites)?;
                        buf.clear();
                        buf.extend(k_sites.iter().map(|&s| sample.field[s]));
                        if band.contains(&buf) {
                            kept.push((
                                rep,
                                AcceptedSample {
                                    field: sample.field,
                                    partition: sample.partition,
                                },
                            ));
                        }
                    }
                    Ok(kept)
                }),
            );
        }
        for h in handles {
            per_thread.push(h.join().expect("oracle worker panicked")?);
        }
        Ok(())
    })?;

    let mut all: Vec<(usize, AcceptedSample)> = per_thread.into_iter().flatten().collect();
    all.sort_by_key(|(rep, _)| *rep);
    let accepted: Vec<AcceptedSample> = all.into_iter().map(|(_, s)| s).collect();
    if accepted.is_empty() {
        return Err(OracleError::ZeroAcceptance { n_raw });
    }
    let acceptance_rate = accepted.len() as f64 / n_raw as f64;
    Ok(RejectionReport {
        n_raw,
        accepted,
        acceptance_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use maxcond_core::Grid;

    fn frechet_model() -> Model {
        let grid = Grid::line(0.0, 1.0, 2).unwrap();
        Model::max_linear(
            grid,
            vec![0.5, 0.5],
            vec![vec![1.0, 0.4], vec![1.0, 1.6]],
            false,
        )
        .unwrap()
    }

    #[test]
    fn unbounded_band_accepts_everything() {
        let model = frechet_model();
        let band = BandSpec::new(vec![1.0], f64::INFINITY).unwrap();
        let rep = reject_condition(&model, &[0], &band, 10_000, 1, 2, &SimOpts::default()).unwrap();
        assert_eq!(rep.accepted.len(), 10_000);
        assert_eq!(rep.acceptance_rate, 1.0);
    }

    #[test]
    fn acceptance_rate_matches_closed_form_frechet_probability() {
        // site 0 has Frechet scale w = 1: P(y_lo < eta < y_hi) known
        let model = frechet_model();
        let y = 1.5f64;
        let eps = 0.25f64;
        let band = BandSpec::new(vec![y], eps).unwrap();
        let n = 200_000;
        let rep = reject_condition(&model, &[0], &band, n, 7, 4, &SimOpts::default()).unwrap();
        let scale = model.marginal_tail(0, 1.0);
        let expect = (-scale / (y * (1.0 + eps))).exp() - (-scale / (y * (1.0 - eps))).exp();
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!(
            (rep.acceptance_rate - expect).abs() < 3.0 * se,
            "{} vs {expect}",
            rep.acceptance_rate
        );
        // rate times n_raw is exactly the accepted count
        assert_eq!(
            (rep.acceptance_rate * rep.n_raw as f64).round() as usize,
            rep.accepted.len()
        );
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let model = frechet_model();
        let band = BandSpec::new(vec![1.0, 1.0], 0.5).unwrap();
        let a =
            reject_condition(&model, &[0, 1], &band, 20_000, 3, 1, &SimOpts::default()).unwrap();
        let b =
            reject_condition(&model, &[0, 1], &band, 20_000, 3, 4, &SimOpts::default()).unwrap();
        assert_eq!(a.accepted.len(), b.accepted.len());
        for (x, y) in a.accepted.iter().zip(&b.accepted) {
            assert_eq!(x.field, y.field);
            assert_eq!(x.partition, y.partition);
        }
    }

    #[test]
    fn zero_acceptance_is_an_error() {
        let model = frechet_model();
        let band = BandSpec::new(vec![1e9, 1e-9], 1e-6).unwrap();
        let err = reject_condition(&model, &[0, 1], &band, 10_000, 1, 1, &SimOpts::default());
        assert!(matches!(err, Err(OracleError::ZeroAcceptance { .. })));
    }
}
