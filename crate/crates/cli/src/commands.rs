//! Command implementations. Replicate `i` of a run with seed `s` always uses
//! RNG stream `i`, so outputs are byte-identical for a fixed seed regardless
//! of the thread count; rows are emitted in replicate order.

use maxcond_core::simulate::{decompose, simulate_unconditional, SimOpts};
use maxcond_core::{ObservationSet, SplitRng};
use maxcond_kernels::{sample_conditional, scenario_posterior, ConditionalLaw, KernelOpts};

use crate::config::{CdfQuery, RunConfig};
use crate::output::{fmt_f64, OutFile};
use crate::Result;

/// Run `f` for each replicate index on `threads` workers, returning results
/// in replicate order.
fn parallel_replicates<T: Send>(
    n: usize,
    threads: usize,
    f: impl Fn(usize) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let threads = threads.max(1).min(n.max(1));
    if threads <= 1 {
        return (0..n).map(&f).collect();
    }
    let chunk = n.div_ceil(threads);
    let mut chunks: Vec<Vec<T>> = Vec::new();
    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for t in 0..threads {
            let lo = t * chunk;
            let hi = ((t + 1) * chunk).min(n);
            if lo >= hi {
                break;
            }
            let f = &f;
            handles.push(scope.spawn(move || (lo..hi).map(f).collect::<Result<Vec<T>>>()));
        }
        for h in handles {
            chunks.push(h.join().expect("worker panicked")?);
        }
        Ok(())
    })?;
    Ok(chunks.into_iter().flatten().collect())
}

fn site_coords(cfg: &RunConfig, site: usize) -> (f64, f64) {
    let c = cfg.model.grid().coords(site);
    (c[0], if c.len() > 1 { c[1] } else { 0.0 })
}

/// Unconditional simulation: `fields.csv` with one row per (replicate, site);
/// with `dump_atoms`, `atoms.csv` adds per-atom rows with the extremal flag of
/// the decomposition over `k_sites`.
pub fn cmd_simulate(cfg: &RunConfig, k_sites: Option<Vec<usize>>, dump_atoms: bool) -> Result<()> {
    let sim = SimOpts::default();
    let k_sites = k_sites.unwrap_or_else(|| (0..cfg.model.grid().len()).collect::<Vec<_>>());
    cfg.model.grid().check_site_ids(&k_sites)?;

    let results = parallel_replicates(cfg.replicates, cfg.threads, |rep| {
        let mut rng = SplitRng::new(cfg.seed, rep as u64);
        let (real, field) = simulate_unconditional(&cfg.model, &mut rng, &sim)?;
        Ok((real, field))
    })?;

    let mut fields = OutFile::create(&cfg.out_dir, "fields.csv", cfg.config_hash, cfg.seed)?;
    fields.line("replicate,site_id,x,y,value")?;
    for (rep, (_, field)) in results.iter().enumerate() {
        for (site, v) in field.iter().enumerate() {
            let (x, y) = site_coords(cfg, site);
            fields.line(&format!(
                "{rep},{site},{},{},{}",
                fmt_f64(x),
                fmt_f64(y),
                fmt_f64(*v)
            ))?;
        }
    }
    fields.finish()?;

    if dump_atoms {
        let mut atoms = OutFile::create(&cfg.out_dir, "atoms.csv", cfg.config_hash, cfg.seed)?;
        atoms.line("replicate,atom_id,site_id,x,y,value,extremal_flag")?;
        for (rep, (real, _)) in results.iter().enumerate() {
            let dec = decompose(real, &k_sites);
            let rows = dec
                .extremal
                .atoms
                .iter()
                .map(|a| (a, 1u8))
                .chain(dec.subextremal.atoms.iter().map(|a| (a, 0u8)));
            for (atom_id, (atom, flag)) in rows.enumerate() {
                for (site, v) in atom.values.iter().enumerate() {
                    let (x, y) = site_coords(cfg, site);
                    atoms.line(&format!(
                        "{rep},{atom_id},{site},{},{},{},{flag}",
                        fmt_f64(x),
                        fmt_f64(y),
                        fmt_f64(*v)
                    ))?;
                }
            }
        }
        atoms.finish()?;
    }
    Ok(())
}

/// Hitting-scenario posterior table for one observation set.
pub fn cmd_posterior(cfg: &RunConfig, obs: &ObservationSet) -> Result<()> {
    let opts = kernel_opts(cfg);
    let law = scenario_posterior(&cfg.model, obs, &opts)?;
    let mut out = OutFile::create(&cfg.out_dir, "posterior.csv", cfg.config_hash, cfg.seed)?;
    out.line("rgs_string,log_weight,pi")?;
    for ((p, &lw), &pi) in law.partitions().iter().zip(law.log_weights()).zip(law.pi()) {
        out.line(&format!(
            "{},{},{}",
            p.rgs_string(),
            fmt_f64(lw),
            fmt_f64(pi)
        ))?;
    }
    out.finish()
}

/// Conditional samples via the three-step sampler.
pub fn cmd_condition(cfg: &RunConfig, obs: &ObservationSet) -> Result<()> {
    let opts = kernel_opts(cfg);
    let law = scenario_posterior(&cfg.model, obs, &opts)?;
    let samples = parallel_replicates(cfg.replicates, cfg.threads, |rep| {
        let mut rng = SplitRng::new(cfg.seed, rep as u64);
        Ok(sample_conditional(&law, &mut rng, 1)?
            .pop()
            .expect("one sample"))
    })?;

    let mut fields = OutFile::create(&cfg.out_dir, "conditional.csv", cfg.config_hash, cfg.seed)?;
    fields.line("replicate,site_id,x,y,value,partition_rgs")?;
    for (rep, s) in samples.iter().enumerate() {
        let rgs = s.partition.rgs_string();
        for (site, v) in s.field.iter().enumerate() {
            let (x, y) = site_coords(cfg, site);
            fields.line(&format!(
                "{rep},{site},{},{},{},{rgs}",
                fmt_f64(x),
                fmt_f64(y),
                fmt_f64(*v)
            ))?;
        }
    }
    fields.finish()
}

/// Conditional CDF evaluations at query points.
pub fn cmd_cdf(cfg: &RunConfig, obs: &ObservationSet, queries: &[CdfQuery]) -> Result<()> {
    let opts = kernel_opts(cfg);
    let law = scenario_posterior(&cfg.model, obs, &opts)?;
    let mut out = OutFile::create(&cfg.out_dir, "cdf.csv", cfg.config_hash, cfg.seed)?;
    out.line("query_id,value,standard_error")?;
    for q in queries {
        let est = law.conditional_cdf(&q.sites, &q.z)?;
        out.line(&format!(
            "{},{},{}",
            q.id,
            fmt_f64(est.value),
            fmt_f64(est.se)
        ))?;
    }
    out.finish()
}

pub fn kernel_opts(cfg: &RunConfig) -> KernelOpts {
    let mut opts = KernelOpts::default();
    opts.mvn.seed = cfg.seed;
    opts
}

/// Shared helper for tools built on the conditional law.
pub fn build_law(cfg: &RunConfig, obs: &ObservationSet) -> Result<ConditionalLaw> {
    Ok(scenario_posterior(&cfg.model, obs, &kernel_opts(cfg))?)
}
