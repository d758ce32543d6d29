use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maxcond_cli::config::{read_cdf_queries, read_observations, RunConfig};
use maxcond_cli::validate::{run_validation, ValidateOpts};
use maxcond_cli::{commands, CliError};

/// Exact and Monte Carlo conditional distributions of max-stable and
/// max-infinitely-divisible random fields on a finite site grid.
#[derive(Parser)]
#[command(name = "maxcond", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Model specification file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// RNG seed; mandatory, there are no wall-clock defaults.
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (replicate-level parallelism; outputs do not depend on
    /// the thread count).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Relative half-width used by band-based tooling.
    #[arg(long, default_value_t = 0.02)]
    band: f64,
    /// Relative tolerance passed to numeric routines.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate unconditional fields (optionally dumping the point-measure
    /// decomposition).
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of replicates.
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Dump per-atom rows with extremal flags.
        #[arg(long)]
        dump_atoms: bool,
        /// Comma-separated site ids defining the decomposition set
        /// (default: all sites).
        #[arg(long)]
        k_sites: Option<String>,
    },
    /// Hitting-scenario posterior table for an observation file.
    Posterior {
        #[command(flatten)]
        common: CommonArgs,
        /// Observation CSV (`site_id,value`).
        #[arg(long)]
        obs: PathBuf,
    },
    /// Conditional samples through the three-step sampler.
    Condition {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        obs: PathBuf,
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
    /// Conditional CDF evaluations at query points.
    Cdf {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        obs: PathBuf,
        /// Query CSV (`query_id,<coords...>,z`).
        #[arg(long)]
        points: PathBuf,
    },
    /// Run the validation suite against the shipped toy configurations.
    Validate {
        /// RNG seed; mandatory.
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        threads: usize,
        /// Primary oracle band half-width.
        #[arg(long, default_value_t = 0.02)]
        band: f64,
        /// Reduced Monte Carlo sizes (smoke runs and determinism checks).
        #[arg(long)]
        quick: bool,
    },
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            common,
            n,
            dump_atoms,
            k_sites,
        } => {
            let cfg = load(&common, n)?;
            let k_sites = match k_sites {
                Some(spec) => Some(parse_site_list(&spec)?),
                None => None,
            };
            commands::cmd_simulate(&cfg, k_sites, dump_atoms)
        }
        Command::Posterior { common, obs } => {
            let cfg = load(&common, 0)?;
            let observations = read_observations(&obs, cfg.model.grid())?;
            commands::cmd_posterior(&cfg, &observations)
        }
        Command::Condition { common, obs, n } => {
            let cfg = load(&common, n)?;
            let observations = read_observations(&obs, cfg.model.grid())?;
            commands::cmd_condition(&cfg, &observations)
        }
        Command::Cdf {
            common,
            obs,
            points,
        } => {
            let cfg = load(&common, 0)?;
            let observations = read_observations(&obs, cfg.model.grid())?;
            let queries = read_cdf_queries(&points, cfg.model.grid())?;
            commands::cmd_cdf(&cfg, &observations, &queries)
        }
        Command::Validate {
            seed,
            out,
            threads,
            band,
            quick,
        } => {
            let opts = ValidateOpts {
                seed,
                threads,
                quick,
                band,
            };
            let (_reports, passed) = run_validation(&opts, &out)?;
            if passed {
                Ok(())
            } else {
                Err(CliError::Config("__validation_failed__".into()))
            }
        }
    }
}

fn load(common: &CommonArgs, n: usize) -> Result<RunConfig, CliError> {
    RunConfig::load(
        &common.config,
        common.seed,
        n,
        common.out.clone(),
        common.threads,
        common.band,
        common.tol,
    )
}

fn parse_site_list(spec: &str) -> Result<Vec<usize>, CliError> {
    spec.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("bad site id {tok:?} in --k-sites")))
        })
        .collect()
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if format!("{e}").contains("__validation_failed__") {
                eprintln!("validation failed");
                ExitCode::from(1)
            } else {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        }
    }
}
