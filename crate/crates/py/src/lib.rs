//! Python bindings: models, unconditional simulation, hitting-scenario
//! posteriors, conditional sampling, conditional CDFs, the rejection oracle
//! and the normal-CDF integrator.
//!
//! Everything is seeded explicitly; repeated calls with the same arguments
//! return identical results.

// `!(x > 0)`-style checks are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use maxcond_core::simulate::{simulate_unconditional, SimOpts};
use maxcond_core::{ObservationSet, SplitRng};
use maxcond_kernels::{
    sample_conditional, scenario_posterior, single_site_discrete_cdf, KernelOpts, MvnProblem,
};
use maxcond_oracle::{reject_condition, BandSpec};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// An exponent-measure model on a fixed site grid.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: Arc<maxcond_core::Model>,
}

impl PyModel {
    fn obs(&self, site_ids: Vec<usize>, values: Vec<f64>) -> PyResult<ObservationSet> {
        ObservationSet::new(self.inner.grid(), site_ids, values).map_err(value_err)
    }

    fn kernel_opts(&self, seed: u64) -> KernelOpts {
        let mut opts = KernelOpts::default();
        opts.mvn.seed = seed;
        opts
    }
}

#[pymethods]
impl PyModel {
    /// Build a model from its JSON specification (same schema as the CLI
    /// config files).
    #[staticmethod]
    fn from_json(spec: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(maxcond_core::Model::from_spec_json(spec).map_err(value_err)?),
        })
    }

    /// `"discrete_spectral"`, `"regular_density"` or `"bounded_moving_max"`.
    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.kind() {
            maxcond_core::ModelKind::DiscreteSpectral => "discrete_spectral",
            maxcond_core::ModelKind::RegularDensity => "regular_density",
            maxcond_core::ModelKind::BoundedMovingMax => "bounded_moving_max",
        }
    }

    /// Site coordinates, one row per site.
    #[getter]
    fn grid(&self) -> Vec<Vec<f64>> {
        self.inner
            .grid()
            .sites()
            .iter()
            .map(|s| s.coords.clone())
            .collect()
    }

    /// Exponent-measure mass of `{f : f(site) >= x}`.
    fn marginal_tail(&self, site: usize, x: f64) -> PyResult<f64> {
        if site >= self.inner.grid().len() || !(x > 0.0) {
            return Err(value_err("need a grid site and x > 0"));
        }
        Ok(self.inner.marginal_tail(site, x))
    }

    /// Exponent-measure mass of `{f : f(s_i) >= x_i for some i}`.
    fn joint_tail(&self, sites: Vec<usize>, x: Vec<f64>) -> PyResult<f64> {
        self.inner.joint_tail(&sites, &x).map_err(value_err)
    }

    /// Simulate unconditional fields; returns `n` rows of grid values.
    fn simulate(&self, seed: u64, n: usize) -> PyResult<Vec<Vec<f64>>> {
        let sim = SimOpts::default();
        (0..n)
            .map(|rep| {
                let mut rng = SplitRng::new(seed, rep as u64);
                simulate_unconditional(&self.inner, &mut rng, &sim)
                    .map(|(_real, field)| field)
                    .map_err(runtime_err)
            })
            .collect()
    }

    /// Hitting-scenario posterior for observations `eta(t_i) = y_i`:
    /// rows `(rgs_string, log_weight, pi)`.
    fn posterior(
        &self,
        site_ids: Vec<usize>,
        values: Vec<f64>,
        seed: u64,
    ) -> PyResult<Vec<(String, f64, f64)>> {
        let obs = self.obs(site_ids, values)?;
        let law =
            scenario_posterior(&self.inner, &obs, &self.kernel_opts(seed)).map_err(value_err)?;
        Ok(law
            .partitions()
            .iter()
            .zip(law.log_weights())
            .zip(law.pi())
            .map(|((p, &lw), &pi)| (p.rgs_string(), lw, pi))
            .collect())
    }

    /// Draw `n` conditional fields given `eta(t_i) = y_i`; constraints hold
    /// bitwise in every returned row.
    fn conditional_samples(
        &self,
        site_ids: Vec<usize>,
        values: Vec<f64>,
        seed: u64,
        n: usize,
    ) -> PyResult<Vec<Vec<f64>>> {
        let obs = self.obs(site_ids, values)?;
        let law =
            scenario_posterior(&self.inner, &obs, &self.kernel_opts(seed)).map_err(value_err)?;
        let mut rng = SplitRng::new(seed, 0);
        Ok(sample_conditional(&law, &mut rng, n)
            .map_err(runtime_err)?
            .into_iter()
            .map(|s| s.field)
            .collect())
    }

    /// `P(eta(s) < z | eta(t) = y)` with its standard error.
    fn conditional_cdf(
        &self,
        site_ids: Vec<usize>,
        values: Vec<f64>,
        query_sites: Vec<usize>,
        z: Vec<f64>,
        seed: u64,
    ) -> PyResult<(f64, f64)> {
        let obs = self.obs(site_ids, values)?;
        let law =
            scenario_posterior(&self.inner, &obs, &self.kernel_opts(seed)).map_err(value_err)?;
        let est = law.conditional_cdf(&query_sites, &z).map_err(value_err)?;
        Ok((est.value, est.se))
    }

    /// Closed-form single-point-conditioning CDF for discrete-spectral models.
    fn single_site_cdf(
        &self,
        t_site: usize,
        y: f64,
        query_sites: Vec<usize>,
        z: Vec<f64>,
    ) -> PyResult<f64> {
        single_site_discrete_cdf(&self.inner, t_site, y, &query_sites, &z).map_err(value_err)
    }

    /// Band-rejection oracle: acceptance rate and hitting-scenario frequencies
    /// `(rgs_string, frequency)` among accepted samples.
    #[pyo3(signature = (site_ids, values, rel_half_width, n_raw, seed, threads = 1))]
    fn reject_oracle(
        &self,
        site_ids: Vec<usize>,
        values: Vec<f64>,
        rel_half_width: f64,
        n_raw: usize,
        seed: u64,
        threads: usize,
    ) -> PyResult<(f64, Vec<(String, f64)>)> {
        let band = BandSpec::new(values.clone(), rel_half_width).map_err(value_err)?;
        let rep = reject_condition(
            &self.inner,
            &site_ids,
            &band,
            n_raw,
            seed,
            threads,
            &SimOpts::default(),
        )
        .map_err(runtime_err)?;
        let partitions = maxcond_core::enumerate_partitions(site_ids.len()).map_err(value_err)?;
        let freqs = rep.scenario_frequencies(&partitions);
        Ok((
            rep.acceptance_rate,
            partitions
                .iter()
                .zip(freqs)
                .map(|(p, f)| (p.rgs_string(), f))
                .collect(),
        ))
    }
}

/// `P(X < upper)` for `X ~ N(mean, cov)` with its standard error;
/// deterministic for a fixed seed.
#[pyfunction]
#[pyo3(signature = (upper, cov, mean = None, seed = 0))]
fn mvn_cdf(
    upper: Vec<f64>,
    cov: Vec<Vec<f64>>,
    mean: Option<Vec<f64>>,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let dim = upper.len();
    if cov.len() != dim || cov.iter().any(|r| r.len() != dim) {
        return Err(value_err("covariance must be square and match the limits"));
    }
    let mean = mean.unwrap_or_else(|| vec![0.0; dim]);
    let cov = nalgebra::DMatrix::from_fn(dim, dim, |i, j| cov[i][j]);
    let problem = MvnProblem::new(mean, cov, upper, None).map_err(value_err)?;
    let opts = maxcond_core::gauss::MvnOpts {
        seed,
        ..Default::default()
    };
    problem.solve(&opts).map_err(runtime_err)
}

/// All set partitions of `{0..k-1}` as restricted-growth strings, in
/// lexicographic order.
#[pyfunction]
fn partitions(k: usize) -> PyResult<Vec<String>> {
    Ok(maxcond_core::enumerate_partitions(k)
        .map_err(value_err)?
        .iter()
        .map(|p| p.rgs_string())
        .collect())
}

#[pymodule]
fn maxcond(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(mvn_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(partitions, m)?)?;
    Ok(())
}
