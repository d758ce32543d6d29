//! Dense Gaussian linear algebra: PSD factorization, conditioning, and a
//! quasi-Monte Carlo multivariate normal CDF (Genz sequential transform with a
//! randomized Kronecker lattice).

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{CoreError, Result};
use crate::rng::SplitRng;
use crate::stats::{phi, phi_inv};

/// Largest supported MVN dimension; accuracy and cost degrade beyond this.
pub const MAX_MVN_DIM: usize = 6;

/// Options for the QMC integrator. Deterministic for a fixed seed.
#[derive(Clone, Copy, Debug)]
pub struct MvnOpts {
    /// Lattice points per randomized shift.
    pub points: usize,
    /// Number of random shifts (the standard error comes from their spread).
    pub shifts: usize,
    pub seed: u64,
}

impl Default for MvnOpts {
    fn default() -> Self {
        Self {
            points: 4096,
            shifts: 12,
            seed: 0x6d766e,
        }
    }
}

/// Factor a symmetric PSD matrix as `F F^T` (eigendecomposition with
/// nonnegative clamping). Rejects matrices with genuinely negative spectrum.
pub fn psd_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    if n != cov.ncols() {
        return Err(CoreError::NotPsd("matrix not square".into()));
    }
    if n == 0 {
        return Ok(cov.clone());
    }
    let sym = nalgebra::SymmetricEigen::new(cov.clone());
    let max_eig = sym.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let tol = 1e-10 * max_eig.max(1.0);
    let mut scaled = sym.eigenvectors.clone();
    for (j, &ev) in sym.eigenvalues.iter().enumerate() {
        if ev < -tol {
            return Err(CoreError::NotPsd(format!("eigenvalue {ev:.3e}")));
        }
        let s = ev.max(0.0).sqrt();
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    Ok(scaled)
}

/// Conditional law of the `rest` coordinates of `N(mean, cov)` given the
/// `obs` coordinates equal `obs_vals`. Requires the observed block to be
/// positive definite.
pub fn condition_gaussian(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    obs_idx: &[usize],
    obs_vals: &[f64],
    rest_idx: &[usize],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (no, nr) = (obs_idx.len(), rest_idx.len());
    if no == 0 {
        let m = DVector::from_iterator(nr, rest_idx.iter().map(|&i| mean[i]));
        let c = DMatrix::from_fn(nr, nr, |i, j| cov[(rest_idx[i], rest_idx[j])]);
        return Ok((m, c));
    }
    let cov_oo = DMatrix::from_fn(no, no, |i, j| cov[(obs_idx[i], obs_idx[j])]);
    let cov_ro = DMatrix::from_fn(nr, no, |i, j| cov[(rest_idx[i], obs_idx[j])]);
    let cov_rr = DMatrix::from_fn(nr, nr, |i, j| cov[(rest_idx[i], rest_idx[j])]);
    let delta =
        DVector::from_iterator(no, obs_idx.iter().zip(obs_vals).map(|(&i, &v)| v - mean[i]));
    let chol = Cholesky::new(cov_oo)
        .ok_or_else(|| CoreError::NotPsd("observed block of conditional Gaussian".into()))?;
    // cov_or = cov_ro^T; solve cov_oo X = cov_or
    let solved = chol.solve(&cov_ro.transpose());
    let mean_rest = DVector::from_iterator(nr, rest_idx.iter().map(|&i| mean[i]))
        + cov_ro.clone() * chol.solve(&delta);
    let cov_rest = cov_rr - cov_ro * solved;
    Ok((mean_rest, cov_rest))
}

const KRONECKER_PRIMES: [u64; 11] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31];

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(1e-300, 1.0 - 1e-16)
}

/// `P(X < upper)` for `X ~ N(0, cov)`, with an estimated standard error.
///
/// Dimension 1 is evaluated exactly through the normal CDF (standard error 0).
/// Higher dimensions use the Genz sequential conditioning transform over a
/// Kronecker lattice with `shifts` independent random offsets; results are
/// bit-reproducible for a fixed seed because shifts are consumed in order.
pub fn mvn_cdf(upper: &[f64], cov: &DMatrix<f64>, opts: &MvnOpts) -> Result<(f64, f64)> {
    let dim = upper.len();
    if dim == 0 || cov.nrows() != dim || cov.ncols() != dim {
        return Err(CoreError::InvalidModel(
            "mvn_cdf: dimension mismatch".into(),
        ));
    }
    if dim > MAX_MVN_DIM {
        return Err(CoreError::DimensionCapacity {
            what: "multivariate normal CDF".into(),
            dim,
            cap: MAX_MVN_DIM,
        });
    }
    if upper.iter().any(|b| b.is_nan()) {
        return Err(CoreError::InvalidModel("mvn_cdf: NaN limit".into()));
    }
    if dim == 1 {
        let var = cov[(0, 0)];
        if var < 0.0 {
            return Err(CoreError::NotPsd(format!("variance {var:.3e}")));
        }
        if var == 0.0 {
            return Ok(((upper[0] > 0.0) as u8 as f64, 0.0));
        }
        return Ok((phi(upper[0] / var.sqrt()), 0.0));
    }

    // Order variables by standardized limit, smallest first; this is the
    // classical reordering that stabilizes the sequential transform.
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        let sa = upper[a] / cov[(a, a)].sqrt().max(1e-300);
        let sb = upper[b] / cov[(b, b)].sqrt().max(1e-300);
        sa.partial_cmp(&sb).unwrap()
    });
    let b: Vec<f64> = order.iter().map(|&i| upper[i]).collect();
    let cov_p = DMatrix::from_fn(dim, dim, |i, j| cov[(order[i], order[j])]);
    let chol = Cholesky::new(cov_p).ok_or_else(|| {
        CoreError::NotPsd("mvn_cdf requires a positive definite covariance".into())
    })?;
    let l = chol.l();

    let e1 = phi(b[0] / l[(0, 0)]);
    if e1 == 0.0 {
        return Ok((0.0, 0.0));
    }

    let lattice: Vec<f64> = KRONECKER_PRIMES[..dim - 1]
        .iter()
        .map(|&p| (p as f64).sqrt().fract())
        .collect();
    let mut rng = SplitRng::new(opts.seed, 0);
    let mut estimates = Vec::with_capacity(opts.shifts);
    let mut y = vec![0.0f64; dim];
    for _ in 0..opts.shifts {
        let shift: Vec<f64> = (0..dim - 1).map(|_| rng.next_f64()).collect();
        let mut acc = 0.0f64;
        for j in 1..=opts.points {
            let mut prod = e1;
            y[0] = phi_inv(clamp_prob((j as f64 * lattice[0] + shift[0]).fract() * e1));
            for r in 1..dim {
                let mut t = b[r];
                for (c, yc) in y.iter().enumerate().take(r) {
                    t -= l[(r, c)] * yc;
                }
                let e = phi(t / l[(r, r)]);
                prod *= e;
                if prod == 0.0 {
                    break;
                }
                if r < dim - 1 {
                    let w = (j as f64 * lattice[r] + shift[r]).fract();
                    y[r] = phi_inv(clamp_prob(w * e));
                }
            }
            acc += prod;
        }
        estimates.push(acc / opts.points as f64);
    }
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let var = estimates
        .iter()
        .map(|e| (e - mean) * (e - mean))
        .sum::<f64>()
        / (estimates.len() as f64 - 1.0)
        / estimates.len() as f64;
    Ok((mean.clamp(0.0, 1.0), var.sqrt()))
}
