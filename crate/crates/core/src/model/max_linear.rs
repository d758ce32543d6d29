//! Max-linear model: `eta(t) = max_{j<=q} Z_j f_j(t)` with independent unit
//! Frechet `Z_j` scaled by weights `w_j`. The exponent measure is carried by
//! the rays `{r f_j : r > 0}` with radial intensity `w_j r^-2 dr`, so every
//! tail functional is a finite sum and unconditional simulation is exact.

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};
use crate::grid::Grid;
use crate::model::SpectralAtom;
use crate::rng::SplitRng;

#[derive(Clone, Debug)]
pub struct MaxLinearModel {
    grid: Grid,
    atoms: Vec<SpectralAtom>,
    total_weight: f64,
}

impl MaxLinearModel {
    /// Build from profile functions on the grid and positive ray weights.
    ///
    /// With `normalize`, the weights are replaced by the solution of
    /// `sum_j w_j f_j(t) = 1` at every grid site closest to the input weights
    /// (least-squares projection onto the affine solution set); an error is
    /// returned if no strictly positive solution exists.
    pub fn new(
        grid: Grid,
        weights: Vec<f64>,
        profiles: Vec<Vec<f64>>,
        normalize: bool,
    ) -> Result<Self> {
        let q = profiles.len();
        if q == 0 || weights.len() != q {
            return Err(CoreError::InvalidModel(
                "need at least one profile and matching weights".into(),
            ));
        }
        for (j, f) in profiles.iter().enumerate() {
            if f.len() != grid.len() {
                return Err(CoreError::InvalidModel(format!(
                    "profile {j} has {} values for a grid of {} sites",
                    f.len(),
                    grid.len()
                )));
            }
            if f.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(CoreError::InvalidModel(format!(
                    "profile {j} must be nonnegative and finite"
                )));
            }
            if f.iter().all(|&v| v == 0.0) {
                return Err(CoreError::InvalidModel(format!(
                    "profile {j} is identically zero"
                )));
            }
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(CoreError::InvalidModel(
                "weights must be strictly positive".into(),
            ));
        }

        let weights = if normalize {
            normalized_weights(&grid, &weights, &profiles)?
        } else {
            weights
        };

        let total_weight = weights.iter().sum();
        let atoms = weights
            .into_iter()
            .zip(profiles)
            .map(|(weight, values)| SpectralAtom { weight, values })
            .collect();
        Ok(Self {
            grid,
            atoms,
            total_weight,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn atoms(&self) -> &[SpectralAtom] {
        &self.atoms
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// `sum_j w_j f_j(t)`, the Frechet scale of the margin at `site`.
    pub fn scale_at(&self, site: usize) -> f64 {
        self.atoms.iter().map(|a| a.weight * a.values[site]).sum()
    }

    pub fn marginal_tail(&self, site: usize, x: f64) -> f64 {
        self.scale_at(site) / x
    }

    pub fn joint_tail(&self, sites: &[usize], x: &[f64]) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                let m = sites
                    .iter()
                    .zip(x)
                    .map(|(&s, &xi)| a.values[s] / xi)
                    .fold(0.0, f64::max);
                a.weight * m
            })
            .sum()
    }

    /// Spectral sample: ray `j` with probability `w_j / W`, scaled by `W`,
    /// so that `E[Y(t)] = sum_j w_j f_j(t)`.
    pub fn spectral_sample(&self, rng: &mut SplitRng) -> Vec<f64> {
        let j = self.sample_ray(rng);
        self.atoms[j]
            .values
            .iter()
            .map(|&v| v * self.total_weight)
            .collect()
    }

    /// Ray index with probability proportional to its weight.
    pub fn sample_ray(&self, rng: &mut SplitRng) -> usize {
        let mut u = rng.next_f64() * self.total_weight;
        for (j, a) in self.atoms.iter().enumerate() {
            u -= a.weight;
            if u < 0.0 {
                return j;
            }
        }
        self.atoms.len() - 1
    }

    pub fn spectral_bound(&self) -> f64 {
        self.total_weight * self.atoms.iter().map(SpectralAtom::sup).fold(0.0, f64::max)
    }
}

/// Solve `sum_j w_j f_j(t) = 1` for all grid sites, staying as close as
/// possible to the requested weights.
fn normalized_weights(grid: &Grid, w0: &[f64], profiles: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = grid.len();
    let q = profiles.len();
    // a[(i, j)] = f_j(t_i)
    let a = DMatrix::from_fn(k, q, |i, j| profiles[j][i]);
    let w0v = DVector::from_column_slice(w0);
    let target = DVector::from_element(k, 1.0) - &a * &w0v;
    // minimum-norm correction: w = w0 + A^T (A A^T)^+ (1 - A w0)
    let svd = nalgebra::SVD::new(a.clone(), true, true);
    let correction = svd
        .solve(&target, 1e-12)
        .map_err(|e| CoreError::Normalization(format!("least-squares solve failed: {e}")))?;
    let w = w0v + correction;
    let residual = (&a * &w - DVector::from_element(k, 1.0)).norm();
    if residual > 1e-9 * (k as f64).sqrt() {
        return Err(CoreError::Normalization(format!(
            "no weight vector satisfies sum_j w_j f_j(t) = 1 on the grid (residual {residual:.3e})"
        )));
    }
    let w: Vec<f64> = w.iter().cloned().collect();
    if w.iter().any(|&wi| !(wi > 0.0)) {
        return Err(CoreError::Normalization(
            "normalization has no strictly positive weight solution".into(),
        ));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2() -> Grid {
        Grid::line(0.0, 1.0, 2).unwrap()
    }

    #[test]
    fn single_unit_ray_has_reciprocal_tail() {
        let g = Grid::line(0.0, 1.0, 3).unwrap();
        let m = MaxLinearModel::new(g, vec![1.0], vec![vec![1.0, 1.0, 1.0]], false).unwrap();
        assert_eq!(m.marginal_tail(0, 2.0), 0.5);
        assert_eq!(m.marginal_tail(2, 4.0), 0.25);
    }

    #[test]
    fn disjoint_supports_add_tails() {
        let m = MaxLinearModel::new(
            grid2(),
            vec![1.0, 1.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            false,
        )
        .unwrap();
        assert_eq!(m.joint_tail(&[0, 1], &[1.0, 1.0]), 2.0);
        assert_eq!(m.joint_tail(&[0, 1], &[2.0, 1.0]), 1.5);
    }

    #[test]
    fn normalization_projects_onto_solution_set() {
        let m = MaxLinearModel::new(
            grid2(),
            vec![1.0, 1.0, 1.0],
            vec![vec![1.0, 0.2], vec![0.2, 1.0], vec![0.5, 0.5]],
            true,
        )
        .unwrap();
        for site in 0..2 {
            assert!((m.scale_at(site) - 1.0).abs() < 1e-10);
        }
        // symmetric profiles keep symmetric weights
        assert!((m.atoms()[0].weight - m.atoms()[1].weight).abs() < 1e-10);
        assert!(m.atoms().iter().all(|a| a.weight > 0.0));
    }

    #[test]
    fn normalization_impossible_is_an_error() {
        // single ray cannot satisfy both sites with different profile values
        let err = MaxLinearModel::new(grid2(), vec![1.0], vec![vec![1.0, 2.0]], true);
        assert!(matches!(err, Err(CoreError::Normalization(_))));
    }

    #[test]
    fn zero_profile_rejected() {
        let err = MaxLinearModel::new(grid2(), vec![1.0], vec![vec![0.0, 0.0]], false);
        assert!(err.is_err());
    }

    #[test]
    fn spectral_sample_mean_is_one_when_normalized() {
        let m = MaxLinearModel::new(
            grid2(),
            vec![1.0, 1.0, 1.0],
            vec![vec![1.0, 0.2], vec![0.2, 1.0], vec![0.5, 0.5]],
            true,
        )
        .unwrap();
        let mut rng = SplitRng::new(11, 0);
        let n = 400_000;
        let mut mean = [0.0f64; 2];
        for _ in 0..n {
            let y = m.spectral_sample(&mut rng);
            mean[0] += y[0];
            mean[1] += y[1];
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        assert!((mean[0] - 1.0).abs() < 0.01, "{mean:?}");
        assert!((mean[1] - 1.0).abs() < 0.01, "{mean:?}");
    }
}
