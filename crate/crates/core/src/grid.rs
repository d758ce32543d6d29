//! Finite site grid and conditioning observations.
//!
//! All "functions" in this workspace are vectors of values on a fixed finite
//! grid of sites in R^d, d in {1, 2}. Conditional laws of a max-i.d. field only
//! depend on finite-dimensional margins, so nothing is lost by evaluating on
//! the grid; continuity of sample paths enters only through model construction.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// A single grid site: a point of the index space plus its position in the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: usize,
    pub coords: Vec<f64>,
}

impl Site {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Ordered collection of distinct sites with contiguous ids from 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    sites: Vec<Site>,
}

impl Grid {
    pub fn new(coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.is_empty() {
            return Err(CoreError::InvalidGrid("grid must be nonempty".into()));
        }
        let dim = coords[0].len();
        if dim == 0 || dim > 2 {
            return Err(CoreError::InvalidGrid(format!(
                "site dimension must be 1 or 2, got {dim}"
            )));
        }
        for (i, c) in coords.iter().enumerate() {
            if c.len() != dim {
                return Err(CoreError::InvalidGrid(format!(
                    "site {i} has dimension {} but the grid is {dim}-dimensional",
                    c.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::InvalidGrid(format!(
                    "site {i} has non-finite coordinates"
                )));
            }
        }
        for i in 0..coords.len() {
            for j in (i + 1)..coords.len() {
                if coords[i] == coords[j] {
                    return Err(CoreError::InvalidGrid(format!(
                        "sites {i} and {j} have identical coordinates"
                    )));
                }
            }
        }
        let sites = coords
            .into_iter()
            .enumerate()
            .map(|(id, coords)| Site { id, coords })
            .collect();
        Ok(Self { dim, sites })
    }

    /// Regular 1-d grid of `n` sites on [a, b].
    pub fn line(a: f64, b: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::InvalidGrid("grid must be nonempty".into()));
        }
        let coords = (0..n)
            .map(|i| {
                let f = if n == 1 {
                    0.0
                } else {
                    i as f64 / (n - 1) as f64
                };
                vec![a + (b - a) * f]
            })
            .collect();
        Self::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, id: usize) -> &Site {
        &self.sites[id]
    }

    pub fn coords(&self, id: usize) -> &[f64] {
        &self.sites[id].coords
    }

    /// Euclidean distance between two sites.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.sites[a]
            .coords
            .iter()
            .zip(&self.sites[b].coords)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Id of the site with exactly these coordinates, if any.
    pub fn find(&self, coords: &[f64]) -> Option<usize> {
        self.sites.iter().position(|s| s.coords == coords)
    }

    pub fn check_site_ids(&self, ids: &[usize]) -> Result<()> {
        if ids.is_empty() {
            return Err(CoreError::InvalidObservation("empty site list".into()));
        }
        for &id in ids {
            if id >= self.sites.len() {
                return Err(CoreError::InvalidObservation(format!(
                    "site id {id} out of range (grid has {} sites)",
                    self.sites.len()
                )));
            }
        }
        for i in 0..ids.len() {
            for j in (i + 1)..ids.len() {
                if ids[i] == ids[j] {
                    return Err(CoreError::InvalidObservation(format!(
                        "duplicate site id {} in site list",
                        ids[i]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Conditioning data: sites `t_1..t_k` of the grid and observed values
/// `y_1..y_k`, all strictly positive (the vertex function is 0 throughout).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    site_ids: Vec<usize>,
    values: Vec<f64>,
}

impl ObservationSet {
    pub fn new(grid: &Grid, site_ids: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        grid.check_site_ids(&site_ids)?;
        if values.len() != site_ids.len() {
            return Err(CoreError::InvalidObservation(format!(
                "{} sites but {} values",
                site_ids.len(),
                values.len()
            )));
        }
        if values.iter().any(|&y| !(y > 0.0) || !y.is_finite()) {
            return Err(CoreError::InvalidObservation(
                "observed values must be strictly positive and finite".into(),
            ));
        }
        Ok(Self { site_ids, values })
    }

    pub fn len(&self) -> usize {
        self.site_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.site_ids.is_empty()
    }

    pub fn site_ids(&self) -> &[usize] {
        &self.site_ids
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Reorder the observation pairs; `perm[i]` is the old index of new position `i`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(CoreError::InvalidObservation(
                "permutation length mismatch".into(),
            ));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || seen[p] {
                return Err(CoreError::InvalidObservation("not a permutation".into()));
            }
            seen[p] = true;
        }
        Ok(Self {
            site_ids: perm.iter().map(|&p| self.site_ids[p]).collect(),
            values: perm.iter().map(|&p| self.values[p]).collect(),
        })
    }
}
