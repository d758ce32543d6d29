//! Atoms of a Poisson point-measure realization on the grid.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// How an atom came to exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomOrigin {
    /// Drawn by an unconditional simulation of the point measure.
    Simulated,
    /// Drawn as an extremal function of a conditional sample.
    ExtremalDraw,
    /// Drawn from the thinned sub-extremal Poisson measure of a conditional sample.
    SubextremalDraw,
}

/// One atom of the point measure: its values on the full grid plus the radial
/// level that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomFunction {
    pub values: Vec<f64>,
    pub scale: f64,
    pub origin: AtomOrigin,
}

impl AtomFunction {
    pub fn new(values: Vec<f64>, scale: f64, origin: AtomOrigin) -> Result<Self> {
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(CoreError::InvalidModel(
                "atom values must be finite and nonnegative".into(),
            ));
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(CoreError::InvalidModel(
                "atom is identically zero on the grid".into(),
            ));
        }
        Ok(Self {
            values,
            scale,
            origin,
        })
    }

    /// Sup norm over the grid.
    pub fn sup(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Strictly below `bound` at every listed site.
    pub fn below_at(&self, sites: &[usize], bound: &[f64]) -> bool {
        sites.iter().zip(bound).all(|(&s, &b)| self.values[s] < b)
    }
}

/// A finite truncation of a Poisson point measure on the grid.
///
/// `exact` is true when the truncation provably lost no atom that could touch
/// the pointwise maximum anywhere on the grid; decompositions and bitwise
/// invariants are only meaningful in that case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointMeasureRealization {
    pub atoms: Vec<AtomFunction>,
    pub truncation_threshold: f64,
    pub exact: bool,
    /// For truncated series: upper bound on the expected number of discarded
    /// atoms that could have altered the field.
    pub miss_bound: Option<f64>,
}

impl PointMeasureRealization {
    pub fn exact(atoms: Vec<AtomFunction>, truncation_threshold: f64) -> Self {
        Self {
            atoms,
            truncation_threshold,
            exact: true,
            miss_bound: None,
        }
    }

    pub fn truncated(atoms: Vec<AtomFunction>, truncation_threshold: f64, miss_bound: f64) -> Self {
        Self {
            atoms,
            truncation_threshold,
            exact: false,
            miss_bound: Some(miss_bound),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    /// Pointwise maximum of the atoms over the grid; zero where no atom is positive.
    pub fn field(&self, grid_len: usize) -> Vec<f64> {
        let mut out = vec![0.0; grid_len];
        for atom in &self.atoms {
            for (o, &v) in out.iter_mut().zip(&atom.values) {
                if v > *o {
                    *o = v;
                }
            }
        }
        out
    }

    /// Atoms whose sup norm exceeds the given level.
    pub fn count_above(&self, level: f64) -> usize {
        self.atoms.iter().filter(|a| a.sup() > level).count()
    }
}
