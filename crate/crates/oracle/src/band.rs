//! Multiplicative conditioning bands. Relative widths suit the heavy-tailed
//! Frechet scale; additive bands would behave very differently at small and
//! large observed values.

use crate::{OracleError, Result};

/// The event `y_i (1 - eps) < eta(t_i) < y_i (1 + eps)` for every coordinate.
#[derive(Clone, Debug)]
pub struct BandSpec {
    center: Vec<f64>,
    rel_half_width: f64,
}

impl BandSpec {
    pub fn new(center: Vec<f64>, rel_half_width: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|&c| !(c > 0.0)) {
            return Err(OracleError::Invalid(
                "band center must be strictly positive".into(),
            ));
        }
        if !(rel_half_width > 0.0) {
            return Err(OracleError::Invalid(
                "band width must be strictly positive".into(),
            ));
        }
        Ok(Self {
            center,
            rel_half_width,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn rel_half_width(&self) -> f64 {
        self.rel_half_width
    }

    pub fn len(&self) -> usize {
        self.center.len()
    }

    pub fn is_empty(&self) -> bool {
        self.center.is_empty()
    }

    /// Lower and upper bound for one coordinate; the lower bound degenerates
    /// to zero (accept everything positive) for widths >= 1.
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        let lo = self.center[i] * (1.0 - self.rel_half_width);
        let hi = if self.rel_half_width.is_infinite() {
            f64::INFINITY
        } else {
            self.center[i] * (1.0 + self.rel_half_width)
        };
        (lo, hi)
    }

    pub fn contains(&self, values: &[f64]) -> bool {
        debug_assert_eq!(values.len(), self.center.len());
        values.iter().enumerate().all(|(i, &v)| {
            let (lo, hi) = self.bounds(i);
            v > lo && v < hi && v > 0.0
        })
    }
}
