//! Bounded moving-maxima model on a 1-d grid.
//!
//! Spectral functions are a fixed compactly supported kernel translated by a
//! uniform shift over the site window enlarged by the support radius, then
//! rescaled so `E[Y(t)] = 1` on the window. The kernel's known sup gives a
//! uniform spectral bound, which is what makes the series simulation stopping
//! rule exact.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::Grid;
use crate::quad;
use crate::rng::SplitRng;
use crate::stats::phi;

/// Shift kernels with known sup, compact support and closed-form integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Kernel {
    /// Indicator of `[-half_width, half_width]`.
    Indicator { half_width: f64 },
    /// `exp(-x^2 / (2 sd^2))` cut at `|x| <= radius_sds * sd`.
    TruncatedGaussian { sd: f64, radius_sds: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Indicator { half_width } => {
                if !(half_width > 0.0) || !half_width.is_finite() {
                    return Err(CoreError::InvalidModel(
                        "indicator half_width must be positive".into(),
                    ));
                }
            }
            Kernel::TruncatedGaussian { sd, radius_sds } => {
                if !(sd > 0.0) || !(radius_sds > 0.0) || !sd.is_finite() || !radius_sds.is_finite()
                {
                    return Err(CoreError::InvalidModel(
                        "truncated Gaussian needs positive sd and radius".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn sup(&self) -> f64 {
        1.0
    }

    /// Support radius: the kernel vanishes outside `[-r, r]`.
    pub fn support_radius(&self) -> f64 {
        match *self {
            Kernel::Indicator { half_width } => half_width,
            Kernel::TruncatedGaussian { sd, radius_sds } => sd * radius_sds,
        }
    }

    /// Closed-form integral over the support.
    pub fn integral(&self) -> f64 {
        match *self {
            Kernel::Indicator { half_width } => 2.0 * half_width,
            Kernel::TruncatedGaussian { sd, radius_sds } => {
                sd * (2.0 * std::f64::consts::PI).sqrt() * (2.0 * phi(radius_sds) - 1.0)
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Kernel::Indicator { half_width } => {
                if x.abs() <= half_width {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::TruncatedGaussian { sd, radius_sds } => {
                if x.abs() <= sd * radius_sds {
                    (-0.5 * (x / sd) * (x / sd)).exp()
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct MovingMaxModel {
    grid: Grid,
    kernel: Kernel,
    window: (f64, f64),
    /// Height rescaling `c` with `Y(t) = c * g(t - U)`.
    height: f64,
    /// Length of the enlarged shift window.
    shift_len: f64,
}

impl MovingMaxModel {
    pub fn new(grid: Grid, kernel: Kernel, window: (f64, f64)) -> Result<Self> {
        kernel.validate()?;
        if grid.dim() != 1 {
            return Err(CoreError::InvalidModel(
                "moving-maxima models are defined on 1-d grids".into(),
            ));
        }
        let (a, b) = window;
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(CoreError::InvalidModel(
                "window must be a finite interval".into(),
            ));
        }
        for site in grid.sites() {
            let x = site.coords[0];
            if x < a || x > b {
                return Err(CoreError::InvalidModel(format!(
                    "site {} at {x} lies outside the window [{a}, {b}]",
                    site.id
                )));
            }
        }
        let r = kernel.support_radius();
        let shift_len = (b - a) + 2.0 * r;
        // E[Y(t)] = height * integral / shift_len = 1 for t inside the window
        let height = shift_len / kernel.integral();
        Ok(Self {
            grid,
            kernel,
            window,
            height,
            shift_len,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn marginal_tail(&self, _site: usize, x: f64) -> f64 {
        1.0 / x
    }

    /// `E[max_i Y(s_i) / x_i]` by panel quadrature over the shift; panels are
    /// split at support edges and at the crossing points of the scaled kernel
    /// translates, so the integrand is smooth inside each panel.
    pub fn joint_tail(&self, sites: &[usize], x: &[f64]) -> f64 {
        let r = self.kernel.support_radius();
        let (lo, hi) = (self.window.0 - r, self.window.1 + r);
        let coords: Vec<f64> = sites.iter().map(|&s| self.grid.coords(s)[0]).collect();
        let mut breaks = Vec::new();
        for &c in &coords {
            breaks.push(c - r);
            breaks.push(c + r);
        }
        if let Kernel::TruncatedGaussian { sd, .. } = self.kernel {
            // crossing of two translated equal-width Gaussians scaled by 1/x:
            // linear equation in the shift
            for i in 0..coords.len() {
                for j in (i + 1)..coords.len() {
                    let (si, sj) = (coords[i], coords[j]);
                    if si == sj {
                        continue;
                    }
                    let u = (2.0 * sd * sd * (x[i] / x[j]).ln() / (si - sj) + si + sj) / 2.0;
                    breaks.push(u);
                }
            }
        }
        let breaks = quad::clean_breakpoints(breaks, lo, hi);
        let f = |u: f64| {
            coords
                .iter()
                .zip(x)
                .map(|(&c, &xi)| self.kernel.eval(c - u) / xi)
                .fold(0.0, f64::max)
        };
        self.height / self.shift_len * quad::integrate_panels(f, &breaks, 32)
    }

    pub fn spectral_sample(&self, rng: &mut SplitRng) -> Vec<f64> {
        let r = self.kernel.support_radius();
        let u = rng.uniform(self.window.0 - r, self.window.1 + r);
        self.grid
            .sites()
            .iter()
            .map(|s| self.height * self.kernel.eval(s.coords[0] - u))
            .collect()
    }

    pub fn spectral_bound(&self) -> f64 {
        self.height * self.kernel.sup()
    }
}
