//! On-disk model specification (JSON).
//!
//! ```json
//! { "kind": "max_linear",
//!   "grid": [[0.0], [1.0]],
//!   "atoms": [ { "weight": 1.0, "values": [1.0, 0.2] } ],
//!   "normalize": true }
//!
//! { "kind": "moving_max",
//!   "grid": [[0.0], [1.0], [2.0]],
//!   "kernel": { "shape": "truncated_gaussian", "sd": 1.0, "radius_sds": 4.0 },
//!   "window": [0.0, 2.0] }
//!
//! { "kind": "log_gaussian",
//!   "grid": [[0.0], [1.0]],
//!   "variogram": { "family": "power", "scale": 1.0, "exponent": 1.0 } }
//! ```

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::Grid;
use crate::model::{Kernel, Model, Variogram};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomSpec {
    pub weight: f64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    MaxLinear {
        grid: Vec<Vec<f64>>,
        atoms: Vec<AtomSpec>,
        #[serde(default)]
        normalize: bool,
    },
    MovingMax {
        grid: Vec<Vec<f64>>,
        kernel: Kernel,
        window: (f64, f64),
    },
    LogGaussian {
        grid: Vec<Vec<f64>>,
        variogram: Variogram,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<Model> {
        match self {
            ModelSpec::MaxLinear {
                grid,
                atoms,
                normalize,
            } => {
                let grid = Grid::new(grid.clone())?;
                let weights = atoms.iter().map(|a| a.weight).collect();
                let profiles = atoms.iter().map(|a| a.values.clone()).collect();
                Model::max_linear(grid, weights, profiles, *normalize)
            }
            ModelSpec::MovingMax {
                grid,
                kernel,
                window,
            } => {
                let grid = Grid::new(grid.clone())?;
                Model::moving_max(grid, *kernel, *window)
            }
            ModelSpec::LogGaussian { grid, variogram } => {
                let grid = Grid::new(grid.clone())?;
                Model::log_gaussian(grid, *variogram)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_kinds() {
        let m = Model::from_spec_json(
            r#"{ "kind": "max_linear", "grid": [[0.0],[1.0]],
                 "atoms": [ {"weight": 1.0, "values": [1.0, 0.2]},
                            {"weight": 1.0, "values": [0.2, 1.0]} ],
                 "normalize": true }"#,
        )
        .unwrap();
        assert!(matches!(m, Model::MaxLinear(_)));

        let m = Model::from_spec_json(
            r#"{ "kind": "moving_max", "grid": [[0.0],[2.5],[5.0]],
                 "kernel": { "shape": "indicator", "half_width": 0.5 },
                 "window": [0.0, 5.0] }"#,
        )
        .unwrap();
        assert!(matches!(m, Model::MovingMax(_)));

        let m = Model::from_spec_json(
            r#"{ "kind": "log_gaussian", "grid": [[0.0],[1.0]],
                 "variogram": { "family": "power", "scale": 1.0, "exponent": 1.0 } }"#,
        )
        .unwrap();
        assert!(matches!(m, Model::LogGaussian(_)));
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        assert!(Model::from_spec_json(r#"{ "kind": "nope" }"#).is_err());
        assert!(Model::from_spec_json(
            r#"{ "kind": "max_linear", "grid": [[0.0]], "atoms": [], "bogus": 1 }"#
        )
        .is_err());
        assert!(Model::from_spec_json(
            r#"{ "kind": "log_gaussian", "grid": [[0.0],[1.0]],
                 "variogram": { "family": "power", "scale": 1.0, "exponent": 3.0 } }"#
        )
        .is_err());
    }
}
