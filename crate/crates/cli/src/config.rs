//! Run configuration and input file parsing.
//!
//! Observation files are CSV with columns `site_id,value`; conditional-CDF
//! query files are CSV with columns `query_id,<coords...>,z` where the number
//! of coordinate columns equals the grid dimension and coordinates must match
//! grid sites exactly. `#`-prefixed lines and an optional header are skipped.

use std::path::{Path, PathBuf};

use maxcond_core::{Grid, Model, ObservationSet};

use crate::{CliError, Result};

/// One resolved run: model, seed and every knob a command can use.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model: Model,
    pub config_hash: u64,
    /// Seed is mandatory; there are no wall-clock defaults anywhere.
    pub seed: u64,
    pub replicates: usize,
    pub out_dir: PathBuf,
    pub threads: usize,
    pub band: f64,
    pub rel_tol: f64,
}

impl RunConfig {
    pub fn load(
        config_path: &Path,
        seed: u64,
        replicates: usize,
        out_dir: PathBuf,
        threads: usize,
        band: f64,
        rel_tol: f64,
    ) -> Result<Self> {
        let text = std::fs::read_to_string(config_path).map_err(|source| CliError::Io {
            path: config_path.display().to_string(),
            source,
        })?;
        let model = Model::from_spec_json(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", config_path.display())))?;
        if !(band > 0.0) {
            return Err(CliError::Config("band width must be positive".into()));
        }
        if !(rel_tol > 0.0) {
            return Err(CliError::Config("tolerance must be positive".into()));
        }
        Ok(Self {
            model,
            config_hash: fnv1a64(text.as_bytes()),
            seed,
            replicates,
            out_dir,
            threads: threads.max(1),
            band,
            rel_tol,
        })
    }
}

/// FNV-1a, used to stamp output files with the exact config they came from.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parse an observation CSV against the model grid.
pub fn read_observations(path: &Path, grid: &Grid) -> Result<ObservationSet> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut site_ids = Vec::new();
    let mut values = Vec::new();
    let mut first_data_line = true;
    for (line_no, line) in data_lines(&text) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(CliError::Config(format!(
                "{}:{line_no}: expected `site_id,value`, got {line:?}",
                path.display()
            )));
        }
        let is_header = std::mem::take(&mut first_data_line) && fields[0].parse::<usize>().is_err();
        if is_header {
            continue;
        }
        let site: usize = fields[0].parse().map_err(|_| {
            CliError::Config(format!(
                "{}:{line_no}: bad site id {:?}",
                path.display(),
                fields[0]
            ))
        })?;
        let value: f64 = fields[1].parse().map_err(|_| {
            CliError::Config(format!(
                "{}:{line_no}: bad value {:?}",
                path.display(),
                fields[1]
            ))
        })?;
        site_ids.push(site);
        values.push(value);
    }
    ObservationSet::new(grid, site_ids, values)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// One conditional-CDF query: sites and limits.
#[derive(Clone, Debug)]
pub struct CdfQuery {
    pub id: String,
    pub sites: Vec<usize>,
    pub z: Vec<f64>,
}

/// Parse a query file, grouping rows by query id in order of first appearance.
pub fn read_cdf_queries(path: &Path, grid: &Grid) -> Result<Vec<CdfQuery>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let dim = grid.dim();
    let mut queries: Vec<CdfQuery> = Vec::new();
    let mut first_data_line = true;
    for (line_no, line) in data_lines(&text) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 2 {
            return Err(CliError::Config(format!(
                "{}:{line_no}: expected `query_id,{} coordinate column(s),z`",
                path.display(),
                dim
            )));
        }
        let is_header = std::mem::take(&mut first_data_line) && fields[1].parse::<f64>().is_err();
        if is_header {
            continue;
        }
        let coords: Vec<f64> = fields[1..=dim]
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    CliError::Config(format!(
                        "{}:{line_no}: bad coordinate {f:?}",
                        path.display()
                    ))
                })
            })
            .collect::<Result<_>>()?;
        let z: f64 = fields[dim + 1].parse().map_err(|_| {
            CliError::Config(format!(
                "{}:{line_no}: bad limit {:?}",
                path.display(),
                fields[dim + 1]
            ))
        })?;
        let site = grid.find(&coords).ok_or_else(|| {
            CliError::Config(format!(
                "{}:{line_no}: coordinates {coords:?} match no grid site",
                path.display()
            ))
        })?;
        let id = fields[0].to_string();
        match queries.iter_mut().find(|q| q.id == id) {
            Some(q) => {
                q.sites.push(site);
                q.z.push(z);
            }
            None => queries.push(CdfQuery {
                id,
                sites: vec![site],
                z: vec![z],
            }),
        }
    }
    if queries.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no queries found",
            path.display()
        )));
    }
    Ok(queries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_is_stable() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn observation_parsing_with_header_and_comments() {
        let dir = std::env::temp_dir().join("maxcond-test-config");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("obs.csv");
        std::fs::write(&p, "# comment\nsite_id,value\n0,1.5\n2,0.5\n").unwrap();
        let grid = Grid::line(0.0, 2.0, 3).unwrap();
        let obs = read_observations(&p, &grid).unwrap();
        assert_eq!(obs.site_ids(), &[0, 2]);
        assert_eq!(obs.values(), &[1.5, 0.5]);

        std::fs::write(&p, "0,1.5\n0,2.0\n").unwrap();
        assert!(read_observations(&p, &grid).is_err());
    }

    #[test]
    fn query_parsing_groups_by_id_and_validates_coords() {
        let dir = std::env::temp_dir().join("maxcond-test-config");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("pts.csv");
        std::fs::write(&p, "query_id,x,z\nq1,0.0,1.0\nq1,1.0,2.0\nq2,2.0,0.7\n").unwrap();
        let grid = Grid::line(0.0, 2.0, 3).unwrap();
        let qs = read_cdf_queries(&p, &grid).unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[0].sites, vec![0, 1]);
        assert_eq!(qs[0].z, vec![1.0, 2.0]);
        assert_eq!(qs[1].sites, vec![2]);

        std::fs::write(&p, "q1,0.25,1.0\n").unwrap();
        let err = read_cdf_queries(&p, &grid);
        assert!(err.is_err());
        let msg = format!("{}", err.unwrap_err());
        assert!(
            msg.contains(":1"),
            "error should carry the line number: {msg}"
        );
    }
}
