//! Deterministic CSV/JSONL writers. Every file begins with a comment line
//! carrying the config hash and seed, so outputs can always be traced back to
//! the exact inputs that produced them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::{CliError, Result};

pub struct OutFile {
    writer: BufWriter<File>,
    path: String,
}

impl OutFile {
    pub fn create(dir: &Path, name: &str, config_hash: u64, seed: u64) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let path = dir.join(name);
        let file = File::create(&path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut out = Self {
            writer: BufWriter::new(file),
            path: path.display().to_string(),
        };
        out.line(&format!("# config_hash={config_hash:016x} seed={seed}"))?;
        Ok(out)
    }

    pub fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.writer, "{s}").map_err(|source| CliError::Io {
            path: self.path.clone(),
            source,
        })
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|source| CliError::Io {
            path: self.path.clone(),
            source,
        })
    }
}

/// Shortest-roundtrip float formatting (Rust's `Display` for f64), fixed once
/// here so all outputs stay byte-stable.
pub fn fmt_f64(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}
