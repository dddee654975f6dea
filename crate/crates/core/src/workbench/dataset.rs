//! Dataset ingestion: comma-separated records with the header
//! `key,tau_s,thickness_m,T_cyl_K,M0,M_tau`.
//!
//! Parsing is strict: the header must match exactly, every row needs all
//! six fields, duplicate keys are rejected, and each record must satisfy
//! the sample invariants. Errors carry the offending line number.

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimation::Sample;

pub const DATASET_HEADER: &str = "key,tau_s,thickness_m,T_cyl_K,M0,M_tau";

fn dataset_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Dataset {
        line,
        reason: reason.into(),
    }
}

fn parse_field(line_no: usize, name: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| dataset_err(line_no, format!("{name}: cannot parse '{}'", raw.trim())))
}

/// Parses a dataset from any reader; see [`load_dataset`] for files.
pub fn parse_dataset<R: BufRead>(reader: R) -> Result<Vec<Sample>> {
    let mut samples = Vec::new();
    let mut keys = HashSet::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            if trimmed != DATASET_HEADER {
                return Err(dataset_err(
                    line_no,
                    format!("expected header '{DATASET_HEADER}', got '{trimmed}'"),
                ));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 6 {
            return Err(dataset_err(
                line_no,
                format!("expected 6 fields, got {}", fields.len()),
            ));
        }
        let key = fields[0].trim().to_string();
        if !keys.insert(key.clone()) {
            return Err(dataset_err(line_no, format!("duplicate key '{key}'")));
        }
        let sample = Sample {
            key,
            tau: parse_field(line_no, "tau_s", fields[1])?,
            thickness: parse_field(line_no, "thickness_m", fields[2])?,
            t_cyl: parse_field(line_no, "T_cyl_K", fields[3])?,
            m0: parse_field(line_no, "M0", fields[4])?,
            m_tau: parse_field(line_no, "M_tau", fields[5])?,
        };
        sample
            .validate()
            .map_err(|e| dataset_err(line_no, e.to_string()))?;
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(dataset_err(0, "empty dataset"));
    }
    Ok(samples)
}

/// Loads and validates a dataset file.
pub fn load_dataset(path: &Path) -> Result<Vec<Sample>> {
    let file = std::fs::File::open(path)?;
    parse_dataset(std::io::BufReader::new(file))
}
