//! On-disk record shapes shared between subcommands.

use std::io::{BufRead, Write};
use std::path::Path;

use loupe::corpus::Sample;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::{config_err, CliResult};

/// One sample after padding and rendering: what run-episodes, filter-hard,
/// and score consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedRecord {
    pub sample: Sample,
    pub evidence_pages: Vec<usize>,
    pub preset: String,
    pub pad_skipped: bool,
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let file =
        std::fs::File::open(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let reader = std::io::BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line)
            .map_err(|e| config_err(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for record in records {
        let line = serde_json::to_string(record).expect("record serializes");
        file.write_all(line.as_bytes())?;
        file.write_all(b"\n")?;
    }
    file.flush()?;
    Ok(())
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let json = serde_json::to_vec_pretty(value).expect("value serializes");
    std::fs::write(path, json)?;
    Ok(())
}

/// Stable per-sample seed derived from the master seed and the sample's
/// position in the input.
pub fn sample_seed(master: u64, index: usize) -> u64 {
    master
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(index as u64)
}
