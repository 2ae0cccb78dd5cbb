//! Line-delimited JSON manifests: one record per line, sorted by sample id.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::ManifestRecord;
use crate::{Error, Result};

fn write_lines<T: Serialize>(file: File, records: &[&T]) -> Result<()> {
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Write `records` sorted by sample id, replacing any existing file.
pub fn write_manifest(records: &[ManifestRecord], path: &Path) -> Result<()> {
    let mut sorted: Vec<&ManifestRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.sample.sample_id.cmp(&b.sample.sample_id));
    write_lines(File::create(path)?, &sorted)
}

/// Append records after the existing lines, which are left untouched.
pub fn append_manifest(records: &[ManifestRecord], path: &Path) -> Result<()> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    write_lines(file, &records.iter().collect::<Vec<_>>())
}

/// Parse a line-delimited JSON file. Errors carry the 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let err = |message: String| Error::Manifest {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        if line.trim().is_empty() {
            return Err(err("empty line".into()));
        }
        out.push(serde_json::from_str(&line).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

/// Read a manifest, rejecting malformed lines and duplicate sample ids.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let records: Vec<ManifestRecord> = read_jsonl(path)?;
    let mut seen = BTreeSet::new();
    for (i, r) in records.iter().enumerate() {
        if !seen.insert(r.sample.sample_id.as_str()) {
            return Err(Error::Manifest {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("duplicate sample id `{}`", r.sample.sample_id),
            });
        }
    }
    Ok(records)
}
