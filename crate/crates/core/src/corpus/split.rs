use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ManifestRecord, TaskFamily};
use crate::seed::first_u64;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Bench,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Bench => "bench",
        }
    }
}

/// Hash-based split: bench iff the top 53 bits of `sha256(salt || id)`,
/// read as a fraction of one, fall below `bench_fraction`.
pub fn assign_split(sample_id: &str, salt: &str, bench_fraction: f64) -> Split {
    let mut hasher = Sha256::new();
    hasher.update(salt.as_bytes());
    hasher.update(sample_id.as_bytes());
    let u = (first_u64(&hasher.finalize()) >> 11) as f64 / (1u64 << 53) as f64;
    if u < bench_fraction {
        Split::Bench
    } else {
        Split::Train
    }
}

/// Force every group of records sharing a content hash into one split, the
/// split of its smallest sample id. Returns the number of records moved.
pub fn unify_content_groups(records: &mut [ManifestRecord]) -> usize {
    let mut owner: BTreeMap<&str, (&str, Split)> = BTreeMap::new();
    for r in records.iter() {
        let entry = owner
            .entry(r.content_hash.as_str())
            .or_insert((r.sample.sample_id.as_str(), r.split));
        if r.sample.sample_id.as_str() < entry.0 {
            *entry = (r.sample.sample_id.as_str(), r.split);
        }
    }
    let target: BTreeMap<String, Split> = owner
        .into_iter()
        .map(|(h, (_, s))| (h.to_string(), s))
        .collect();
    let mut moved = 0;
    for r in records.iter_mut() {
        let s = target[&r.content_hash];
        if r.split != s {
            r.split = s;
            moved += 1;
        }
    }
    moved
}

fn in_bin(snr: Option<f64>, bin: f64) -> bool {
    snr.is_some_and(|s| (s - bin).abs() < 1e-9)
}

/// Promote train records of `task` so each SNR bin has at least
/// `per_bin_min` bench items. Within a bin the smallest sample ids go first,
/// together with every record sharing their content hash. Returns the
/// number of records promoted.
///
/// Tasks without SNR labels (an empty grid) are skipped, as is
/// `per_bin_min == 0`.
pub fn stratified_bench(
    records: &mut [ManifestRecord],
    task: TaskFamily,
    snr_grid: &[f64],
    per_bin_min: usize,
) -> Result<usize> {
    if per_bin_min == 0 || snr_grid.is_empty() {
        return Ok(0);
    }
    let mut promote: BTreeSet<String> = BTreeSet::new();
    for &bin in snr_grid {
        let mut members: Vec<&ManifestRecord> = records
            .iter()
            .filter(|r| r.sample.task == task && in_bin(r.sample.snr_db, bin))
            .collect();
        if members.is_empty() {
            return Err(Error::EmptyBin {
                task: task.to_string(),
                snr_db: bin,
            });
        }
        members.sort_by(|a, b| a.sample.sample_id.cmp(&b.sample.sample_id));
        let have = members
            .iter()
            .filter(|r| r.split == Split::Bench || promote.contains(&r.content_hash))
            .count();
        let need = per_bin_min.saturating_sub(have);
        if need > members.len() - have {
            return Err(Error::invalid(format!(
                "{task}: SNR bin {bin} dB has {} records, fewer than per_bin_min {per_bin_min}",
                members.len()
            )));
        }
        let picked: Vec<String> = members
            .iter()
            .filter(|r| r.split == Split::Train && !promote.contains(&r.content_hash))
            .take(need)
            .map(|r| r.content_hash.clone())
            .collect();
        promote.extend(picked);
    }
    let mut promoted = 0;
    for r in records.iter_mut() {
        if r.split == Split::Train && promote.contains(&r.content_hash) {
            r.split = Split::Bench;
            promoted += 1;
        }
    }
    Ok(promoted)
}
