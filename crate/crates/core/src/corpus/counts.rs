use std::collections::BTreeMap;

use super::TaskFamily;
use crate::{Error, Result};

/// Benchmark composition: per task `(OpenQA, MCQA)` counts.
pub const TABLE1: [(TaskFamily, usize, usize); 6] = [
    (TaskFamily::Spe, 2250, 750),
    (TaskFamily::Ssd, 1700, 300),
    (TaskFamily::Mr, 0, 500),
    (TaskFamily::Pr, 0, 500),
    (TaskFamily::Ei, 0, 458),
    (TaskFamily::Ajsd, 2000, 0),
];

pub const TABLE1_TOTAL: usize = 8458;
/// Smallest total accepted by [`desk_scale_counts`].
pub const MIN_DESK_TOTAL: usize = 60;

/// Scale the benchmark composition to `total` records with largest-remainder
/// rounding. Ties on the remainder go to the earlier cell (table order,
/// OpenQA before MCQA). Empty cells stay empty.
pub fn desk_scale_counts(total: usize) -> Result<BTreeMap<TaskFamily, (usize, usize)>> {
    if total < MIN_DESK_TOTAL {
        return Err(Error::invalid(format!(
            "desk total must be at least {MIN_DESK_TOTAL}, got {total}"
        )));
    }
    let weights: Vec<usize> = TABLE1.iter().flat_map(|&(_, o, m)| [o, m]).collect();
    // Exact integer quotas: floor(total·w / T) and remainder (total·w) mod T.
    let mut counts: Vec<usize> = weights.iter().map(|w| total * w / TABLE1_TOTAL).collect();
    let remainders: Vec<usize> = weights.iter().map(|w| total * w % TABLE1_TOTAL).collect();
    let leftover = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0).collect();
    order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]).then(a.cmp(&b)));
    for &i in order.iter().take(leftover) {
        counts[i] += 1;
    }
    Ok(TABLE1
        .iter()
        .enumerate()
        .map(|(k, &(task, _, _))| (task, (counts[2 * k], counts[2 * k + 1])))
        .collect())
}
