//! Scoring predictions against bench manifests.
//!
//! Unparseable or missing predictions count as incorrect, never excluded.

mod text;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{ManifestRecord, TaskFamily};
use crate::instrgen::{GroundTruth, QaFormat, TagKind, OPTION_LETTERS};
use crate::{Error, Result};

pub use text::{bleu4, cider, meteor, rouge_l, stem, tokenize, MetricParams};

/// Largest accepted value of one AJSD metric.
pub const METRIC_MAX: f64 = 10.0;

/// One model output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample_id: String,
    pub text: String,
}

/// Payload of the first well-formed `<tag>…</tag>`, trimmed. The payload
/// starts after the last opening tag before the first closing tag.
pub fn parse_tag(text: &str, tag: TagKind) -> Option<String> {
    let name = tag.name()?;
    let open = format!("<{name}>");
    let close = format!("</{name}>");
    let end = text.find(&close)?;
    let start = text[..end].rfind(&open)? + open.len();
    Some(text[start..end].trim().to_string())
}

/// Option letter from an `<answer>` payload: `A`, `b`, `C.` or `D) ...`.
fn parse_letter(payload: &str) -> Option<char> {
    let mut chars = payload.chars();
    let first = chars.next()?.to_ascii_uppercase();
    let rest_ok = chars.next().is_none_or(|c| !c.is_alphanumeric());
    (OPTION_LETTERS.contains(&first) && rest_ok).then_some(first)
}

fn canonical_label(s: &str) -> String {
    s.split(',')
        .map(|part| part.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_number(payload: &str) -> Option<f64> {
    let trimmed = payload
        .trim()
        .trim_end_matches("µs")
        .trim_end_matches("us")
        .trim();
    trimmed.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Outcome of one tagged prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Correct,
    Incorrect,
    /// Required tag missing or malformed.
    Unparseable,
}

/// Judge a tagged prediction. `tolerance` overrides the SPE window when set.
/// AJSD records have no tag and always yield `None`.
pub fn judge(record: &ManifestRecord, text: &str, tolerance: Option<f64>) -> Option<Verdict> {
    let sample = &record.sample;
    let verdict = match sample.format {
        QaFormat::MCQA => match parse_tag(text, TagKind::Answer).and_then(|p| parse_letter(&p)) {
            None => Verdict::Unparseable,
            Some(letter) if Some(letter) == sample.correct_letter() => Verdict::Correct,
            Some(_) => Verdict::Incorrect,
        },
        QaFormat::OpenQA => {
            let tag = TagKind::for_openqa(sample.task);
            tag.name()?;
            let Some(payload) = parse_tag(text, tag) else {
                return Some(Verdict::Unparseable);
            };
            let correct = match &sample.ground_truth {
                GroundTruth::Spe {
                    value, tolerance: tol, ..
                } => match parse_number(&payload) {
                    None => return Some(Verdict::Unparseable),
                    Some(v) => (v - value).abs() <= tolerance.unwrap_or(*tol) + 1e-9,
                },
                gt => canonical_label(&payload) == canonical_label(&gt.canonical()),
            };
            if correct {
                Verdict::Correct
            } else {
                Verdict::Incorrect
            }
        }
    };
    Some(verdict)
}

fn index_predictions<'a>(
    preds: &'a [Prediction],
    manifest: &[ManifestRecord],
) -> Result<BTreeMap<&'a str, &'a str>> {
    let known: BTreeSet<&str> = manifest.iter().map(|r| r.sample.sample_id.as_str()).collect();
    let mut map = BTreeMap::new();
    for p in preds {
        if !known.contains(p.sample_id.as_str()) {
            return Err(Error::UnknownSample(p.sample_id.clone()));
        }
        if map.insert(p.sample_id.as_str(), p.text.as_str()).is_some() {
            return Err(Error::invalid(format!("duplicate prediction for `{}`", p.sample_id)));
        }
    }
    Ok(map)
}

fn percent(correct: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * correct as f64 / total as f64
    }
}

fn accuracy_over(
    preds: &[Prediction],
    manifest: &[ManifestRecord],
    format: QaFormat,
    tolerance: Option<f64>,
) -> Result<f64> {
    let map = index_predictions(preds, manifest)?;
    let (mut total, mut correct) = (0, 0);
    for r in manifest.iter().filter(|r| r.sample.format == format) {
        let text = map.get(r.sample.sample_id.as_str()).copied().unwrap_or("");
        if let Some(v) = judge(r, text, tolerance) {
            total += 1;
            correct += usize::from(v == Verdict::Correct);
        }
    }
    Ok(percent(correct, total))
}

/// MCQA accuracy in percent over the MCQA records of `manifest`.
pub fn mcqa_accuracy(preds: &[Prediction], manifest: &[ManifestRecord]) -> Result<f64> {
    accuracy_over(preds, manifest, QaFormat::MCQA, None)
}

/// Tag-match accuracy in percent over the tagged OpenQA records.
pub fn openqa_tag_accuracy(preds: &[Prediction], manifest: &[ManifestRecord]) -> Result<f64> {
    accuracy_over(preds, manifest, QaFormat::OpenQA, None)
}

/// `(b + r + m + c) / 4`.
pub fn mean_of_four(b: f64, r: f64, m: f64, c: f64) -> f64 {
    (b + r + m + c) / 4.0
}

/// Mean of the four AJSD metrics, times 100. Each input must lie in [0, 10].
pub fn ajsd_composite(b: f64, r: f64, m: f64, c: f64) -> Result<f64> {
    for (name, v) in [("bleu4", b), ("rouge", r), ("meteor", m), ("cider", c)] {
        if !(0.0..=METRIC_MAX).contains(&v) {
            return Err(Error::invalid(format!("{name} = {v} outside [0, {METRIC_MAX}]")));
        }
    }
    Ok(mean_of_four(b, r, m, c) * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrBinRow {
    pub snr_db: f64,
    pub count: usize,
    pub correct: usize,
    /// `None` for an empty bin.
    pub accuracy: Option<f64>,
}

/// Accuracy per SNR bin over the tagged records of `manifest` that carry
/// an SNR label, rows sorted by bin.
pub fn snr_binned_report(
    preds: &[Prediction],
    manifest: &[ManifestRecord],
    bins: &[f64],
) -> Result<Vec<SnrBinRow>> {
    let map = index_predictions(preds, manifest)?;
    let mut sorted = bins.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut rows: Vec<SnrBinRow> = sorted
        .into_iter()
        .map(|snr_db| SnrBinRow {
            snr_db,
            count: 0,
            correct: 0,
            accuracy: None,
        })
        .collect();
    for r in manifest {
        let Some(snr) = r.sample.snr_db else { continue };
        let Some(row) = rows.iter_mut().find(|row| (row.snr_db - snr).abs() < 1e-9) else {
            continue;
        };
        let text = map.get(r.sample.sample_id.as_str()).copied().unwrap_or("");
        if let Some(v) = judge(r, text, None) {
            row.count += 1;
            row.correct += usize::from(v == Verdict::Correct);
        }
    }
    for row in &mut rows {
        row.accuracy = (row.count > 0).then(|| percent(row.correct, row.count));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrTable {
    pub task: TaskFamily,
    pub format: QaFormat,
    pub rows: Vec<SnrBinRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AjsdScores {
    pub n: usize,
    pub bleu4: f64,
    pub rouge_l: f64,
    pub meteor: f64,
    pub cider: f64,
    pub composite: f64,
}

/// Scoring knobs: the text-metric parameters plus an optional SPE window.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringParams {
    /// Overrides each SPE record's own tolerance when set.
    pub spe_tolerance: Option<f64>,
    pub metrics: MetricParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub n_records: usize,
    pub n_predictions: usize,
    /// Records with no prediction at all.
    pub missing: usize,
    /// Tagged records whose prediction lacks a well-formed tag.
    pub unparseable: usize,
    /// Percent per task.
    pub mcqa_accuracy: BTreeMap<TaskFamily, f64>,
    pub openqa_accuracy: BTreeMap<TaskFamily, f64>,
    pub ajsd: Option<AjsdScores>,
    pub snr_tables: Vec<SnrTable>,
}

/// Score `preds` against `manifest`. Unknown or duplicate prediction ids are
/// errors; missing predictions score as empty outputs.
pub fn score(manifest: &[ManifestRecord], preds: &[Prediction], params: &ScoringParams) -> Result<ScoreReport> {
    let map = index_predictions(preds, manifest)?;
    let mut missing = 0;
    let mut unparseable = 0;
    let mut tallies: BTreeMap<(TaskFamily, QaFormat), (usize, usize)> = BTreeMap::new();
    let mut bins: BTreeMap<(TaskFamily, QaFormat), BTreeMap<i64, SnrBinRow>> = BTreeMap::new();
    let mut ajsd_cands: Vec<&str> = Vec::new();
    let mut ajsd_refs: Vec<&str> = Vec::new();

    for r in manifest {
        let s = &r.sample;
        let text = match map.get(s.sample_id.as_str()) {
            Some(t) => *t,
            None => {
                missing += 1;
                ""
            }
        };
        let Some(verdict) = judge(r, text, params.spe_tolerance) else {
            ajsd_cands.push(text);
            ajsd_refs.push(&s.answer);
            continue;
        };
        let ok = verdict == Verdict::Correct;
        if verdict == Verdict::Unparseable {
            unparseable += 1;
        }
        let t = tallies.entry((s.task, s.format)).or_default();
        t.0 += 1;
        t.1 += usize::from(ok);
        if let Some(snr) = s.snr_db {
            let row = bins
                .entry((s.task, s.format))
                .or_default()
                .entry((snr * 1e6).round() as i64)
                .or_insert(SnrBinRow {
                    snr_db: snr,
                    count: 0,
                    correct: 0,
                    accuracy: None,
                });
            row.count += 1;
            row.correct += usize::from(ok);
        }
    }

    let mut mcqa_accuracy = BTreeMap::new();
    let mut openqa_accuracy = BTreeMap::new();
    for (&(task, format), &(total, correct)) in &tallies {
        let target = match format {
            QaFormat::MCQA => &mut mcqa_accuracy,
            QaFormat::OpenQA => &mut openqa_accuracy,
        };
        target.insert(task, percent(correct, total));
    }

    let ajsd = if ajsd_cands.is_empty() {
        None
    } else {
        let m = &params.metrics;
        let n = ajsd_cands.len() as f64;
        let mean = |f: &dyn Fn(&str, &str) -> f64| {
            ajsd_cands
                .iter()
                .zip(&ajsd_refs)
                .map(|(c, r)| f(c, r))
                .sum::<f64>()
                / n
        };
        let bleu = mean(&|c, r| m.bleu4(c, &[r]));
        let rouge = mean(&|c, r| m.rouge_l(c, r));
        let met = mean(&|c, r| m.meteor(c, r));
        let refs: Vec<Vec<&str>> = ajsd_refs.iter().map(|r| vec![*r]).collect();
        let cid = m.cider(&ajsd_cands, &refs).iter().sum::<f64>() / n;
        Some(AjsdScores {
            n: ajsd_cands.len(),
            bleu4: bleu,
            rouge_l: rouge,
            meteor: met,
            cider: cid,
            composite: ajsd_composite(bleu, rouge, met, cid)?,
        })
    };

    let snr_tables = bins
        .into_iter()
        .map(|((task, format), rows)| SnrTable {
            task,
            format,
            rows: rows
                .into_values()
                .map(|mut row| {
                    row.accuracy = Some(percent(row.correct, row.count));
                    row
                })
                .collect(),
        })
        .collect();

    Ok(ScoreReport {
        n_records: manifest.len(),
        n_predictions: preds.len(),
        missing,
        unparseable,
        mcqa_accuracy,
        openqa_accuracy,
        ajsd,
        snr_tables,
    })
}

/// The responses a perfect model would give.
pub fn gold_predictions(manifest: &[ManifestRecord]) -> Vec<Prediction> {
    manifest
        .iter()
        .map(|r| Prediction {
            sample_id: r.sample.sample_id.clone(),
            text: r.sample.gold_response(),
        })
        .collect()
}

impl ScoreReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// SNR-binned tables as CSV; empty bins print `n/a`.
    pub fn snr_csv(&self) -> String {
        let mut out = String::from("task,format,snr_db,count,correct,accuracy\n");
        for t in &self.snr_tables {
            for row in &t.rows {
                let acc = row
                    .accuracy
                    .map_or_else(|| "n/a".to_string(), |a| format!("{a:.2}"));
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{acc}",
                    t.task, t.format, row.snr_db, row.count, row.correct
                );
            }
        }
        out
    }

    /// Headline table for the terminal.
    pub fn headline(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<6} {:>10} {:>10}", "task", "MCQA %", "OpenQA %");
        for task in TaskFamily::ALL {
            let cell = |m: &BTreeMap<TaskFamily, f64>| {
                m.get(&task).map_or_else(|| "-".to_string(), |v| format!("{v:.1}"))
            };
            if task == TaskFamily::Ajsd {
                continue;
            }
            let _ = writeln!(
                out,
                "{:<6} {:>10} {:>10}",
                task.as_str(),
                cell(&self.mcqa_accuracy),
                cell(&self.openqa_accuracy)
            );
        }
        if let Some(a) = &self.ajsd {
            let _ = writeln!(
                out,
                "AJSD   bleu4 {:.3}  rouge-l {:.3}  meteor {:.3}  cider {:.3}  composite {:.2}",
                a.bleu4, a.rouge_l, a.meteor, a.cider, a.composite
            );
        }
        let _ = writeln!(
            out,
            "records {}  predictions {}  missing {}  unparseable {}",
            self.n_records, self.n_predictions, self.missing, self.unparseable
        );
        out
    }
}
