//! Per-task dataset builds, leak-free train/bench splitting and manifests.
//!
//! A build enumerates `(task, format, index)` jobs, synthesizes and renders
//! each one independently from a per-sample seed, then sorts by sample id.
//! Splits come from a salted hash of the sample id, then two passes fix
//! them up: records sharing a content hash are forced into one split, and
//! SNR bins with too few bench items get train records promoted.

mod counts;
mod manifest;
mod split;
mod tasks;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::instrgen::{make_instruction, InstructionSample, QaFormat};
use crate::seed;
use crate::sigsynth::DeviceProfile;
use crate::views::{encode_png, render_all, RenderParams, ViewKind};
use crate::{Error, Result};

pub use counts::{desk_scale_counts, MIN_DESK_TOTAL, TABLE1, TABLE1_TOTAL};
pub use manifest::{append_manifest, read_jsonl, read_manifest, write_manifest};
pub use split::{assign_split, stratified_bench, unify_content_groups, Split};
pub use tasks::{device_profiles, EI_SNR_DB, EI_WEIGHT_DECAY};

pub const TRAIN_MANIFEST: &str = "train.jsonl";
pub const BENCH_MANIFEST: &str = "bench.jsonl";
pub const IMAGE_DIR: &str = "images";
pub const DEFAULT_SPLIT_SALT: &str = "emforge-split-v1";
/// EI MCQA needs the answer plus three other devices.
const MIN_DEVICES_FOR_MCQA: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskFamily {
    #[serde(rename = "SSD")]
    Ssd,
    #[serde(rename = "SPE")]
    Spe,
    #[serde(rename = "MR")]
    Mr,
    #[serde(rename = "PR")]
    Pr,
    #[serde(rename = "EI")]
    Ei,
    #[serde(rename = "AJSD")]
    Ajsd,
}

impl TaskFamily {
    pub const ALL: [TaskFamily; 6] = [
        TaskFamily::Ssd,
        TaskFamily::Spe,
        TaskFamily::Mr,
        TaskFamily::Pr,
        TaskFamily::Ei,
        TaskFamily::Ajsd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskFamily::Ssd => "SSD",
            TaskFamily::Spe => "SPE",
            TaskFamily::Mr => "MR",
            TaskFamily::Pr => "PR",
            TaskFamily::Ei => "EI",
            TaskFamily::Ajsd => "AJSD",
        }
    }

    /// Admissible SNR range in dB; `None` for tasks without SNR labels.
    pub fn snr_range(self) -> Option<(f64, f64)> {
        match self {
            TaskFamily::Ssd => Some((-10.0, 20.0)),
            TaskFamily::Spe => Some((-20.0, 20.0)),
            TaskFamily::Mr | TaskFamily::Pr => Some((-20.0, 18.0)),
            TaskFamily::Ei | TaskFamily::Ajsd => None,
        }
    }
}

impl fmt::Display for TaskFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskFamily::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Unsupported(format!("task `{s}`")))
    }
}

/// Per-task build settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub openqa: usize,
    pub mcqa: usize,
    /// Sorted SNR bins; empty for tasks without SNR labels.
    #[serde(default)]
    pub snr_grid_db: Vec<f64>,
    pub sample_rate_hz: f64,
    pub n_samples: usize,
}

fn grid(lo: i32, hi: i32, step: usize) -> Vec<f64> {
    (lo..=hi).step_by(step).map(f64::from).collect()
}

impl TaskSpec {
    /// Desk-scale defaults: 100 records per task.
    pub fn default_for(task: TaskFamily) -> Self {
        let (openqa, mcqa, snr_grid_db, sample_rate_hz, n_samples) = match task {
            TaskFamily::Ssd => (85, 15, grid(-10, 20, 2), 20e6, 4096),
            TaskFamily::Spe => (75, 25, grid(-20, 20, 4), 10e6, 4000),
            TaskFamily::Mr => (0, 100, grid(-20, 18, 2), 1e6, 1024),
            TaskFamily::Pr => (0, 100, grid(-20, 18, 2), 10e6, 4096),
            TaskFamily::Ei => (0, 100, Vec::new(), 5e6, 2048),
            TaskFamily::Ajsd => (100, 0, Vec::new(), 20e6, 4096),
        };
        Self {
            openqa,
            mcqa,
            snr_grid_db,
            sample_rate_hz,
            n_samples,
        }
    }

    pub fn total(&self) -> usize {
        self.openqa + self.mcqa
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub split_salt: String,
    pub bench_fraction: f64,
    pub per_bin_min: usize,
    /// Size of the synthetic EI device universe.
    pub ei_device_count: usize,
    pub tasks: BTreeMap<TaskFamily, TaskSpec>,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            split_salt: DEFAULT_SPLIT_SALT.to_string(),
            bench_fraction: 0.2,
            per_bin_min: 1,
            ei_device_count: 12,
            tasks: TaskFamily::ALL
                .into_iter()
                .map(|t| (t, TaskSpec::default_for(t)))
                .collect(),
        }
    }
}

impl CorpusSpec {
    pub fn total(&self) -> usize {
        self.tasks.values().map(TaskSpec::total).sum()
    }

    /// Replace every task's counts with the benchmark proportions at `total`.
    pub fn with_total(mut self, total: usize) -> Result<Self> {
        for (task, (openqa, mcqa)) in desk_scale_counts(total)? {
            let entry = self
                .tasks
                .entry(task)
                .or_insert_with(|| TaskSpec::default_for(task));
            entry.openqa = openqa;
            entry.mcqa = mcqa;
        }
        Ok(self)
    }

    /// Check every field; errors name the offending config path.
    pub fn validate(&self) -> Result<()> {
        if !(self.bench_fraction > 0.0 && self.bench_fraction < 1.0) {
            return Err(Error::config("corpus.bench_fraction", "must lie in (0, 1)"));
        }
        if self.split_salt.is_empty() {
            return Err(Error::config("corpus.split_salt", "must not be empty"));
        }
        for (task, spec) in &self.tasks {
            let field = |name: &str| format!("corpus.tasks.{task}.{name}");
            if !(spec.sample_rate_hz.is_finite() && spec.sample_rate_hz > 0.0) {
                return Err(Error::config(field("sample_rate_hz"), "must be positive"));
            }
            if spec.n_samples == 0 {
                return Err(Error::config(field("n_samples"), "must be positive"));
            }
            match task.snr_range() {
                Some((lo, hi)) => {
                    let g = &spec.snr_grid_db;
                    if g.is_empty() {
                        return Err(Error::config(field("snr_grid_db"), "must not be empty"));
                    }
                    if g.iter().any(|v| !v.is_finite() || *v < lo || *v > hi) {
                        return Err(Error::config(
                            field("snr_grid_db"),
                            format!("values must lie in [{lo}, {hi}] dB"),
                        ));
                    }
                    if g.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(Error::config(field("snr_grid_db"), "must be strictly increasing"));
                    }
                    // SNR cycles through the grid, so each bin holds at least
                    // `total / len` records.
                    let needed = g.len() * self.per_bin_min;
                    if spec.total() > 0 && spec.total() < needed {
                        return Err(Error::config(
                            field("snr_grid_db"),
                            format!(
                                "{} records cannot cover {} bins at per_bin_min {}; need at least {needed}",
                                spec.total(),
                                g.len(),
                                self.per_bin_min
                            ),
                        ));
                    }
                }
                None if !spec.snr_grid_db.is_empty() => {
                    return Err(Error::config(field("snr_grid_db"), "task has no SNR labels"));
                }
                None => {}
            }
            if *task == TaskFamily::Ajsd && spec.mcqa > 0 {
                return Err(Error::config(field("mcqa"), "AJSD has no MCQA format"));
            }
            if *task == TaskFamily::Ei && spec.total() > 0 && self.ei_device_count == 0 {
                return Err(Error::config("corpus.ei_device_count", "must be positive"));
            }
            if *task == TaskFamily::Ei && spec.mcqa > 0 && self.ei_device_count < MIN_DEVICES_FOR_MCQA {
                return Err(Error::config(
                    "corpus.ei_device_count",
                    format!("EI MCQA needs at least {MIN_DEVICES_FOR_MCQA} devices"),
                ));
            }
        }
        Ok(())
    }
}

/// One manifest line: the instruction record plus split and content hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    #[serde(flatten)]
    pub sample: InstructionSample,
    pub split: Split,
    /// SHA-256 over the four view PNGs and the answer.
    pub content_hash: String,
}

/// How to run a build.
#[derive(Debug, Clone)]
pub struct BuildOptions<'a> {
    pub global_seed: u64,
    pub render: RenderParams,
    /// Images and manifests go here; `None` keeps everything in memory.
    pub out_dir: Option<&'a Path>,
    /// Worker threads; output does not depend on this.
    pub workers: usize,
}

impl BuildOptions<'_> {
    pub fn in_memory(global_seed: u64) -> Self {
        BuildOptions {
            global_seed,
            render: RenderParams::default(),
            out_dir: None,
            workers: 1,
        }
    }
}

struct Job {
    task: TaskFamily,
    format: QaFormat,
    /// Running index within the task, across both formats.
    index: usize,
    sample_id: String,
}

fn sample_id(task: TaskFamily, format: QaFormat, n: usize) -> String {
    format!(
        "{}-{}-{n:06}",
        task.as_str().to_ascii_lowercase(),
        format.as_str().to_ascii_lowercase()
    )
}

fn jobs_for(task: TaskFamily, spec: &TaskSpec) -> Vec<Job> {
    let openqa = (0..spec.openqa).map(|n| (QaFormat::OpenQA, n, n));
    let mcqa = (0..spec.mcqa).map(|n| (QaFormat::MCQA, n, spec.openqa + n));
    openqa
        .chain(mcqa)
        .map(|(format, n, index)| Job {
            task,
            format,
            index,
            sample_id: sample_id(task, format, n),
        })
        .collect()
}

fn content_hash(pngs: &[Vec<u8>], answer: &str) -> String {
    let mut hasher = Sha256::new();
    for png in pngs {
        hasher.update((png.len() as u64).to_le_bytes());
        hasher.update(png);
    }
    hasher.update(answer.as_bytes());
    hex::encode(hasher.finalize())
}

fn run_job(
    job: &Job,
    corpus: &CorpusSpec,
    opts: &BuildOptions,
    devices: &[String],
    profiles: &[DeviceProfile],
) -> Result<ManifestRecord> {
    let spec = &corpus.tasks[&job.task];
    let seed = seed::derive_seed(opts.global_seed, &job.sample_id);
    let synth = tasks::synthesize(job.task, spec, job.index, seed, profiles)?;
    let render = opts.render.with_stride(synth.stride);
    let images = render_all(&synth.signal, &render)?;
    let pngs: Vec<Vec<u8>> = images.iter().map(encode_png).collect::<Result<_>>()?;
    let view_paths = ViewKind::ALL.map(|k| format!("{IMAGE_DIR}/{}", k.file_name(&job.sample_id)));
    if let Some(out) = opts.out_dir {
        for (path, png) in view_paths.iter().zip(&pngs) {
            fs::write(out.join(path), png)?;
        }
    }
    let sample = make_instruction(
        &job.sample_id,
        synth.ground_truth,
        job.format,
        view_paths,
        synth.snr_db,
        devices,
        seed::sub_seed(seed, "instruction"),
    )?;
    Ok(ManifestRecord {
        content_hash: content_hash(&pngs, &sample.answer),
        split: assign_split(&job.sample_id, &corpus.split_salt, corpus.bench_fraction),
        sample,
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))
}

/// Build one task's records with hash-based splits, sorted by sample id.
pub fn build_task(task: TaskFamily, corpus: &CorpusSpec, opts: &BuildOptions) -> Result<Vec<ManifestRecord>> {
    corpus.validate()?;
    let spec = corpus
        .tasks
        .get(&task)
        .ok_or_else(|| Error::config(format!("corpus.tasks.{task}"), "missing"))?;
    if spec.n_samples < opts.render.stft.window_len {
        return Err(Error::config(
            format!("corpus.tasks.{task}.n_samples"),
            format!("must be at least the STFT window ({})", opts.render.stft.window_len),
        ));
    }
    if let Some(out) = opts.out_dir {
        fs::create_dir_all(out.join(IMAGE_DIR))?;
    }
    let profiles = device_profiles(opts.global_seed, corpus.ei_device_count);
    let devices: Vec<String> = profiles.iter().map(|p| p.device_id.clone()).collect();
    let jobs = jobs_for(task, spec);
    let mut records: Vec<ManifestRecord> = pool(opts.workers)?.install(|| {
        jobs.par_iter()
            .map(|job| run_job(job, corpus, opts, &devices, &profiles))
            .collect::<Result<_>>()
    })?;
    records.sort_by(|a, b| a.sample.sample_id.cmp(&b.sample.sample_id));
    Ok(records)
}

/// One synthesized signal with its label, outside any build.
#[derive(Debug, Clone)]
pub struct SamplePreview {
    pub sample_id: String,
    pub signal: crate::sigsynth::IqSignal,
    pub ground_truth: crate::instrgen::GroundTruth,
    pub snr_db: Option<f64>,
    /// Render settings the build would use for this sample.
    pub render: RenderParams,
}

/// Synthesize the `index`-th record of `task` exactly as a build with the
/// same seed would, without rendering or writing anything.
pub fn preview_sample(
    corpus: &CorpusSpec,
    task: TaskFamily,
    index: usize,
    global_seed: u64,
    render: &RenderParams,
) -> Result<SamplePreview> {
    corpus.validate()?;
    let spec = corpus
        .tasks
        .get(&task)
        .ok_or_else(|| Error::config(format!("corpus.tasks.{task}"), "missing"))?;
    let job = jobs_for(task, spec).into_iter().nth(index).ok_or_else(|| {
        Error::invalid(format!("{task} has {} records; index {index} is out of range", spec.total()))
    })?;
    let profiles = device_profiles(global_seed, corpus.ei_device_count);
    let seed = seed::derive_seed(global_seed, &job.sample_id);
    let synth = tasks::synthesize(task, spec, job.index, seed, &profiles)?;
    Ok(SamplePreview {
        sample_id: job.sample_id,
        signal: synth.signal,
        ground_truth: synth.ground_truth,
        snr_db: synth.snr_db,
        render: render.with_stride(synth.stride),
    })
}

/// Per-task counts of a finished build.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TaskSummary {
    pub train: usize,
    pub bench: usize,
    pub openqa: usize,
    pub mcqa: usize,
    /// Record count per SNR bin, keyed by the bin in dB.
    pub snr_histogram: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutput {
    /// Every record, sorted by sample id.
    pub records: Vec<ManifestRecord>,
    /// Records moved to bench by SNR stratification.
    pub promoted: usize,
}

impl BuildOutput {
    pub fn split(&self, split: Split) -> Vec<ManifestRecord> {
        self.records
            .iter()
            .filter(|r| r.split == split)
            .cloned()
            .collect()
    }

    pub fn summary(&self) -> BTreeMap<TaskFamily, TaskSummary> {
        let mut out: BTreeMap<TaskFamily, TaskSummary> = BTreeMap::new();
        for r in &self.records {
            let s = out.entry(r.sample.task).or_default();
            match r.split {
                Split::Train => s.train += 1,
                Split::Bench => s.bench += 1,
            }
            match r.sample.format {
                QaFormat::OpenQA => s.openqa += 1,
                QaFormat::MCQA => s.mcqa += 1,
            }
            if let Some(snr) = r.sample.snr_db {
                *s.snr_histogram.entry(format!("{snr}")).or_default() += 1;
            }
        }
        out
    }
}

/// Build every task, unify content-hash groups, stratify the bench by SNR
/// and, with an output directory, write `train.jsonl` and `bench.jsonl`.
pub fn build_corpus(corpus: &CorpusSpec, opts: &BuildOptions) -> Result<BuildOutput> {
    corpus.validate()?;
    let mut records = Vec::with_capacity(corpus.total());
    for (&task, spec) in &corpus.tasks {
        if spec.total() > 0 {
            records.extend(build_task(task, corpus, opts)?);
        }
    }
    records.sort_by(|a, b| a.sample.sample_id.cmp(&b.sample.sample_id));
    unify_content_groups(&mut records);
    let mut promoted = 0;
    for (&task, spec) in &corpus.tasks {
        if spec.total() > 0 {
            promoted += stratified_bench(&mut records, task, &spec.snr_grid_db, corpus.per_bin_min)?;
        }
    }
    let output = BuildOutput { records, promoted };
    if let Some(out) = opts.out_dir {
        write_manifest(&output.split(Split::Train), &out.join(TRAIN_MANIFEST))?;
        write_manifest(&output.split(Split::Bench), &out.join(BENCH_MANIFEST))?;
    }
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(task: TaskFamily, openqa: usize, mcqa: usize) -> CorpusSpec {
        let mut spec = CorpusSpec::default();
        for (t, s) in spec.tasks.iter_mut() {
            if *t == task {
                s.openqa = openqa;
                s.mcqa = mcqa;
            } else {
                s.openqa = 0;
                s.mcqa = 0;
            }
        }
        spec
    }

    fn small_render() -> BuildOptions<'static> {
        let mut opts = BuildOptions::in_memory(11);
        opts.render.size = 32;
        opts
    }

    #[test]
    fn default_spec_is_valid_and_desk_sized() {
        let spec = CorpusSpec::default();
        spec.validate().unwrap();
        assert_eq!(spec.total(), 600);
    }

    #[test]
    fn mr_count_contract() {
        let spec = tiny(TaskFamily::Mr, 0, 22);
        let records = build_task(TaskFamily::Mr, &spec, &small_render()).unwrap();
        assert_eq!(records.len(), 22);
        for r in &records {
            assert_eq!(r.sample.options.as_ref().unwrap().len(), 5);
            r.sample.validate().unwrap();
        }
    }

    #[test]
    fn ssd_covers_all_sources() {
        let spec = tiny(TaskFamily::Ssd, 18, 0);
        let records = build_task(TaskFamily::Ssd, &spec, &small_render()).unwrap();
        let mut sources = std::collections::BTreeSet::new();
        for r in &records {
            if let crate::instrgen::GroundTruth::Ssd { source, .. } = r.sample.ground_truth {
                sources.insert(source);
            }
        }
        assert_eq!(sources.len(), 3);
    }

    #[test]
    fn every_task_builds_and_validates() {
        let mut spec = CorpusSpec::default();
        for s in spec.tasks.values_mut() {
            s.openqa = s.openqa.min(3);
            s.mcqa = s.mcqa.min(3);
        }
        spec.per_bin_min = 0;
        let out = build_corpus(&spec, &small_render()).unwrap();
        assert_eq!(out.records.len(), spec.total());
        for r in &out.records {
            r.sample.validate().unwrap();
        }
    }

    #[test]
    fn validation_names_the_field() {
        let mut spec = CorpusSpec::default();
        spec.tasks.get_mut(&TaskFamily::Ssd).unwrap().snr_grid_db = vec![-30.0, 0.0];
        let err = spec.validate().unwrap_err().to_string();
        assert!(err.contains("corpus.tasks.SSD.snr_grid_db"), "{err}");

        let mut spec = CorpusSpec::default();
        spec.ei_device_count = 3;
        assert!(spec.validate().is_err());

        let mut spec = CorpusSpec::default();
        spec.tasks.get_mut(&TaskFamily::Ajsd).unwrap().mcqa = 1;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn task_names_round_trip() {
        for t in TaskFamily::ALL {
            assert_eq!(t.as_str().parse::<TaskFamily>().unwrap(), t);
        }
        assert_eq!(sample_id(TaskFamily::Mr, QaFormat::MCQA, 12), "mr-mcqa-000012");
    }
}
