//! OpenQA / MCQA instruction records.
//!
//! MCQA items always carry five options labeled A–E: the ground truth, three
//! distractors and the literal "Unable to answer". OpenQA answers are wrapped
//! in a task-specific tag, except AJSD which answers in free text.

mod ajsd;
mod distractors;
mod templates;

use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::corpus::TaskFamily;
use crate::seed;
use crate::sigsynth::{ModulationKind, ProtocolClass, SceneLabels};
use crate::{Error, Result};

pub use ajsd::{make_ajsd_openqa, strategy_clause, NO_JAMMING_REFERENCE};
pub use distractors::{make_mcqa_numeric, DistractorPolicy, Quantity};

pub const UNABLE_TO_ANSWER: &str = "Unable to answer";
pub const OPTION_LETTERS: [char; 5] = ['A', 'B', 'C', 'D', 'E'];
/// Number of time segments an SSD capture is split into.
pub const SSD_SEGMENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QaFormat {
    OpenQA,
    MCQA,
}

impl QaFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            QaFormat::OpenQA => "OpenQA",
            QaFormat::MCQA => "MCQA",
        }
    }
}

impl fmt::Display for QaFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Structured output tag. MCQA answers use `answer`; each OpenQA task has its
/// own tag; AJSD answers are untagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagKind {
    Answer,
    Mode,
    Value,
    Segment,
    Protocol,
    Device,
    None,
}

impl TagKind {
    pub fn name(self) -> Option<&'static str> {
        match self {
            TagKind::Answer => Some("answer"),
            TagKind::Mode => Some("mode"),
            TagKind::Value => Some("value"),
            TagKind::Segment => Some("segment"),
            TagKind::Protocol => Some("protocol"),
            TagKind::Device => Some("device"),
            TagKind::None => None,
        }
    }

    /// The OpenQA tag of a task. Determined by the task alone.
    pub fn for_openqa(task: TaskFamily) -> TagKind {
        match task {
            TaskFamily::Ssd => TagKind::Segment,
            TaskFamily::Spe => TagKind::Value,
            TaskFamily::Mr => TagKind::Mode,
            TaskFamily::Pr => TagKind::Protocol,
            TaskFamily::Ei => TagKind::Device,
            TaskFamily::Ajsd => TagKind::None,
        }
    }

    pub fn wrap(self, payload: &str) -> String {
        match self.name() {
            Some(name) => format!("<{name}>{payload}</{name}>"),
            None => payload.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentClass {
    Radar,
    Communication,
    Noise,
}

impl SegmentClass {
    pub const ALL: [SegmentClass; 3] = [
        SegmentClass::Radar,
        SegmentClass::Communication,
        SegmentClass::Noise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SegmentClass::Radar => "radar",
            SegmentClass::Communication => "communication",
            SegmentClass::Noise => "noise",
        }
    }
}

impl FromStr for SegmentClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SegmentClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown segment class `{s}`")))
    }
}

/// Canonical per-segment label string, e.g. `noise,radar,radar,noise`.
pub fn segment_label(segments: &[SegmentClass]) -> String {
    segments
        .iter()
        .map(|s| s.as_str())
        .collect::<Vec<_>>()
        .join(",")
}

/// Every SSD label the generator can produce: all-noise, plus one
/// contiguous run of radar or communication activity.
pub fn ssd_label_universe() -> Vec<String> {
    let mut out = vec![segment_label(&[SegmentClass::Noise; SSD_SEGMENTS])];
    for class in [SegmentClass::Radar, SegmentClass::Communication] {
        for start in 0..SSD_SEGMENTS {
            for end in start..SSD_SEGMENTS {
                let segs: Vec<SegmentClass> = (0..SSD_SEGMENTS)
                    .map(|i| if (start..=end).contains(&i) { class } else { SegmentClass::Noise })
                    .collect();
                out.push(segment_label(&segs));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeParameter {
    PulseWidth,
    Period,
    Count,
    Delay,
}

impl SpeParameter {
    pub const ALL: [SpeParameter; 4] = [
        SpeParameter::PulseWidth,
        SpeParameter::Period,
        SpeParameter::Count,
        SpeParameter::Delay,
    ];

    pub fn description(self) -> &'static str {
        match self {
            SpeParameter::PulseWidth => "pulse width",
            SpeParameter::Period => "pulse repetition period",
            SpeParameter::Count => "number of pulses",
            SpeParameter::Delay => "time delay of the first pulse",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            SpeParameter::Count => "",
            _ => "µs",
        }
    }

    pub fn decimals(self) -> usize {
        match self {
            SpeParameter::Count => 0,
            _ => 1,
        }
    }

    /// Scoring window half-width: ±1 µs for times, exact for counts.
    pub fn tolerance(self) -> f64 {
        match self {
            SpeParameter::Count => 0.0,
            _ => 1.0,
        }
    }
}

/// Task-specific ground truth embedded in each record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task")]
pub enum GroundTruth {
    #[serde(rename = "SSD")]
    Ssd {
        source: SegmentClass,
        segments: Vec<SegmentClass>,
    },
    #[serde(rename = "SPE")]
    Spe {
        parameter: SpeParameter,
        value: f64,
        tolerance: f64,
    },
    #[serde(rename = "MR")]
    Mr { modulation: ModulationKind },
    #[serde(rename = "PR")]
    Pr { protocol: ProtocolClass },
    #[serde(rename = "EI")]
    Ei { device_id: String },
    #[serde(rename = "AJSD")]
    Ajsd { labels: SceneLabels },
}

impl GroundTruth {
    pub fn task(&self) -> TaskFamily {
        match self {
            GroundTruth::Ssd { .. } => TaskFamily::Ssd,
            GroundTruth::Spe { .. } => TaskFamily::Spe,
            GroundTruth::Mr { .. } => TaskFamily::Mr,
            GroundTruth::Pr { .. } => TaskFamily::Pr,
            GroundTruth::Ei { .. } => TaskFamily::Ei,
            GroundTruth::Ajsd { .. } => TaskFamily::Ajsd,
        }
    }

    /// Canonical answer payload: label spelling for categorical tasks, the
    /// number at its parameter's precision for SPE (unit in the question).
    pub fn canonical(&self) -> String {
        match self {
            GroundTruth::Ssd { segments, .. } => segment_label(segments),
            GroundTruth::Spe {
                parameter, value, ..
            } => format!("{:.*}", parameter.decimals(), value),
            GroundTruth::Mr { modulation } => modulation.as_str().to_string(),
            GroundTruth::Pr { protocol } => protocol.as_str().to_string(),
            GroundTruth::Ei { device_id } => device_id.clone(),
            GroundTruth::Ajsd { labels } => ajsd::reference_text(labels),
        }
    }
}

/// MCQA options in A–E order and the letter of the correct one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McqaOptions {
    pub options: Vec<String>,
    pub correct: char,
}

impl McqaOptions {
    pub fn correct_text(&self) -> &str {
        let idx = OPTION_LETTERS
            .iter()
            .position(|&l| l == self.correct)
            .expect("letter A–E");
        &self.options[idx]
    }

    /// Shuffle the ground truth, distractors and "Unable to answer" together.
    fn shuffled(gt: String, distractors: Vec<String>, seed: u64) -> Self {
        let mut options = Vec::with_capacity(5);
        options.push(gt.clone());
        options.extend(distractors);
        options.push(UNABLE_TO_ANSWER.to_string());
        options.shuffle(&mut seed::rng(seed));
        let idx = options.iter().position(|o| *o == gt).expect("ground truth present");
        Self {
            options,
            correct: OPTION_LETTERS[idx],
        }
    }
}

/// Categorical MCQA: three distinct wrong labels drawn without replacement.
pub fn make_mcqa_categorical(gt: &str, universe: &[String], seed: u64) -> Result<McqaOptions> {
    if !universe.iter().any(|u| u == gt) {
        return Err(Error::invalid(format!("label universe does not contain `{gt}`")));
    }
    let mut others: Vec<&String> = universe.iter().filter(|u| *u != gt).collect();
    others.sort();
    others.dedup();
    if others.len() < 3 {
        return Err(Error::UniverseTooSmall {
            needed: 3,
            available: others.len(),
        });
    }
    let mut rng = seed::rng(seed::sub_seed(seed, "distractors"));
    let picked: Vec<String> = others
        .choose_multiple(&mut rng, 3)
        .map(|s| (*s).clone())
        .collect();
    Ok(McqaOptions::shuffled(
        gt.to_string(),
        picked,
        seed::sub_seed(seed, "shuffle"),
    ))
}

/// OpenQA question and tagged answer for every task except AJSD.
pub fn make_openqa(gt: &GroundTruth, seed: u64) -> Result<(String, String)> {
    let task = gt.task();
    if task == TaskFamily::Ajsd {
        return Err(Error::invalid(
            "AJSD answers are free text; use make_ajsd_openqa",
        ));
    }
    let tag = TagKind::for_openqa(task);
    let question = templates::openqa_question(gt, tag, seed);
    Ok((question, tag.wrap(&gt.canonical())))
}

/// One instruction record as stored in manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionSample {
    pub sample_id: String,
    pub task: TaskFamily,
    pub format: QaFormat,
    /// Constellation, FFT spectrum, STFT spectrogram, IQ waveform.
    pub view_paths: [String; 4],
    pub question: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub options: Option<Vec<String>>,
    /// Option letter for MCQA; the tagged answer (or free text) for OpenQA.
    pub answer: String,
    pub tag: TagKind,
    pub snr_db: Option<f64>,
    pub ground_truth: GroundTruth,
}

impl InstructionSample {
    /// The exact assistant response a perfect model would give.
    pub fn gold_response(&self) -> String {
        match self.format {
            QaFormat::MCQA => TagKind::Answer.wrap(&self.answer),
            QaFormat::OpenQA => self.answer.clone(),
        }
    }

    /// Correct option letter for MCQA items.
    pub fn correct_letter(&self) -> Option<char> {
        match self.format {
            QaFormat::MCQA => self.answer.chars().next(),
            QaFormat::OpenQA => None,
        }
    }

    /// Check the structural invariants of the record.
    pub fn validate(&self) -> Result<()> {
        if self.ground_truth.task() != self.task {
            return Err(Error::invalid(format!(
                "{}: ground truth belongs to {}",
                self.sample_id,
                self.ground_truth.task()
            )));
        }
        match self.format {
            QaFormat::MCQA => {
                let options = self
                    .options
                    .as_ref()
                    .ok_or_else(|| Error::invalid(format!("{}: MCQA without options", self.sample_id)))?;
                if options.len() != 5 {
                    return Err(Error::invalid(format!(
                        "{}: {} options instead of 5",
                        self.sample_id,
                        options.len()
                    )));
                }
                if options.iter().filter(|o| *o == UNABLE_TO_ANSWER).count() != 1 {
                    return Err(Error::invalid(format!(
                        "{}: missing \"{UNABLE_TO_ANSWER}\"",
                        self.sample_id
                    )));
                }
                let gt = self.ground_truth.canonical();
                let hits: Vec<usize> = options
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| option_matches(&self.ground_truth, o, &gt))
                    .map(|(i, _)| i)
                    .collect();
                let letter = self.correct_letter().unwrap_or('?');
                if hits.len() != 1 || OPTION_LETTERS[hits[0]] != letter {
                    return Err(Error::invalid(format!(
                        "{}: expected exactly one correct option at {letter}",
                        self.sample_id
                    )));
                }
                if self.tag != TagKind::Answer {
                    return Err(Error::invalid(format!("{}: MCQA must use <answer>", self.sample_id)));
                }
            }
            QaFormat::OpenQA => {
                if self.options.is_some() {
                    return Err(Error::invalid(format!("{}: OpenQA with options", self.sample_id)));
                }
                let tag = TagKind::for_openqa(self.task);
                if self.tag != tag || self.answer != tag.wrap(&self.ground_truth.canonical()) {
                    return Err(Error::invalid(format!(
                        "{}: answer is not the tagged ground truth",
                        self.sample_id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Numeric options are compared by value at the parameter's precision.
fn option_matches(gt: &GroundTruth, option: &str, canonical: &str) -> bool {
    match gt {
        GroundTruth::Spe { parameter, value, .. } => {
            Quantity::new(*value, parameter.unit(), parameter.decimals()).format() == option
        }
        _ => option == canonical,
    }
}

/// Categorical label universe for an MCQA task.
pub fn label_universe(task: TaskFamily, devices: &[String]) -> Vec<String> {
    match task {
        TaskFamily::Ssd => ssd_label_universe(),
        TaskFamily::Mr => ModulationKind::ALL.iter().map(|k| k.as_str().to_string()).collect(),
        TaskFamily::Pr => ProtocolClass::ALL.iter().map(|c| c.as_str().to_string()).collect(),
        TaskFamily::Ei => devices.to_vec(),
        TaskFamily::Spe | TaskFamily::Ajsd => Vec::new(),
    }
}

/// Build a complete record for one labeled signal.
pub fn make_instruction(
    sample_id: &str,
    ground_truth: GroundTruth,
    format: QaFormat,
    view_paths: [String; 4],
    snr_db: Option<f64>,
    devices: &[String],
    seed: u64,
) -> Result<InstructionSample> {
    let task = ground_truth.task();
    let (question, options, answer, tag) = match (format, &ground_truth) {
        (QaFormat::OpenQA, GroundTruth::Ajsd { labels }) => {
            let (q, reference) = make_ajsd_openqa(labels, seed)?;
            (q, None, reference, TagKind::None)
        }
        (QaFormat::MCQA, GroundTruth::Ajsd { .. }) => {
            return Err(Error::Unsupported("AJSD has no MCQA format".into()));
        }
        (QaFormat::OpenQA, gt) => {
            let (q, a) = make_openqa(gt, seed)?;
            (q, None, a, TagKind::for_openqa(task))
        }
        (QaFormat::MCQA, GroundTruth::Spe { parameter, value, tolerance }) => {
            let quantity = Quantity::new(*value, parameter.unit(), parameter.decimals());
            let policy = DistractorPolicy::for_parameter(*parameter);
            let mcqa = make_mcqa_numeric(&quantity, *tolerance, &policy, seed)?;
            let q = templates::mcqa_question(&ground_truth, &mcqa.options, seed);
            (q, Some(mcqa.options), mcqa.correct.to_string(), TagKind::Answer)
        }
        (QaFormat::MCQA, gt) => {
            let universe = label_universe(task, devices);
            let mcqa = make_mcqa_categorical(&gt.canonical(), &universe, seed)?;
            let q = templates::mcqa_question(gt, &mcqa.options, seed);
            (q, Some(mcqa.options), mcqa.correct.to_string(), TagKind::Answer)
        }
    };
    Ok(InstructionSample {
        sample_id: sample_id.to_string(),
        task,
        format,
        view_paths,
        question,
        options,
        answer,
        tag,
        snr_db,
        ground_truth,
    })
}
