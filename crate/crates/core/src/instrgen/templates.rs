//! Question wording. Three phrasings per task, picked by seed.

use rand::Rng;

use super::{GroundTruth, SpeParameter, TagKind, OPTION_LETTERS};
use crate::seed;

fn pick<'a>(variants: &[&'a str], seed: u64) -> &'a str {
    let mut rng = seed::rng(seed::sub_seed(seed, "template"));
    variants[rng.random_range(0..variants.len())]
}

fn spe_stem(parameter: SpeParameter, seed: u64) -> String {
    let what = parameter.description();
    let v = pick(
        &[
            "Estimate the {} of this radar pulse train.",
            "What is the {} of the pulses shown in these views?",
            "Measure the {} of the radar signal.",
        ],
        seed,
    );
    v.replace("{}", what)
}

fn stem(gt: &GroundTruth, seed: u64) -> String {
    let fixed = match gt {
        GroundTruth::Ssd { .. } => [
            "Split this capture into four equal time segments and label each one as radar, communication or noise.",
            "Which of the four equal time segments of this capture contain radar, communication or only noise?",
            "Detect the signal in each quarter of the capture and label it radar, communication or noise.",
        ],
        GroundTruth::Spe { parameter, .. } => return spe_stem(*parameter, seed),
        GroundTruth::Mr { .. } => [
            "Which modulation scheme does this signal use?",
            "Identify the modulation of the signal shown in these views.",
            "What is the modulation type of this signal?",
        ],
        GroundTruth::Pr { .. } => [
            "Which protocol class produced these bursts?",
            "Identify the protocol of the bursts shown in these views.",
            "What kind of protocol transmission is this?",
        ],
        GroundTruth::Ei { .. } => [
            "Which transmitter device emitted this signal?",
            "Identify the emitter that produced this capture.",
            "Name the device whose hardware fingerprint matches this signal.",
        ],
        GroundTruth::Ajsd { .. } => [
            "Is this capture jammed? Recommend a countermeasure.",
            "Describe any jamming in these views and how to counter it.",
            "Recommend an anti-jamming strategy for this capture.",
        ],
    };
    pick(&fixed, seed).to_string()
}

fn answer_hint(gt: &GroundTruth, tag: TagKind) -> String {
    let placeholder = match gt {
        GroundTruth::Ssd { .. } => "label,label,label,label".to_string(),
        GroundTruth::Spe { parameter, .. } => match parameter.unit() {
            "" => "integer".to_string(),
            unit => format!("number in {unit}"),
        },
        GroundTruth::Mr { .. } => "modulation".to_string(),
        GroundTruth::Pr { .. } => "protocol class".to_string(),
        GroundTruth::Ei { .. } => "device id".to_string(),
        GroundTruth::Ajsd { .. } => String::new(),
    };
    format!("Only output the result in the form {}.", tag.wrap(&placeholder))
}

pub(super) fn openqa_question(gt: &GroundTruth, tag: TagKind, seed: u64) -> String {
    format!("{} {}", stem(gt, seed), answer_hint(gt, tag))
}

pub(super) fn mcqa_question(gt: &GroundTruth, options: &[String], seed: u64) -> String {
    let mut q = stem(gt, seed);
    if let GroundTruth::Spe { parameter, .. } = gt {
        if !parameter.unit().is_empty() {
            q.push_str(&format!(" Values are in {}.", parameter.unit()));
        }
    }
    q.push_str("\nOptions:");
    for (letter, option) in OPTION_LETTERS.iter().zip(options) {
        q.push_str(&format!("\n{letter}. {option}"));
    }
    q.push_str("\nAnswer with the option letter in the form <answer>X</answer>.");
    q
}

pub(super) fn ajsd_question(victim: &str, seed: u64) -> String {
    let v = pick(
        &[
            "These four views show a {} receiver capture. Is it being jammed? Explain the evidence and recommend an anti-jamming strategy.",
            "Analyze this {} capture for interference, state what the views show and propose a countermeasure.",
            "A {} link sees the signal below. Identify any jamming and recommend how to respond.",
        ],
        seed,
    );
    v.replace("{}", victim)
}
