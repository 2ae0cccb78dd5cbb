//! Rule-based AJSD references: a detection clause citing what the views
//! show, then one countermeasure per jammer kind in kind order.

use crate::sigsynth::{JammerKind, SceneLabels, VictimMode};
use crate::Result;

use super::templates;

pub const NO_JAMMING_REFERENCE: &str = "No jamming detected: the spectrum shows no dominant \
peaks above the noise floor and the spectrogram shows no sweep ridge. No countermeasure needed; \
keep the current frequency and waveform.";

/// Countermeasure sentence fragment for one jammer kind.
pub fn strategy_clause(kind: JammerKind) -> &'static str {
    match kind {
        JammerKind::Tone => "notch filtering at the jammed frequency combined with frequency hopping",
        JammerKind::Multitone => {
            "multi-notch filtering of the jammed tones with frequency hopping to clear channels"
        }
        JammerKind::NoiseBand => "spread spectrum processing gain with band evasion to a clean sub-band",
        JammerKind::LfmSweep => "frequency hopping with sweep-avoidance timing locked to the sweep period",
        JammerKind::PhaseCode => "mismatched filtering with waveform agility against the coded emission",
    }
}

fn evidence(kind: JammerKind, offset_hz: f64) -> String {
    let at = format!("{:+.2} MHz", offset_hz / 1e6);
    match kind {
        JammerKind::Tone => format!("a single narrowband peak at {at}"),
        JammerKind::Multitone => format!("a comb of three narrowband peaks centered at {at}"),
        JammerKind::NoiseBand => format!("a raised noise plateau centered at {at}"),
        JammerKind::LfmSweep => format!("a repeating linear sweep ridge centered at {at}"),
        JammerKind::PhaseCode => format!("a wideband phase-coded emission centered at {at}"),
    }
}

fn peak_count(kind: JammerKind) -> usize {
    match kind {
        JammerKind::Tone => 1,
        JammerKind::Multitone => 3,
        _ => 0,
    }
}

fn victim(mode: VictimMode) -> &'static str {
    match mode {
        VictimMode::RadarMode => "radar",
        VictimMode::CommMode => "communication",
    }
}

pub(super) fn reference_text(labels: &SceneLabels) -> String {
    if labels.jammers.is_empty() {
        return NO_JAMMING_REFERENCE.to_string();
    }
    let mut jammers = labels.jammers.clone();
    jammers.sort_by(|a, b| {
        a.kind
            .cmp(&b.kind)
            .then(a.center_offset_hz.total_cmp(&b.center_offset_hz))
    });

    let peaks: usize = jammers.iter().map(|j| peak_count(j.kind)).sum();
    let ridge = if jammers.iter().any(|j| j.kind == JammerKind::LfmSweep) {
        " and the spectrogram shows a sweep ridge"
    } else {
        ""
    };
    let causes: Vec<String> = jammers
        .iter()
        .map(|j| evidence(j.kind, j.center_offset_hz))
        .collect();
    let detection = format!(
        "Jamming detected against the {} link: the spectrum shows {peaks} dominant spectral peak{}{ridge}, caused by {}.",
        victim(labels.victim_mode),
        if peaks == 1 { "" } else { "s" },
        causes.join(" and ")
    );

    let mut kinds: Vec<JammerKind> = jammers.iter().map(|j| j.kind).collect();
    kinds.dedup();
    let strategy = if kinds.len() == 1 {
        format!("Recommended countermeasure: {}.", strategy_clause(kinds[0]))
    } else {
        let ranked: Vec<String> = kinds
            .iter()
            .enumerate()
            .map(|(i, k)| format!("{}) {}", i + 1, strategy_clause(*k)))
            .collect();
        format!("Ranked countermeasures: {}.", ranked.join("; "))
    };
    format!("{detection} {strategy}")
}

/// Question and free-text reference strategy for a jamming scene.
pub fn make_ajsd_openqa(labels: &SceneLabels, seed: u64) -> Result<(String, String)> {
    let question = templates::ajsd_question(victim(labels.victim_mode), seed);
    Ok((question, reference_text(labels)))
}
