use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{complex_gaussian, dsp, gen_noise, gen_radar_pulse_train, modulate, IqSignal};
use super::{ModulationKind, Payload, RadarPulseSpec};
use crate::{seed, Error, Result};

/// Ordered as the strategy rule table lists them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JammerKind {
    Tone,
    Multitone,
    NoiseBand,
    LfmSweep,
    PhaseCode,
}

impl JammerKind {
    pub const ALL: [JammerKind; 5] = [
        JammerKind::Tone,
        JammerKind::Multitone,
        JammerKind::NoiseBand,
        JammerKind::LfmSweep,
        JammerKind::PhaseCode,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            JammerKind::Tone => "tone",
            JammerKind::Multitone => "multitone",
            JammerKind::NoiseBand => "noise-band",
            JammerKind::LfmSweep => "LFM-sweep",
            JammerKind::PhaseCode => "phase-code",
        }
    }
}

impl fmt::Display for JammerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jammer {
    pub kind: JammerKind,
    /// Power relative to the unit-power background, in dB.
    pub power_db_rel: f64,
    pub center_offset_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VictimMode {
    RadarMode,
    CommMode,
}

impl VictimMode {
    pub fn as_str(self) -> &'static str {
        match self {
            VictimMode::RadarMode => "radar-mode",
            VictimMode::CommMode => "comm-mode",
        }
    }
}

/// Source of the scene background. Every background is scaled to unit power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Background {
    Noise,
    Radar(RadarPulseSpec),
    Comm(ModulationKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JammingScene {
    pub background: Background,
    pub jammers: Vec<Jammer>,
    pub victim_mode: VictimMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JammerLabel {
    pub kind: JammerKind,
    pub center_offset_hz: f64,
    pub power_db_rel: f64,
}

/// Ground truth handed to instruction generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneLabels {
    pub victim_mode: VictimMode,
    /// No jammers over a pure-noise background.
    pub noise_only: bool,
    pub jammers: Vec<JammerLabel>,
}

/// Background plus every jammer at its relative power.
pub fn gen_jamming_scene(
    scene: &JammingScene,
    duration_us: f64,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<(IqSignal, SceneLabels)> {
    for j in &scene.jammers {
        if !(j.power_db_rel.is_finite() && j.center_offset_hz.is_finite()) {
            return Err(Error::invalid(format!("{} jammer parameters must be finite", j.kind)));
        }
        if j.center_offset_hz.abs() >= sample_rate_hz / 2.0 {
            return Err(Error::invalid(format!(
                "{} jammer offset {} Hz outside the band",
                j.kind, j.center_offset_hz
            )));
        }
    }
    let n = (duration_us * 1e-6 * sample_rate_hz).round() as usize;
    if n == 0 {
        return Err(Error::invalid("duration shorter than one sample"));
    }

    let mut samples = background(&scene.background, n, duration_us, sample_rate_hz, seed)?;
    for (i, j) in scene.jammers.iter().enumerate() {
        let jseed = seed::sub_seed(seed, &format!("jammer-{i}"));
        let wave = jammer_wave(j, n, sample_rate_hz, jseed);
        let amp = 10f64.powf(j.power_db_rel / 20.0);
        for (s, w) in samples.iter_mut().zip(wave) {
            *s += w * amp;
        }
    }

    let labels = SceneLabels {
        victim_mode: scene.victim_mode,
        noise_only: scene.jammers.is_empty() && scene.background == Background::Noise,
        jammers: scene
            .jammers
            .iter()
            .map(|j| JammerLabel {
                kind: j.kind,
                center_offset_hz: j.center_offset_hz,
                power_db_rel: j.power_db_rel,
            })
            .collect(),
    };
    Ok((IqSignal::new(samples, sample_rate_hz)?, labels))
}

fn background(
    source: &Background,
    n: usize,
    duration_us: f64,
    fs: f64,
    seed: u64,
) -> Result<Vec<Complex64>> {
    let bseed = seed::sub_seed(seed, "background");
    let mut samples = match source {
        Background::Noise => gen_noise(n, fs, bseed)?.into_samples(),
        Background::Radar(spec) => gen_radar_pulse_train(spec, duration_us, fs)?.into_samples(),
        Background::Comm(kind) => {
            let sps = 8;
            let payload = if kind.is_analog() {
                Payload::Analog {
                    seed: bseed,
                    n_samples: n,
                }
            } else {
                let bps = kind.bits_per_symbol().unwrap_or(1);
                let mut rng = seed::rng(bseed);
                Payload::Bits((0..n.div_ceil(sps) * bps).map(|_| rng.random_range(0..2)).collect())
            };
            let mut s = modulate(*kind, &payload, sps, fs)?.into_samples();
            s.truncate(n);
            s
        }
    };
    samples.resize(n, Complex64::new(0.0, 0.0));
    dsp::normalize_power(&mut samples);
    Ok(samples)
}

/// One jammer waveform at unit power.
fn jammer_wave(j: &Jammer, n: usize, fs: f64, seed: u64) -> Vec<Complex64> {
    let mut wave = match j.kind {
        JammerKind::Tone => vec![Complex64::new(1.0, 0.0); n],
        JammerKind::Multitone => {
            let spacing = fs / 64.0;
            (0..n)
                .map(|i| {
                    [-spacing, 0.0, spacing]
                        .iter()
                        .map(|f| Complex64::from_polar(1.0, 2.0 * PI * f * i as f64 / fs))
                        .sum::<Complex64>()
                })
                .collect()
        }
        JammerKind::NoiseBand => {
            let mut noise = complex_gaussian(n, 1.0, seed);
            if n > 2 {
                dsp::brickwall_lowpass(&mut noise, 1.0 / 32.0);
            }
            noise
        }
        JammerKind::LfmSweep => {
            // Sawtooth sweep over fs/8, four sweeps per capture.
            let band = fs / 8.0;
            let period = (n / 4).max(1);
            let mut phase = 0.0;
            (0..n)
                .map(|i| {
                    let frac = (i % period) as f64 / period as f64;
                    let f = -band / 2.0 + band * frac;
                    let out = Complex64::from_polar(1.0, phase);
                    phase += 2.0 * PI * f / fs;
                    out
                })
                .collect()
        }
        JammerKind::PhaseCode => {
            let chip = 32;
            let mut rng = seed::rng(seed);
            let chips: Vec<f64> = (0..n.div_ceil(chip))
                .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
                .collect();
            (0..n).map(|i| Complex64::new(chips[i / chip], 0.0)).collect()
        }
    };
    dsp::normalize_power(&mut wave);
    dsp::frequency_shift(&mut wave, j.center_offset_hz, fs);
    wave
}
