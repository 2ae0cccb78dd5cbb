use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::IqSignal;
use crate::{Error, Result};

/// Modulation inside each pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IntraPulse {
    /// Unmodulated carrier.
    Cw,
    /// Linear chirp from `-sweep_hz/2` to `+sweep_hz/2` across the pulse.
    Lfm { sweep_hz: f64 },
    /// Binary phase code; chip `0` is phase 0, chip `1` is phase π.
    PhaseCode { chips: Vec<u8> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarPulseSpec {
    pub pulse_width_us: f64,
    pub period_us: f64,
    pub count: usize,
    pub delay_us: f64,
    pub intra_pulse: IntraPulse,
}

impl RadarPulseSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.pulse_width_us, self.period_us, self.delay_us]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("radar timing values must be finite"));
        }
        if self.pulse_width_us <= 0.0 || self.period_us <= 0.0 {
            return Err(Error::invalid("pulse width and period must be positive"));
        }
        if self.pulse_width_us >= self.period_us {
            return Err(Error::invalid(format!(
                "pulse width {} µs must be shorter than period {} µs",
                self.pulse_width_us, self.period_us
            )));
        }
        if self.count == 0 {
            return Err(Error::invalid("pulse count must be positive"));
        }
        if self.delay_us < 0.0 {
            return Err(Error::invalid("delay must be nonnegative"));
        }
        match &self.intra_pulse {
            IntraPulse::Cw => {}
            IntraPulse::Lfm { sweep_hz } if !sweep_hz.is_finite() => {
                return Err(Error::invalid("LFM sweep must be finite"));
            }
            IntraPulse::Lfm { .. } => {}
            IntraPulse::PhaseCode { chips } => {
                if chips.is_empty() || chips.iter().any(|&c| c > 1) {
                    return Err(Error::invalid("phase code must be a nonempty 0/1 chip sequence"));
                }
            }
        }
        Ok(())
    }

    /// Time from 0 to the end of the last period.
    pub fn span_us(&self) -> f64 {
        self.delay_us + self.count as f64 * self.period_us
    }
}

/// Sample index ranges of every pulse: edges are rounded to the nearest
/// sample boundary.
pub fn pulse_index_ranges(spec: &RadarPulseSpec, sample_rate_hz: f64) -> Vec<Range<usize>> {
    let to_index = |t_us: f64| (t_us * 1e-6 * sample_rate_hz).round() as usize;
    (0..spec.count)
        .map(|i| {
            let start_us = spec.delay_us + i as f64 * spec.period_us;
            to_index(start_us)..to_index(start_us + spec.pulse_width_us)
        })
        .collect()
}

/// Unit-envelope pulse train: amplitude 1 inside pulses, exactly 0 outside.
pub fn gen_radar_pulse_train(
    spec: &RadarPulseSpec,
    duration_us: f64,
    sample_rate_hz: f64,
) -> Result<IqSignal> {
    spec.validate()?;
    if !(duration_us.is_finite() && duration_us > 0.0) {
        return Err(Error::invalid("duration must be positive"));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    // Small slack absorbs float noise in delay + count·period.
    if spec.span_us() > duration_us * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "pulse train spans {} µs but the signal lasts only {duration_us} µs",
            spec.span_us()
        )));
    }
    let n = (duration_us * 1e-6 * sample_rate_hz).round() as usize;
    if n == 0 {
        return Err(Error::invalid("duration shorter than one sample"));
    }
    let mut samples = vec![Complex64::new(0.0, 0.0); n];
    for range in pulse_index_ranges(spec, sample_rate_hz) {
        let len = range.len();
        for (j, idx) in range.enumerate() {
            if idx < n {
                samples[idx] = intra_pulse_sample(&spec.intra_pulse, j, len, sample_rate_hz);
            }
        }
    }
    IqSignal::new(samples, sample_rate_hz)
}

fn intra_pulse_sample(kind: &IntraPulse, j: usize, len: usize, fs: f64) -> Complex64 {
    match kind {
        IntraPulse::Cw => Complex64::new(1.0, 0.0),
        IntraPulse::Lfm { sweep_hz } => {
            let t = j as f64 / fs;
            let width = len as f64 / fs;
            let phase = 2.0 * PI * (-sweep_hz / 2.0 * t + sweep_hz / (2.0 * width) * t * t);
            Complex64::from_polar(1.0, phase)
        }
        IntraPulse::PhaseCode { chips } => {
            let chip = (j * chips.len() / len.max(1)).min(chips.len() - 1);
            if chips[chip] == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(-1.0, 0.0)
            }
        }
    }
}
