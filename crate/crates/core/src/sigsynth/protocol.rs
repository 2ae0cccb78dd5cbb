//! Protocol-like bursts. These are structural stand-ins: each class has its
//! own symbol rate, preamble, keying and hop signature, not a conformant PHY.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{dsp, IqSignal};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolClass {
    BluetoothLike,
    WlanLike,
    WpanLike,
    AvionicsRangingLike,
    BeaconLike,
}

impl ProtocolClass {
    pub const ALL: [ProtocolClass; 5] = [
        ProtocolClass::BluetoothLike,
        ProtocolClass::WlanLike,
        ProtocolClass::WpanLike,
        ProtocolClass::AvionicsRangingLike,
        ProtocolClass::BeaconLike,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolClass::BluetoothLike => "bluetooth-like",
            ProtocolClass::WlanLike => "wlan-like",
            ProtocolClass::WpanLike => "wpan-like",
            ProtocolClass::AvionicsRangingLike => "avionics-ranging-like",
            ProtocolClass::BeaconLike => "beacon-like",
        }
    }

    fn keying(self) -> Keying {
        match self {
            ProtocolClass::BluetoothLike => Keying::Fsk { index: 0.32 },
            ProtocolClass::WlanLike => Keying::Qpsk,
            ProtocolClass::WpanLike => Keying::Bpsk,
            ProtocolClass::AvionicsRangingLike => Keying::Ook,
            ProtocolClass::BeaconLike => Keying::Bpsk,
        }
    }
}

impl fmt::Display for ProtocolClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_lowercase();
        ProtocolClass::ALL
            .into_iter()
            .find(|c| c.as_str() == wanted)
            .ok_or_else(|| Error::Unsupported(format!("protocol class `{s}`")))
    }
}

#[derive(Debug, Clone, Copy)]
enum Keying {
    Fsk { index: f64 },
    Qpsk,
    Bpsk,
    Ook,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolBurstSpec {
    pub protocol_class: ProtocolClass,
    pub symbol_rate_hz: f64,
    pub preamble_len: usize,
    /// One burst per entry, each shifted by its offset. Empty means a single
    /// unshifted burst.
    pub hop_pattern: Vec<f64>,
    pub burst_gap_us: f64,
}

impl ProtocolBurstSpec {
    /// Reference parameters for each class at a 10 MS/s capture.
    pub fn preset(class: ProtocolClass) -> Self {
        let (symbol_rate_hz, preamble_len, hop_pattern, burst_gap_us) = match class {
            ProtocolClass::BluetoothLike => (1e6, 8, vec![-2.5e6, 0.5e6, 2.5e6], 20.0),
            ProtocolClass::WlanLike => (2.5e6, 16, vec![], 0.0),
            ProtocolClass::WpanLike => (250e3, 32, vec![-1e6, 1e6], 40.0),
            ProtocolClass::AvionicsRangingLike => (500e3, 4, vec![0.0, 0.0, 0.0, 0.0], 60.0),
            ProtocolClass::BeaconLike => (62.5e3, 16, vec![], 0.0),
        };
        Self {
            protocol_class: class,
            symbol_rate_hz,
            preamble_len,
            hop_pattern,
            burst_gap_us,
        }
    }

    pub fn burst_count(&self) -> usize {
        self.hop_pattern.len().max(1)
    }

    fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if !(self.symbol_rate_hz.is_finite() && self.symbol_rate_hz > 0.0) {
            return Err(Error::invalid("symbol rate must be positive"));
        }
        if self.symbol_rate_hz >= sample_rate_hz / 2.0 {
            return Err(Error::invalid(format!(
                "symbol rate {} Hz violates Nyquist at {} Hz sampling",
                self.symbol_rate_hz, sample_rate_hz
            )));
        }
        if self.preamble_len == 0 {
            return Err(Error::invalid("preamble length must be positive"));
        }
        if !(self.burst_gap_us.is_finite() && self.burst_gap_us >= 0.0) {
            return Err(Error::invalid("burst gap must be nonnegative"));
        }
        if let Some(h) = self
            .hop_pattern
            .iter()
            .find(|h| !h.is_finite() || h.abs() >= sample_rate_hz / 2.0)
        {
            return Err(Error::invalid(format!("hop offset {h} Hz outside the band")));
        }
        Ok(())
    }
}

/// Where each burst sits in the output, in samples.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstLayout {
    pub bursts: Vec<std::ops::Range<usize>>,
    pub offsets_hz: Vec<f64>,
}

impl BurstLayout {
    pub fn new(spec: &ProtocolBurstSpec, n_samples: usize, sample_rate_hz: f64) -> Result<Self> {
        let count = spec.burst_count();
        let gap = (spec.burst_gap_us * 1e-6 * sample_rate_hz).round() as usize;
        let used_by_gaps = gap * (count - 1);
        if used_by_gaps >= n_samples {
            return Err(Error::invalid("burst gaps leave no room for bursts"));
        }
        let slot = (n_samples - used_by_gaps) / count;
        let preamble_samples =
            (spec.preamble_len as f64 * sample_rate_hz / spec.symbol_rate_hz).ceil() as usize;
        if slot < preamble_samples {
            return Err(Error::invalid(format!(
                "burst of {slot} samples cannot hold a {}-symbol preamble",
                spec.preamble_len
            )));
        }
        let bursts = (0..count)
            .map(|i| {
                let start = i * (slot + gap);
                let end = if i + 1 == count { n_samples } else { start + slot };
                start..end
            })
            .collect();
        let offsets_hz = if spec.hop_pattern.is_empty() {
            vec![0.0]
        } else {
            spec.hop_pattern.clone()
        };
        Ok(Self { bursts, offsets_hz })
    }
}

/// Render the burst sequence described by `spec` into a unit-power capture.
pub fn gen_protocol_burst(
    spec: &ProtocolBurstSpec,
    duration_us: f64,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<IqSignal> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    spec.validate(sample_rate_hz)?;
    let n = (duration_us * 1e-6 * sample_rate_hz).round() as usize;
    if n == 0 {
        return Err(Error::invalid("duration shorter than one sample"));
    }
    let layout = BurstLayout::new(spec, n, sample_rate_hz)?;
    let mut rng = seed::rng(seed);
    let mut samples = vec![Complex64::new(0.0, 0.0); n];
    let sps = sample_rate_hz / spec.symbol_rate_hz;
    let keying = spec.protocol_class.keying();

    for (range, &offset) in layout.bursts.iter().zip(&layout.offsets_hz) {
        let len = range.len();
        let n_symbols = (len as f64 / sps).ceil() as usize;
        let bits_per_symbol = if matches!(keying, Keying::Qpsk) { 2 } else { 1 };
        let symbols: Vec<u8> = (0..n_symbols)
            .map(|k| {
                if k < spec.preamble_len {
                    // Alternating preamble.
                    if k % 2 == 0 { 0 } else { (1 << bits_per_symbol) - 1 }
                } else {
                    rng.random_range(0..(1u8 << bits_per_symbol))
                }
            })
            .collect();
        let mut burst = key(keying, &symbols, len, sps);
        dsp::frequency_shift(&mut burst, offset, sample_rate_hz);
        samples[range.clone()].copy_from_slice(&burst);
    }
    dsp::normalize_power(&mut samples);
    IqSignal::new(samples, sample_rate_hz)
}

fn key(keying: Keying, symbols: &[u8], len: usize, sps: f64) -> Vec<Complex64> {
    let symbol_at = |n: usize| symbols[((n as f64 / sps) as usize).min(symbols.len() - 1)];
    match keying {
        Keying::Fsk { index } => {
            let mut phase = 0.0;
            (0..len)
                .map(|n| {
                    let out = Complex64::from_polar(1.0, phase);
                    let sign = if symbol_at(n) == 0 { 1.0 } else { -1.0 };
                    phase += PI * index * sign / sps;
                    out
                })
                .collect()
        }
        Keying::Qpsk => (0..len)
            .map(|n| {
                let s = symbol_at(n);
                let i = if s & 2 == 0 { 1.0 } else { -1.0 };
                let q = if s & 1 == 0 { 1.0 } else { -1.0 };
                Complex64::new(i, q) / 2f64.sqrt()
            })
            .collect(),
        Keying::Bpsk => (0..len)
            .map(|n| Complex64::new(if symbol_at(n) == 0 { 1.0 } else { -1.0 }, 0.0))
            .collect(),
        Keying::Ook => (0..len)
            .map(|n| Complex64::new(if symbol_at(n) == 0 { 1.0 } else { 0.0 }, 0.0))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_single_burst() {
        let spec = ProtocolBurstSpec {
            hop_pattern: vec![],
            burst_gap_us: 0.0,
            ..ProtocolBurstSpec::preset(ProtocolClass::WlanLike)
        };
        let s = gen_protocol_burst(&spec, 100.0, 10e6, 1).unwrap();
        assert_eq!(s.len(), 1000);
        assert!(s.samples().iter().all(|x| x.norm() > 0.0));
        assert!((s.power() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaps_are_silent() {
        let spec = ProtocolBurstSpec::preset(ProtocolClass::BluetoothLike);
        let s = gen_protocol_burst(&spec, 409.6, 10e6, 1).unwrap();
        let layout = BurstLayout::new(&spec, s.len(), 10e6).unwrap();
        assert_eq!(layout.bursts.len(), 3);
        let gap = layout.bursts[0].end..layout.bursts[1].start;
        assert_eq!(gap.len(), 200);
        assert!(s.samples()[gap].iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn nyquist_violation_rejected() {
        let spec = ProtocolBurstSpec {
            symbol_rate_hz: 6e6,
            ..ProtocolBurstSpec::preset(ProtocolClass::WlanLike)
        };
        assert!(gen_protocol_burst(&spec, 100.0, 10e6, 1).is_err());
    }

    #[test]
    fn seeded_and_deterministic() {
        let spec = ProtocolBurstSpec::preset(ProtocolClass::WpanLike);
        let a = gen_protocol_burst(&spec, 409.6, 10e6, 5).unwrap();
        let b = gen_protocol_burst(&spec, 409.6, 10e6, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn class_names_round_trip() {
        for c in ProtocolClass::ALL {
            assert_eq!(c.as_str().parse::<ProtocolClass>().unwrap(), c);
        }
    }
}
