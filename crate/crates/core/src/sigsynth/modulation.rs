use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{complex_gaussian, dsp, IqSignal};
use crate::{Error, Result};

/// Roll-off of the root-raised-cosine pulse pair (transmit + matched receive).
pub const RC_ROLLOFF: f64 = 0.35;
/// Pulse span in symbols.
pub const RC_SPAN_SYMBOLS: usize = 8;

const GFSK_BT: f64 = 0.5;
const GFSK_INDEX: f64 = 0.5;
const CPFSK_INDEX: f64 = 0.5;
const AM_DEPTH: f64 = 0.5;
/// WBFM peak deviation as a fraction of the sample rate (75 kHz at 1 MS/s).
const WBFM_DEVIATION_FRACTION: f64 = 0.075;
/// Analog message bandwidth as a fraction of the sample rate.
const MESSAGE_BANDWIDTH_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModulationKind {
    #[serde(rename = "AM-DSB")]
    AmDsb,
    #[serde(rename = "AM-SSB")]
    AmSsb,
    #[serde(rename = "WBFM")]
    Wbfm,
    #[serde(rename = "BPSK")]
    Bpsk,
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "8PSK")]
    Psk8,
    #[serde(rename = "QAM16")]
    Qam16,
    #[serde(rename = "QAM64")]
    Qam64,
    #[serde(rename = "GFSK")]
    Gfsk,
    #[serde(rename = "CPFSK")]
    Cpfsk,
    #[serde(rename = "PAM4")]
    Pam4,
}

impl ModulationKind {
    pub const ALL: [ModulationKind; 11] = [
        ModulationKind::AmDsb,
        ModulationKind::AmSsb,
        ModulationKind::Wbfm,
        ModulationKind::Bpsk,
        ModulationKind::Qpsk,
        ModulationKind::Psk8,
        ModulationKind::Qam16,
        ModulationKind::Qam64,
        ModulationKind::Gfsk,
        ModulationKind::Cpfsk,
        ModulationKind::Pam4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModulationKind::AmDsb => "AM-DSB",
            ModulationKind::AmSsb => "AM-SSB",
            ModulationKind::Wbfm => "WBFM",
            ModulationKind::Bpsk => "BPSK",
            ModulationKind::Qpsk => "QPSK",
            ModulationKind::Psk8 => "8PSK",
            ModulationKind::Qam16 => "QAM16",
            ModulationKind::Qam64 => "QAM64",
            ModulationKind::Gfsk => "GFSK",
            ModulationKind::Cpfsk => "CPFSK",
            ModulationKind::Pam4 => "PAM4",
        }
    }

    pub fn is_analog(self) -> bool {
        matches!(
            self,
            ModulationKind::AmDsb | ModulationKind::AmSsb | ModulationKind::Wbfm
        )
    }

    /// Alphabet size for digital kinds, `None` for analog ones.
    pub fn order(self) -> Option<usize> {
        match self {
            ModulationKind::Bpsk | ModulationKind::Gfsk | ModulationKind::Cpfsk => Some(2),
            ModulationKind::Qpsk | ModulationKind::Pam4 => Some(4),
            ModulationKind::Psk8 => Some(8),
            ModulationKind::Qam16 => Some(16),
            ModulationKind::Qam64 => Some(64),
            _ => None,
        }
    }

    pub fn bits_per_symbol(self) -> Option<usize> {
        self.order().map(|m| m.trailing_zeros() as usize)
    }
}

impl fmt::Display for ModulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModulationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_uppercase();
        ModulationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == wanted)
            .ok_or_else(|| Error::Unsupported(format!("modulation kind `{s}`")))
    }
}

/// What gets modulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    /// Raw bits (each 0 or 1), Gray-mapped onto the alphabet.
    Bits(Vec<u8>),
    /// Alphabet indices in `0..order`, see [`constellation`].
    Symbols(Vec<usize>),
    /// Seed and length of the band-limited noise message for analog kinds.
    Analog { seed: u64, n_samples: usize },
}

/// Alphabet points in index order, scaled to unit mean energy. FSK kinds
/// return their two frequency signs as ±1.
pub fn constellation(kind: ModulationKind) -> Option<Vec<Complex64>> {
    let points = match kind {
        ModulationKind::Bpsk | ModulationKind::Gfsk | ModulationKind::Cpfsk => {
            vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]
        }
        ModulationKind::Qpsk => (0..4)
            .map(|k| {
                Complex64::new(
                    if k & 2 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 },
                    if k & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 },
                )
            })
            .collect(),
        ModulationKind::Psk8 => (0..8)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 8.0))
            .collect(),
        ModulationKind::Qam16 => square_qam(4),
        ModulationKind::Qam64 => square_qam(8),
        ModulationKind::Pam4 => {
            let s = 5f64.sqrt();
            (0..4)
                .map(|k| Complex64::new((2.0 * k as f64 - 3.0) / s, 0.0))
                .collect()
        }
        _ => return None,
    };
    Some(points)
}

/// Index `iq = i_level * side + q_level`, levels `2k - (side - 1)`.
fn square_qam(side: usize) -> Vec<Complex64> {
    let m = (side * side) as f64;
    let scale = (2.0 * (m - 1.0) / 3.0).sqrt();
    let level = |k: usize| (2.0 * k as f64 - (side as f64 - 1.0)) / scale;
    (0..side * side)
        .map(|idx| Complex64::new(level(idx / side), level(idx % side)))
        .collect()
}

fn gray_to_binary(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

fn bits_value(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

/// Map a Gray-coded group of bits onto an alphabet index.
fn symbol_index(kind: ModulationKind, bits: &[u8]) -> usize {
    match kind {
        // Each quadrature is Gray coded independently: the first half of the
        // bits pick the I level, the second half the Q level.
        ModulationKind::Qam16 | ModulationKind::Qam64 => {
            let half = bits.len() / 2;
            let side = 1usize << half;
            let i = gray_to_binary(bits_value(&bits[..half]));
            let q = gray_to_binary(bits_value(&bits[half..]));
            i * side + q
        }
        ModulationKind::Qpsk => bits_value(bits),
        _ => gray_to_binary(bits_value(bits)),
    }
}

fn payload_symbols(kind: ModulationKind, payload: &Payload) -> Result<Vec<usize>> {
    let order = kind.order().expect("digital kind");
    let bps = kind.bits_per_symbol().expect("digital kind");
    match payload {
        Payload::Bits(bits) => {
            if bits.is_empty() {
                return Err(Error::invalid("payload is empty"));
            }
            if let Some(i) = bits.iter().position(|&b| b > 1) {
                return Err(Error::invalid(format!(
                    "payload bit {i} is {}, outside {{0, 1}}",
                    bits[i]
                )));
            }
            if bits.len() % bps != 0 {
                return Err(Error::invalid(format!(
                    "{kind} needs a multiple of {bps} bits, got {}",
                    bits.len()
                )));
            }
            Ok(bits.chunks(bps).map(|c| symbol_index(kind, c)).collect())
        }
        Payload::Symbols(symbols) => {
            if symbols.is_empty() {
                return Err(Error::invalid("payload is empty"));
            }
            if let Some(&s) = symbols.iter().find(|&&s| s >= order) {
                return Err(Error::invalid(format!(
                    "symbol {s} outside the {order}-point {kind} alphabet"
                )));
            }
            Ok(symbols.clone())
        }
        Payload::Analog { .. } => Err(Error::invalid(format!(
            "{kind} is digital; an analog message payload does not apply"
        ))),
    }
}

/// Modulate a payload into a unit-power baseband signal.
///
/// Linear digital kinds are shaped with a raised-cosine pulse (the cascade of
/// a root-raised-cosine transmit filter and its matched receive filter), so
/// samples at symbol instants `k·sps` carry the alphabet points free of ISI.
/// `samples_per_symbol == 1` emits the bare symbol stream.
pub fn modulate(
    kind: ModulationKind,
    payload: &Payload,
    samples_per_symbol: usize,
    sample_rate_hz: f64,
) -> Result<IqSignal> {
    let mut samples = if kind.is_analog() {
        let Payload::Analog { seed, n_samples } = *payload else {
            return Err(Error::invalid(format!(
                "{kind} is analog and needs an analog message payload"
            )));
        };
        if n_samples == 0 {
            return Err(Error::invalid("payload is empty"));
        }
        analog(kind, seed, n_samples)
    } else {
        if samples_per_symbol == 0 {
            return Err(Error::invalid("samples per symbol must be positive"));
        }
        let symbols = payload_symbols(kind, payload)?;
        match kind {
            ModulationKind::Gfsk => {
                continuous_phase(&symbols, samples_per_symbol, GFSK_INDEX, Some(GFSK_BT))
            }
            ModulationKind::Cpfsk => {
                continuous_phase(&symbols, samples_per_symbol, CPFSK_INDEX, None)
            }
            _ => {
                let alphabet = constellation(kind).expect("linear digital kind");
                let points: Vec<Complex64> = symbols.iter().map(|&s| alphabet[s]).collect();
                raised_cosine_shape(&points, samples_per_symbol)
            }
        }
    };
    dsp::normalize_power(&mut samples);
    IqSignal::new(samples, sample_rate_hz)
}

/// Raised-cosine impulse response at `t` symbol periods.
fn raised_cosine(t: f64, beta: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let denom = 1.0 - (2.0 * beta * t).powi(2);
    if denom.abs() < 1e-12 {
        return PI / 4.0 * dsp::sinc(1.0 / (2.0 * beta));
    }
    dsp::sinc(t) * (PI * beta * t).cos() / denom
}

fn raised_cosine_shape(points: &[Complex64], sps: usize) -> Vec<Complex64> {
    if sps == 1 {
        return points.to_vec();
    }
    let half = (RC_SPAN_SYMBOLS / 2 * sps) as isize;
    let taps: Vec<f64> = (-half..=half)
        .map(|n| {
            // Exact zeros at the other symbol instants.
            if n != 0 && n % sps as isize == 0 {
                0.0
            } else {
                raised_cosine(n as f64 / sps as f64, RC_ROLLOFF)
            }
        })
        .collect();
    let len = points.len() * sps;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (k, &a) in points.iter().enumerate() {
        let center = (k * sps) as isize;
        for (j, &tap) in taps.iter().enumerate() {
            let n = center + j as isize - half;
            if n >= 0 && (n as usize) < len {
                out[n as usize] += a * tap;
            }
        }
    }
    out
}

/// Continuous-phase FSK. Symbol 0 is the +1 frequency, symbol 1 the -1.
/// With a Gaussian BT the rectangular frequency pulse is smoothed first.
fn continuous_phase(symbols: &[usize], sps: usize, index: f64, bt: Option<f64>) -> Vec<Complex64> {
    let pulse = frequency_pulse(sps, bt);
    let len = symbols.len() * sps;
    let offset = pulse.len() / 2 - sps / 2;
    let mut freq = vec![0.0; len];
    for (k, &s) in symbols.iter().enumerate() {
        let sign = if s == 0 { 1.0 } else { -1.0 };
        for (j, &p) in pulse.iter().enumerate() {
            let n = (k * sps + j) as isize - offset as isize;
            if n >= 0 && (n as usize) < len {
                freq[n as usize] += sign * p;
            }
        }
    }
    let mut phase = 0.0;
    freq.iter()
        .map(|&f| {
            phase += PI * index * f;
            Complex64::from_polar(1.0, phase)
        })
        .collect()
}

/// Frequency pulse whose taps sum to 1, so every symbol advances the phase
/// by `π·h`.
fn frequency_pulse(sps: usize, bt: Option<f64>) -> Vec<f64> {
    let rect = vec![1.0 / sps as f64; sps];
    let Some(bt) = bt else {
        return rect;
    };
    let sigma = (2f64.ln()).sqrt() / (2.0 * PI * bt) * sps as f64;
    let half = 2 * sps;
    let gauss: Vec<f64> = (-(half as isize)..=half as isize)
        .map(|n| (-(n as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let gsum: f64 = gauss.iter().sum();
    let mut out = vec![0.0; rect.len() + gauss.len() - 1];
    for (i, r) in rect.iter().enumerate() {
        for (j, g) in gauss.iter().enumerate() {
            out[i + j] += r * g / gsum;
        }
    }
    out
}

/// Band-limited Gaussian message scaled to peak magnitude 1.
fn message(seed: u64, n: usize) -> Vec<f64> {
    let mut buf = complex_gaussian(n, 1.0, seed);
    if n > 2 {
        dsp::brickwall_lowpass(&mut buf, MESSAGE_BANDWIDTH_FRACTION);
    }
    let real: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let peak = real.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        real.iter().map(|v| v / peak).collect()
    } else {
        real
    }
}

fn analog(kind: ModulationKind, seed: u64, n: usize) -> Vec<Complex64> {
    let m = message(seed, n);
    match kind {
        ModulationKind::AmDsb => m
            .iter()
            .map(|&v| Complex64::new(1.0 + AM_DEPTH * v, 0.0))
            .collect(),
        ModulationKind::AmSsb => dsp::analytic(&m),
        ModulationKind::Wbfm => {
            let step = 2.0 * PI * WBFM_DEVIATION_FRACTION;
            let mut phase = 0.0;
            m.iter()
                .map(|&v| {
                    phase += step * v;
                    Complex64::from_polar(1.0, phase)
                })
                .collect()
        }
        _ => unreachable!("digital kind routed to analog synthesis"),
    }
}
