//! Ground-truth-labeled complex-baseband synthesis and channel impairments.

mod device;
pub(crate) mod dsp;
mod jamming;
mod modulation;
mod protocol;
mod radar;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

pub use device::{apply_device_profile, DeviceProfile};
pub use jamming::{
    gen_jamming_scene, Background, Jammer, JammerKind, JammerLabel, JammingScene, SceneLabels,
    VictimMode,
};
pub use modulation::{constellation, modulate, ModulationKind, Payload, RC_ROLLOFF, RC_SPAN_SYMBOLS};
pub use protocol::{gen_protocol_burst, BurstLayout, ProtocolBurstSpec, ProtocolClass};
pub use radar::{gen_radar_pulse_train, pulse_index_ranges, IntraPulse, RadarPulseSpec};

/// Value returned by [`measure_snr`] when the noisy copy equals the clean one.
pub const SNR_NOISELESS: f64 = f64::INFINITY;

/// A complex-baseband sample sequence with its sample rate.
///
/// Always nonempty, with a positive sample rate and finite samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqSignal {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl IqSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("signal must have at least one sample"));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_us(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz * 1e6
    }

    /// Mean of |x[n]|² over the whole sequence.
    pub fn power(&self) -> f64 {
        dsp::mean_power(&self.samples)
    }
}

/// Circular complex Gaussian noise with unit power per complex sample.
pub fn gen_noise(n_samples: usize, sample_rate_hz: f64, seed: u64) -> Result<IqSignal> {
    if n_samples == 0 {
        return Err(Error::invalid("noise length must be positive"));
    }
    let samples = complex_gaussian(n_samples, 1.0, seed);
    IqSignal::new(samples, sample_rate_hz)
}

/// Add white Gaussian noise so that signal power over noise power equals
/// `snr_db`. Power is measured over the full complex sequence and the noise
/// is split equally between I and Q.
pub fn apply_awgn(signal: &IqSignal, snr_db: f64, seed: u64) -> Result<IqSignal> {
    if !snr_db.is_finite() {
        return Err(Error::invalid(format!("SNR must be finite, got {snr_db}")));
    }
    let power = signal.power();
    if power == 0.0 {
        return Err(Error::ZeroPower);
    }
    let noise_power = power / 10f64.powf(snr_db / 10.0);
    let noise = complex_gaussian(signal.len(), noise_power, seed);
    let samples = signal
        .samples()
        .iter()
        .zip(noise)
        .map(|(s, n)| s + n)
        .collect();
    IqSignal::new(samples, signal.sample_rate_hz())
}

/// Empirical SNR of `noisy` against its retained clean copy:
/// `10·log10(P_clean / P_residual)`. Returns [`SNR_NOISELESS`] when the
/// residual is exactly zero.
pub fn measure_snr(noisy: &IqSignal, clean: &IqSignal) -> Result<f64> {
    if noisy.len() != clean.len() {
        return Err(Error::LengthMismatch {
            expected: clean.len(),
            actual: noisy.len(),
        });
    }
    let clean_power = clean.power();
    if clean_power == 0.0 {
        return Err(Error::ZeroPower);
    }
    let residual = noisy
        .samples()
        .iter()
        .zip(clean.samples())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / clean.len() as f64;
    if residual == 0.0 {
        return Ok(SNR_NOISELESS);
    }
    Ok(10.0 * (clean_power / residual).log10())
}

/// `n` draws of CN(0, power): each quadrature has variance `power / 2`.
pub(crate) fn complex_gaussian(n: usize, power: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = seed::rng(seed);
    let sigma = (power / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * sigma, im * sigma)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(n: usize) -> IqSignal {
        let samples = (0..n)
            .map(|i| Complex64::from_polar(1.0, 0.01 * i as f64))
            .collect();
        IqSignal::new(samples, 1e6).unwrap()
    }

    #[test]
    fn signal_validation() {
        assert!(IqSignal::new(vec![], 1e6).is_err());
        assert!(IqSignal::new(vec![Complex64::new(1.0, 0.0)], 0.0).is_err());
        assert!(IqSignal::new(vec![Complex64::new(f64::NAN, 0.0)], 1.0).is_err());
        assert!(IqSignal::new(vec![Complex64::new(1.0, 0.0)], 1.0).is_ok());
    }

    #[test]
    fn noise_power_and_determinism() {
        let a = gen_noise(65536, 1e6, 11).unwrap();
        let b = gen_noise(65536, 1e6, 11).unwrap();
        assert_eq!(a, b);
        let p: f64 = a.samples().iter().map(|s| s.norm_sqr()).sum::<f64>() / 65536.0;
        assert!((p - 1.0).abs() < 0.02, "power {p}");
        let i_var: f64 = a.samples().iter().map(|s| s.re * s.re).sum::<f64>() / 65536.0;
        assert!((i_var - 0.5).abs() < 0.02);
    }

    #[test]
    fn single_sample_noise_is_finite() {
        let s = gen_noise(1, 1e6, 3).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.samples()[0].re.is_finite());
        assert!(gen_noise(0, 1e6, 3).is_err());
    }

    #[test]
    fn awgn_injects_requested_noise_power() {
        let x = tone(65536);
        for (snr, expected) in [(0.0, 1.0), (10.0, 0.1)] {
            let y = apply_awgn(&x, snr, 5).unwrap();
            let injected: f64 = y
                .samples()
                .iter()
                .zip(x.samples())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                / 65536.0;
            assert!(
                (injected - expected).abs() < 0.02 * expected,
                "snr {snr}: {injected}"
            );
        }
    }

    #[test]
    fn awgn_rejects_zero_power() {
        let z = IqSignal::new(vec![Complex64::new(0.0, 0.0); 16], 1e6).unwrap();
        assert!(matches!(apply_awgn(&z, 0.0, 1), Err(Error::ZeroPower)));
    }

    #[test]
    fn measured_snr_tracks_target() {
        let x = tone(65536);
        let y = apply_awgn(&x, 5.0, 9).unwrap();
        let snr = measure_snr(&y, &x).unwrap();
        assert!((snr - 5.0).abs() < 0.2, "{snr}");
    }

    #[test]
    fn measure_snr_edge_cases() {
        let x = tone(64);
        assert_eq!(measure_snr(&x, &x).unwrap(), SNR_NOISELESS);
        let z = IqSignal::new(vec![Complex64::new(0.0, 0.0); 64], 1e6).unwrap();
        assert!(matches!(measure_snr(&x, &z), Err(Error::ZeroPower)));
        let short = tone(32);
        assert!(matches!(
            measure_snr(&short, &x),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
