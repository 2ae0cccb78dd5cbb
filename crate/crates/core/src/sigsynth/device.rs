use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::IqSignal;
use crate::{seed, Error, Result};

const MAX_IMBALANCE_DB: f64 = 3.0;
const MAX_SKEW_DEG: f64 = 10.0;
const MAX_CFO_PPM: f64 = 50.0;

/// Receiver-chain impairments that make up one device fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub device_id: String,
    pub iq_gain_imbalance_db: f64,
    pub iq_phase_skew_deg: f64,
    pub dc_offset: Complex64,
    pub cfo_ppm: f64,
    pub phase_noise_std_rad: f64,
}

impl DeviceProfile {
    /// A profile with no impairments.
    pub fn ideal(device_id: impl Into<String>) -> Self {
        Self {
            device_id: device_id.into(),
            iq_gain_imbalance_db: 0.0,
            iq_phase_skew_deg: 0.0,
            dc_offset: Complex64::new(0.0, 0.0),
            cfo_ppm: 0.0,
            phase_noise_std_rad: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let values = [
            self.iq_gain_imbalance_db,
            self.iq_phase_skew_deg,
            self.dc_offset.re,
            self.dc_offset.im,
            self.cfo_ppm,
            self.phase_noise_std_rad,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("{}: impairments must be finite", self.device_id)));
        }
        if self.iq_gain_imbalance_db.abs() > MAX_IMBALANCE_DB {
            return Err(Error::invalid(format!(
                "{}: |gain imbalance| must be ≤ {MAX_IMBALANCE_DB} dB",
                self.device_id
            )));
        }
        if self.iq_phase_skew_deg.abs() > MAX_SKEW_DEG {
            return Err(Error::invalid(format!(
                "{}: |phase skew| must be ≤ {MAX_SKEW_DEG}°",
                self.device_id
            )));
        }
        if self.cfo_ppm.abs() > MAX_CFO_PPM {
            return Err(Error::invalid(format!(
                "{}: |CFO| must be ≤ {MAX_CFO_PPM} ppm",
                self.device_id
            )));
        }
        if self.phase_noise_std_rad < 0.0 {
            return Err(Error::invalid(format!(
                "{}: phase noise std must be nonnegative",
                self.device_id
            )));
        }
        Ok(())
    }

    /// Per-sample phase increment of the CFO rotation. The offset is taken
    /// relative to an equivalent carrier of `fs / 4`, which makes the rate
    /// independent of the sample rate: `2π · cfo_ppm·1e-6 / 4`.
    pub fn cfo_radians_per_sample(&self) -> f64 {
        2.0 * PI * self.cfo_ppm * 1e-6 / 4.0
    }
}

/// Apply, in order: IQ gain/phase imbalance, DC offset, CFO rotation and a
/// phase-noise random walk. Stages whose parameter is zero are skipped, so
/// an all-zero profile returns the input unchanged.
pub fn apply_device_profile(signal: &IqSignal, profile: &DeviceProfile, seed: u64) -> Result<IqSignal> {
    profile.validate()?;
    let mut samples = signal.samples().to_vec();

    if profile.iq_gain_imbalance_db != 0.0 || profile.iq_phase_skew_deg != 0.0 {
        let g = 10f64.powf(profile.iq_gain_imbalance_db / 20.0);
        let phi = profile.iq_phase_skew_deg.to_radians();
        let (sin, cos) = phi.sin_cos();
        for s in samples.iter_mut() {
            let q = g * (s.im * cos - s.re * sin);
            *s = Complex64::new(s.re, q);
        }
    }

    if profile.dc_offset != Complex64::new(0.0, 0.0) {
        for s in samples.iter_mut() {
            *s += profile.dc_offset;
        }
    }

    if profile.cfo_ppm != 0.0 {
        let w = profile.cfo_radians_per_sample();
        for (n, s) in samples.iter_mut().enumerate() {
            *s *= Complex64::from_polar(1.0, w * n as f64);
        }
    }

    if profile.phase_noise_std_rad > 0.0 {
        let mut rng = seed::rng(seed);
        let mut phase = 0.0;
        for s in samples.iter_mut() {
            let step: f64 = StandardNormal.sample(&mut rng);
            phase += step * profile.phase_noise_std_rad;
            *s *= Complex64::from_polar(1.0, phase);
        }
    }

    IqSignal::new(samples, signal.sample_rate_hz())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigsynth::gen_noise;

    #[test]
    fn ideal_profile_is_identity() {
        let x = gen_noise(512, 1e6, 4).unwrap();
        let y = apply_device_profile(&x, &DeviceProfile::ideal("dev"), 1).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn dc_offset_shifts_mean() {
        let samples: Vec<Complex64> = (0..1000)
            .map(|i| Complex64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let x = IqSignal::new(samples, 1e6).unwrap();
        let profile = DeviceProfile {
            dc_offset: Complex64::new(0.1, 0.0),
            ..DeviceProfile::ideal("dev")
        };
        let y = apply_device_profile(&x, &profile, 0).unwrap();
        let mean_i: f64 = y.samples().iter().map(|s| s.re).sum::<f64>() / 1000.0;
        assert!((mean_i - 0.1).abs() < 1e-6);
    }

    #[test]
    fn out_of_range_profiles_rejected() {
        let x = gen_noise(8, 1e6, 4).unwrap();
        for p in [
            DeviceProfile { iq_gain_imbalance_db: 3.5, ..DeviceProfile::ideal("a") },
            DeviceProfile { iq_phase_skew_deg: -11.0, ..DeviceProfile::ideal("b") },
            DeviceProfile { cfo_ppm: 51.0, ..DeviceProfile::ideal("c") },
            DeviceProfile { phase_noise_std_rad: -0.1, ..DeviceProfile::ideal("d") },
        ] {
            assert!(apply_device_profile(&x, &p, 0).is_err(), "{}", p.device_id);
        }
    }

    #[test]
    fn cfo_rotates_at_documented_rate() {
        let x = IqSignal::new(vec![Complex64::new(1.0, 0.0); 100], 1e6).unwrap();
        let profile = DeviceProfile { cfo_ppm: 40.0, ..DeviceProfile::ideal("dev") };
        let y = apply_device_profile(&x, &profile, 0).unwrap();
        let step = (y.samples()[1] / y.samples()[0]).arg();
        assert!((step - 2.0 * PI * 40e-6 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn phase_noise_is_seeded() {
        let x = gen_noise(256, 1e6, 4).unwrap();
        let p = DeviceProfile { phase_noise_std_rad: 0.01, ..DeviceProfile::ideal("dev") };
        let a = apply_device_profile(&x, &p, 7).unwrap();
        let b = apply_device_profile(&x, &p, 7).unwrap();
        let c = apply_device_profile(&x, &p, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
