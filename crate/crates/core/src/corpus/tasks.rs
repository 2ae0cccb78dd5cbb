//! Signal synthesis and ground truth for each task family.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{TaskFamily, TaskSpec};
use crate::instrgen::{GroundTruth, SegmentClass, SpeParameter, SSD_SEGMENTS};
use crate::seed::{self, sub_seed};
use crate::sigsynth::{
    apply_awgn, apply_device_profile, complex_gaussian, gen_jamming_scene, gen_noise,
    gen_protocol_burst, gen_radar_pulse_train, modulate, Background, DeviceProfile, IntraPulse,
    IqSignal, Jammer, JammerKind, JammingScene, ModulationKind, Payload, ProtocolBurstSpec,
    ProtocolClass, RadarPulseSpec, VictimMode,
};
use crate::{Error, Result};

/// EI captures carry no SNR label; they are all synthesized at this SNR.
pub const EI_SNR_DB: f64 = 30.0;
/// Relative weight decay between consecutive EI devices.
pub const EI_WEIGHT_DECAY: f64 = 0.8;
const SPS: usize = 8;
const BARKER_13: [u8; 13] = [0, 0, 0, 0, 0, 1, 1, 0, 0, 1, 0, 1, 0];
const DEVICE_MODELS: [&str; 6] = [
    "USRP-B210",
    "USRP-X310",
    "BladeRF-xA4",
    "HackRF-One",
    "LimeSDR-Mini",
    "PlutoSDR",
];

pub(super) struct Synth {
    pub signal: IqSignal,
    pub ground_truth: GroundTruth,
    pub snr_db: Option<f64>,
    pub stride: Option<usize>,
}

/// Round-robin class choice decorrelated from the SNR cycle, so every class
/// meets every SNR bin even when the class count divides the grid length.
fn cycle(i: usize, grid_len: usize, classes: usize) -> usize {
    (i + i / grid_len.max(1)) % classes
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

/// Add CN noise of power `10^(−snr/10)`, i.e. `snr_db` relative to a unit
/// reference power.
fn add_noise(samples: &mut [Complex64], snr_db: f64, seed: u64) {
    let noise = complex_gaussian(samples.len(), 10f64.powf(-snr_db / 10.0), seed);
    for (s, n) in samples.iter_mut().zip(noise) {
        *s += n;
    }
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

fn random_intra(rng: &mut ChaCha8Rng, fs: f64) -> IntraPulse {
    match rng.random_range(0..3) {
        0 => IntraPulse::Cw,
        1 => IntraPulse::Lfm {
            sweep_hz: fs * rng.random_range(0.05..0.2),
        },
        _ => IntraPulse::PhaseCode {
            chips: BARKER_13.to_vec(),
        },
    }
}

pub(super) fn synthesize(
    task: TaskFamily,
    spec: &TaskSpec,
    i: usize,
    seed: u64,
    devices: &[DeviceProfile],
) -> Result<Synth> {
    match task {
        TaskFamily::Ssd => ssd(spec, i, seed),
        TaskFamily::Spe => spe(spec, i, seed),
        TaskFamily::Mr => mr(spec, i, seed),
        TaskFamily::Pr => pr(spec, i, seed),
        TaskFamily::Ei => ei(spec, seed, devices),
        TaskFamily::Ajsd => ajsd(spec, i, seed),
    }
}

fn snr_at(spec: &TaskSpec, i: usize) -> f64 {
    spec.snr_grid_db[i % spec.snr_grid_db.len()]
}

fn duration_us(spec: &TaskSpec) -> f64 {
    spec.n_samples as f64 / spec.sample_rate_hz * 1e6
}

fn ssd(spec: &TaskSpec, i: usize, seed: u64) -> Result<Synth> {
    let n = spec.n_samples;
    let fs = spec.sample_rate_hz;
    let snr = snr_at(spec, i);
    let source = SegmentClass::ALL[cycle(i, spec.snr_grid_db.len(), 3)];
    let mut rng = seed::rng(sub_seed(seed, "layout"));
    let seg_len = n / SSD_SEGMENTS;
    let bounds = |k: usize| {
        if k == SSD_SEGMENTS {
            n
        } else {
            k * seg_len
        }
    };

    let (segments, samples) = if source == SegmentClass::Noise {
        let noise = gen_noise(n, fs, sub_seed(seed, "noise"))?;
        (vec![SegmentClass::Noise; SSD_SEGMENTS], noise.into_samples())
    } else {
        let start = rng.random_range(0..SSD_SEGMENTS);
        let end = rng.random_range(start..SSD_SEGMENTS);
        let mut active = match source {
            SegmentClass::Radar => {
                let period = round1(rng.random_range(8.0..20.0));
                let pulse_width = round1(rng.random_range(1.0..4.0));
                let delay = round1(rng.random_range(0.0..period - pulse_width));
                let count = ((duration_us(spec) - delay) / period).floor().max(1.0) as usize;
                let radar = RadarPulseSpec {
                    pulse_width_us: pulse_width,
                    period_us: period,
                    count,
                    delay_us: delay,
                    intra_pulse: random_intra(&mut rng, fs),
                };
                gen_radar_pulse_train(&radar, duration_us(spec), fs)?.into_samples()
            }
            _ => {
                let kinds = [
                    ModulationKind::Bpsk,
                    ModulationKind::Qpsk,
                    ModulationKind::Psk8,
                    ModulationKind::Qam16,
                ];
                let kind = kinds[rng.random_range(0..kinds.len())];
                let n_bits = n.div_ceil(SPS) * kind.bits_per_symbol().unwrap_or(1);
                let bits = random_bits(&mut rng, n_bits);
                let mut s = modulate(kind, &Payload::Bits(bits), SPS, fs)?.into_samples();
                s.resize(n, Complex64::new(0.0, 0.0));
                s
            }
        };
        let on = bounds(start)..bounds(end + 1);
        for (k, s) in active.iter_mut().enumerate() {
            if !on.contains(&k) {
                *s = Complex64::new(0.0, 0.0);
            }
        }
        // Unit power over the active region, then noise relative to it.
        let power = active[on.clone()].iter().map(|s| s.norm_sqr()).sum::<f64>() / on.len() as f64;
        if power > 0.0 {
            let scale = power.sqrt().recip();
            active.iter_mut().for_each(|s| *s *= scale);
        }
        add_noise(&mut active, snr, sub_seed(seed, "noise"));
        let segments = (0..SSD_SEGMENTS)
            .map(|k| if (start..=end).contains(&k) { source } else { SegmentClass::Noise })
            .collect();
        (segments, active)
    };
    Ok(Synth {
        signal: IqSignal::new(samples, fs)?,
        ground_truth: GroundTruth::Ssd { source, segments },
        snr_db: Some(snr),
        stride: None,
    })
}

fn spe(spec: &TaskSpec, i: usize, seed: u64) -> Result<Synth> {
    let fs = spec.sample_rate_hz;
    let snr = snr_at(spec, i);
    let parameter = SpeParameter::ALL[cycle(i, spec.snr_grid_db.len(), SpeParameter::ALL.len())];
    let mut rng = seed::rng(sub_seed(seed, "radar"));
    let period = round1(rng.random_range(20.0..60.0));
    let pulse_width = round1(rng.random_range(1.0..10.0));
    let delay = round1(rng.random_range(0.0..20.0));
    let mut count = rng.random_range(2..=6usize);
    let duration = duration_us(spec);
    while count > 1 && delay + count as f64 * period > duration {
        count -= 1;
    }
    let radar = RadarPulseSpec {
        pulse_width_us: pulse_width,
        period_us: period,
        count,
        delay_us: delay,
        intra_pulse: random_intra(&mut rng, fs),
    };
    let mut samples = gen_radar_pulse_train(&radar, duration, fs)?.into_samples();
    add_noise(&mut samples, snr, sub_seed(seed, "noise"));
    let value = match parameter {
        SpeParameter::PulseWidth => pulse_width,
        SpeParameter::Period => period,
        SpeParameter::Count => count as f64,
        SpeParameter::Delay => delay,
    };
    Ok(Synth {
        signal: IqSignal::new(samples, fs)?,
        ground_truth: GroundTruth::Spe {
            parameter,
            value,
            tolerance: parameter.tolerance(),
        },
        snr_db: Some(snr),
        stride: None,
    })
}

fn mr(spec: &TaskSpec, i: usize, seed: u64) -> Result<Synth> {
    let n = spec.n_samples;
    let snr = snr_at(spec, i);
    let kind = ModulationKind::ALL[cycle(i, spec.snr_grid_db.len(), ModulationKind::ALL.len())];
    let mut rng = seed::rng(sub_seed(seed, "payload"));
    let payload = match kind.bits_per_symbol() {
        None => Payload::Analog {
            seed: sub_seed(seed, "message"),
            n_samples: n,
        },
        Some(bps) => Payload::Bits(random_bits(&mut rng, n.div_ceil(SPS) * bps)),
    };
    let clean = modulate(kind, &payload, SPS, spec.sample_rate_hz)?;
    let mut samples = clean.into_samples();
    samples.truncate(n);
    let clean = IqSignal::new(samples, spec.sample_rate_hz)?;
    Ok(Synth {
        signal: apply_awgn(&clean, snr, sub_seed(seed, "noise"))?,
        ground_truth: GroundTruth::Mr { modulation: kind },
        snr_db: Some(snr),
        stride: (!kind.is_analog()).then_some(SPS),
    })
}

fn pr(spec: &TaskSpec, i: usize, seed: u64) -> Result<Synth> {
    let snr = snr_at(spec, i);
    let class = ProtocolClass::ALL[cycle(i, spec.snr_grid_db.len(), ProtocolClass::ALL.len())];
    let burst = ProtocolBurstSpec::preset(class);
    let clean = gen_protocol_burst(
        &burst,
        duration_us(spec),
        spec.sample_rate_hz,
        sub_seed(seed, "payload"),
    )?;
    Ok(Synth {
        signal: apply_awgn(&clean, snr, sub_seed(seed, "noise"))?,
        ground_truth: GroundTruth::Pr { protocol: class },
        snr_db: Some(snr),
        stride: None,
    })
}

/// Deterministic device universe: fingerprints drawn from the global seed.
pub fn device_profiles(global_seed: u64, count: usize) -> Vec<DeviceProfile> {
    let mut rng = seed::rng(sub_seed(global_seed, "devices"));
    (0..count)
        .map(|k| {
            let model = DEVICE_MODELS[k % DEVICE_MODELS.len()];
            DeviceProfile {
                device_id: format!("{model}-{:02}", k / DEVICE_MODELS.len() + 1),
                iq_gain_imbalance_db: rng.random_range(-1.5..1.5),
                iq_phase_skew_deg: rng.random_range(-5.0..5.0),
                dc_offset: Complex64::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05)),
                cfo_ppm: rng.random_range(-40.0..40.0),
                phase_noise_std_rad: rng.random_range(0.001..0.01),
            }
        })
        .collect()
}

/// Long-tailed draw: device `k` has weight `decay^k`.
fn pick_device(devices: &[DeviceProfile], seed: u64) -> Result<&DeviceProfile> {
    let weights: Vec<f64> = (0..devices.len())
        .map(|k| EI_WEIGHT_DECAY.powi(k as i32))
        .collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::invalid(format!("device weights: {e}")))?;
    Ok(&devices[dist.sample(&mut seed::rng(seed))])
}

fn ei(spec: &TaskSpec, seed: u64, devices: &[DeviceProfile]) -> Result<Synth> {
    let n = spec.n_samples;
    let device = pick_device(devices, sub_seed(seed, "device"))?;
    let mut rng = seed::rng(sub_seed(seed, "payload"));
    let bits = random_bits(&mut rng, n.div_ceil(SPS) * 2);
    let mut samples = modulate(ModulationKind::Qpsk, &Payload::Bits(bits), SPS, spec.sample_rate_hz)?
        .into_samples();
    samples.truncate(n);
    let clean = IqSignal::new(samples, spec.sample_rate_hz)?;
    let impaired = apply_device_profile(&clean, device, sub_seed(seed, "phase-noise"))?;
    Ok(Synth {
        signal: apply_awgn(&impaired, EI_SNR_DB, sub_seed(seed, "noise"))?,
        ground_truth: GroundTruth::Ei {
            device_id: device.device_id.clone(),
        },
        snr_db: None,
        stride: Some(SPS),
    })
}

fn ajsd(spec: &TaskSpec, i: usize, seed: u64) -> Result<Synth> {
    let fs = spec.sample_rate_hz;
    let duration = duration_us(spec);
    let mut rng = seed::rng(sub_seed(seed, "scene"));
    // Offsets on a 100 kHz grid within ±fs/4, so the reference text is exact.
    let max_step = (fs / 4.0 / 1e5).floor() as i64;
    let jammer = |rng: &mut ChaCha8Rng, kind: JammerKind| Jammer {
        kind,
        power_db_rel: rng.random_range(0..=20) as f64,
        center_offset_hz: rng.random_range(-max_step..=max_step) as f64 * 1e5,
    };
    let radar_background = |rng: &mut ChaCha8Rng| {
        let period = 25.0;
        let delay = round1(rng.random_range(0.0..10.0));
        Background::Radar(RadarPulseSpec {
            pulse_width_us: 5.0,
            period_us: period,
            count: ((duration - delay) / period).floor().max(1.0) as usize,
            delay_us: delay,
            intra_pulse: IntraPulse::Cw,
        })
    };

    let category = i % 4;
    let (background, victim_mode) = if category < 2 {
        let mode = if rng.random_bool(0.5) {
            VictimMode::RadarMode
        } else {
            VictimMode::CommMode
        };
        (Background::Noise, mode)
    } else if rng.random_bool(0.5) {
        (radar_background(&mut rng), VictimMode::RadarMode)
    } else {
        (Background::Comm(ModulationKind::Qpsk), VictimMode::CommMode)
    };
    let jammers = match category {
        0 => vec![],
        1 | 3 => {
            let kind = JammerKind::ALL[rng.random_range(0..JammerKind::ALL.len())];
            vec![jammer(&mut rng, kind)]
        }
        _ => {
            let a = rng.random_range(0..JammerKind::ALL.len());
            let b = (a + rng.random_range(1..JammerKind::ALL.len())) % JammerKind::ALL.len();
            vec![
                jammer(&mut rng, JammerKind::ALL[a]),
                jammer(&mut rng, JammerKind::ALL[b]),
            ]
        }
    };
    let with_thermal = background != Background::Noise;
    let scene = JammingScene {
        background,
        jammers,
        victim_mode,
    };
    let (signal, labels) = gen_jamming_scene(&scene, duration, fs, sub_seed(seed, "render"))?;
    let signal = if with_thermal {
        let mut s = signal.into_samples();
        add_noise(&mut s, 20.0, sub_seed(seed, "thermal"));
        IqSignal::new(s, fs)?
    } else {
        signal
    };
    Ok(Synth {
        signal,
        ground_truth: GroundTruth::Ajsd { labels },
        snr_db: None,
        stride: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_meets_every_pair() {
        // 5 classes over 20 bins: every (class, bin) pair within 100 draws.
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..100 {
            seen.insert((cycle(i, 20, 5), i % 20));
        }
        assert_eq!(seen.len(), 100);
    }

    #[test]
    fn device_universe_is_stable() {
        let a = device_profiles(7, 12);
        assert_eq!(a, device_profiles(7, 12));
        assert_eq!(a[0].device_id, "USRP-B210-01");
        assert_eq!(a[11].device_id, "PlutoSDR-02");
        for d in &a {
            d.validate().unwrap();
        }
    }
}
