use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use emforge::sigsynth::{gen_radar_pulse_train, modulate, pulse_index_ranges, IntraPulse, IqSignal, ModulationKind, Payload, RadarPulseSpec};
use emforge::views::{
    decode_png, encode_png, fft_magnitude, hann, render_all, render_view, stft, RasterImage, RenderParams, StftParams,
    ViewKind, WHITE,
};

#[test]
fn parseval_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in [8, 100, 1024, 4096] {
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let time: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let freq: f64 = fft_magnitude(&IqSignal::new(x, 1.0).unwrap())
            .unwrap()
            .iter()
            .map(|m| m * m)
            .sum();
        assert!((freq - n as f64 * time).abs() <= 1e-6 * freq, "N={n}");
    }
}

proptest! {
    #[test]
    fn stft_frame_count(n in 1usize..5000, log_window in 3u32..10, hop_frac in 1usize..=8) {
        let window_len = 1usize << log_window;
        let hop = (window_len * hop_frac / 8).max(1);
        let params = StftParams { window_len, hop };
        let expected = if n < window_len { 0 } else { (n - window_len) / hop + 1 };
        prop_assert_eq!(params.frame_count(n), expected);
        let signal = IqSignal::new(vec![Complex64::new(1.0, 0.0); n], 1.0).unwrap();
        match stft(&signal, &params) {
            Ok(sg) => {
                prop_assert_eq!(sg.n_frames, expected);
                prop_assert_eq!(sg.values().len(), expected * window_len);
                // The last frame still fits in the signal.
                prop_assert!((expected - 1) * hop + window_len <= n);
            }
            Err(_) => prop_assert_eq!(expected, 0),
        }
    }
}

#[test]
fn frame_energy_tracks_the_pulse_envelope() {
    let fs = 10e6;
    let spec = RadarPulseSpec {
        pulse_width_us: 12.0,
        period_us: 50.0,
        count: 4,
        delay_us: 7.3,
        intra_pulse: IntraPulse::Cw,
    };
    let s = gen_radar_pulse_train(&spec, 220.0, fs).unwrap();
    let params = StftParams::default();
    let sg = stft(&s, &params).unwrap();

    let mut envelope = vec![0.0; s.len()];
    for r in pulse_index_ranges(&spec, fs) {
        for i in r {
            envelope[i] = 1.0;
        }
    }
    let w = hann(params.window_len);
    let window_energy = |t: usize| -> f64 {
        let start = t * params.hop;
        (0..params.window_len).map(|i| w[i] * w[i] * envelope[start + i]).sum()
    };
    let expected: Vec<f64> = (0..sg.n_frames).map(window_energy).collect();
    let peak = expected.iter().cloned().fold(0.0, f64::max);
    for (t, e) in expected.iter().enumerate() {
        let got: f64 = sg.frame(t).iter().map(|m| m * m).sum::<f64>() / params.window_len as f64;
        assert!((got - e).abs() <= 1e-9 * peak, "frame {t}: {got} vs {e}");
    }
    assert!(expected.iter().any(|&e| e == 0.0));
}

/// Connected components of non-background pixels, 8-neighborhood.
fn components(img: &RasterImage) -> usize {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for start in 0..w * h {
        if seen[start] || img.pixel((start % w) as u32, (start / w) as u32) == WHITE {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(p) = stack.pop() {
            let (x, y) = ((p % w) as i64, (p / w) as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if !seen[q] && img.pixel(nx as u32, ny as u32) != WHITE {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
    }
    count
}

#[test]
fn noiseless_bpsk_constellation_has_two_clusters() {
    let bits: Vec<u8> = (0..256).map(|i| ((i * 5 + i / 7) % 2) as u8).collect();
    let s = modulate(ModulationKind::Bpsk, &Payload::Bits(bits), 8, 1e6).unwrap();
    let params = RenderParams::default().with_stride(Some(8));
    let img = render_view(&s, ViewKind::Constellation, &params).unwrap();
    assert_eq!(components(&img), 2);
}

#[test]
fn every_view_is_deterministic_and_png_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let bits: Vec<u8> = (0..2048).map(|_| rng.random_range(0..2)).collect();
    let s = modulate(ModulationKind::Qpsk, &Payload::Bits(bits), 8, 1e6).unwrap();
    let a = render_all(&s, &RenderParams::default()).unwrap();
    let b = render_all(&s, &RenderParams::default()).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((x.width(), x.height()), (384, 384));
        let (px, py) = (encode_png(x).unwrap(), encode_png(y).unwrap());
        assert_eq!(px, py);
        assert_eq!(&decode_png(&px).unwrap(), x);
    }
}
