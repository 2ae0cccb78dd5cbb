//! Small DSP helpers shared by the generators.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

pub(crate) fn mean_power(samples: &[Complex64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// Scale to unit mean power. Leaves all-zero input untouched.
pub(crate) fn normalize_power(samples: &mut [Complex64]) {
    let p = mean_power(samples);
    if p > 0.0 {
        let k = 1.0 / p.sqrt();
        for s in samples.iter_mut() {
            *s *= k;
        }
    }
}

/// Multiply by `e^{j2π f n / fs}`.
pub(crate) fn frequency_shift(samples: &mut [Complex64], offset_hz: f64, sample_rate_hz: f64) {
    if offset_hz == 0.0 {
        return;
    }
    let w = 2.0 * PI * offset_hz / sample_rate_hz;
    for (n, s) in samples.iter_mut().enumerate() {
        *s *= Complex64::from_polar(1.0, w * n as f64);
    }
}

pub(crate) fn fft_in_place(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

pub(crate) fn ifft_in_place(buf: &mut [Complex64]) {
    let n = buf.len() as f64;
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(buf.len()).process(buf);
    for s in buf.iter_mut() {
        *s /= n;
    }
}

/// Zero every FFT bin whose frequency magnitude is at or above `cutoff` of
/// the sample rate (cutoff as a fraction, 0 < cutoff < 0.5).
pub(crate) fn brickwall_lowpass(samples: &mut [Complex64], cutoff: f64) {
    let n = samples.len();
    fft_in_place(samples);
    for (k, s) in samples.iter_mut().enumerate() {
        let f = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 } / n as f64;
        if f.abs() >= cutoff && k != 0 {
            *s = Complex64::new(0.0, 0.0);
        }
    }
    ifft_in_place(samples);
}

/// Analytic signal of a real sequence (`x + j·H{x}`), one-sided spectrum.
pub(crate) fn analytic(real: &[f64]) -> Vec<Complex64> {
    let n = real.len();
    let mut buf: Vec<Complex64> = real.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    fft_in_place(&mut buf);
    for (k, s) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || (n % 2 == 0 && k == n / 2) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *s *= gain;
    }
    ifft_in_place(&mut buf);
    buf
}

pub(crate) fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_of_cosine_is_complex_exponential() {
        let n = 64;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * 4.0 * i as f64 / n as f64).cos()).collect();
        let a = analytic(&x);
        for (i, s) in a.iter().enumerate() {
            let expect = Complex64::from_polar(1.0, 2.0 * PI * 4.0 * i as f64 / n as f64);
            assert!((s - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn normalize_reaches_unit_power() {
        let mut v = vec![Complex64::new(3.0, 4.0); 10];
        normalize_power(&mut v);
        assert!((mean_power(&v) - 1.0).abs() < 1e-12);
    }
}
