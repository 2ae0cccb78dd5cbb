use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::sigsynth::IqSignal;
use crate::{Error, Result};

/// Index of the DC bin after reordering: `N / 2` (integer division).
pub fn dc_index(n: usize) -> usize {
    n / 2
}

/// `|FFT(x)|` in DC-centered order: output index `i` holds frequency bin
/// `i - N/2`, so negative frequencies come first and DC sits at `N/2`.
pub fn fft_magnitude(signal: &IqSignal) -> Result<Vec<f64>> {
    if signal.len() < 2 {
        return Err(Error::invalid("FFT needs at least two samples"));
    }
    Ok(centered_magnitude(signal.samples().to_vec()))
}

fn centered_magnitude(mut buf: Vec<Complex64>) -> Vec<f64> {
    let n = buf.len();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let shift = n - dc_index(n);
    (0..n).map(|i| buf[(i + shift) % n].norm()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftParams {
    pub window_len: usize,
    pub hop: usize,
}

impl Default for StftParams {
    fn default() -> Self {
        Self {
            window_len: 256,
            hop: 64,
        }
    }
}

impl StftParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || !self.window_len.is_power_of_two() {
            return Err(Error::invalid(format!(
                "STFT window length {} must be a power of two",
                self.window_len
            )));
        }
        if self.hop == 0 || self.hop > self.window_len {
            return Err(Error::invalid(format!(
                "STFT hop {} must be in 1..={}",
                self.hop, self.window_len
            )));
        }
        Ok(())
    }

    pub fn frame_count(&self, n_samples: usize) -> usize {
        if n_samples < self.window_len {
            0
        } else {
            1 + (n_samples - self.window_len) / self.hop
        }
    }
}

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
        .collect()
}

/// Time-frequency magnitude matrix: one DC-centered magnitude row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub n_frames: usize,
    pub n_bins: usize,
    data: Vec<f64>,
}

impl Spectrogram {
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.n_bins..(t + 1) * self.n_bins]
    }

    pub fn get(&self, t: usize, bin: usize) -> f64 {
        self.data[t * self.n_bins + bin]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

pub fn stft(signal: &IqSignal, params: &StftParams) -> Result<Spectrogram> {
    params.validate()?;
    let n = signal.len();
    if n < params.window_len {
        return Err(Error::invalid(format!(
            "signal of {n} samples is shorter than the {}-sample STFT window",
            params.window_len
        )));
    }
    let frames = params.frame_count(n);
    let window = hann(params.window_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(params.window_len);
    let shift = params.window_len - dc_index(params.window_len);
    let mut data = Vec::with_capacity(frames * params.window_len);
    let mut buf = vec![Complex64::new(0.0, 0.0); params.window_len];
    for t in 0..frames {
        let start = t * params.hop;
        for (i, (b, w)) in buf.iter_mut().zip(&window).enumerate() {
            *b = signal.samples()[start + i] * *w;
        }
        fft.process(&mut buf);
        data.extend((0..params.window_len).map(|i| buf[(i + shift) % params.window_len].norm()));
    }
    Ok(Spectrogram {
        n_frames: frames,
        n_bins: params.window_len,
        data,
    })
}
