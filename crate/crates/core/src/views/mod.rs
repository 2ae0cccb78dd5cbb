//! The four canonical views of a signal, rendered as axis-free rasters on a
//! white background.

mod raster;
mod spectral;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sigsynth::IqSignal;
use crate::{Error, Result};

pub use raster::{color_table, decode_png, encode_png, RasterImage, Rgb, WHITE};
pub use spectral::{dc_index, fft_magnitude, hann, stft, Spectrogram, StftParams};

pub const DEFAULT_SIZE: u32 = 384;
/// Dynamic range shown by the spectrum and spectrogram views.
pub const DYNAMIC_RANGE_DB: f64 = 80.0;
/// Decimation used for constellations when the symbol rate is unknown.
pub const DEFAULT_CONSTELLATION_STRIDE: usize = 4;

const TRACE: Rgb = [31, 119, 180];
const TRACE_Q: Rgb = [255, 127, 14];
const TRACE_ENVELOPE: Rgb = [0, 0, 0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViewKind {
    Constellation,
    FftSpectrum,
    StftSpectrogram,
    IqWaveform,
}

impl ViewKind {
    /// Canonical order used for view references in instruction records.
    pub const ALL: [ViewKind; 4] = [
        ViewKind::Constellation,
        ViewKind::FftSpectrum,
        ViewKind::StftSpectrogram,
        ViewKind::IqWaveform,
    ];

    /// File-name suffix: `<sample_id>_<suffix>.png`.
    pub fn file_suffix(self) -> &'static str {
        match self {
            ViewKind::Constellation => "constellation",
            ViewKind::FftSpectrum => "fft",
            ViewKind::StftSpectrogram => "stft",
            ViewKind::IqWaveform => "iq",
        }
    }

    pub fn file_name(self, sample_id: &str) -> String {
        format!("{sample_id}_{}.png", self.file_suffix())
    }
}

impl fmt::Display for ViewKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_suffix())
    }
}

impl FromStr for ViewKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ViewKind::ALL
            .into_iter()
            .find(|k| k.file_suffix().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Unsupported(format!("view kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderParams {
    pub size: u32,
    pub stft: StftParams,
    /// Constellation decimation; `None` uses [`DEFAULT_CONSTELLATION_STRIDE`].
    pub constellation_stride: Option<usize>,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self {
            size: DEFAULT_SIZE,
            stft: StftParams::default(),
            constellation_stride: None,
        }
    }
}

impl RenderParams {
    pub fn with_stride(self, stride: Option<usize>) -> Self {
        Self {
            constellation_stride: stride,
            ..self
        }
    }
}

/// Render one view. Pure: equal inputs always produce equal pixels.
pub fn render_view(signal: &IqSignal, kind: ViewKind, params: &RenderParams) -> Result<RasterImage> {
    if params.size == 0 {
        return Err(Error::invalid("render size must be positive"));
    }
    match kind {
        ViewKind::Constellation => render_constellation(signal, params),
        ViewKind::FftSpectrum => render_spectrum(signal, params.size),
        ViewKind::StftSpectrogram => render_spectrogram(signal, params),
        ViewKind::IqWaveform => render_waveform(signal, params.size),
    }
}

/// All four views in canonical order.
pub fn render_all(signal: &IqSignal, params: &RenderParams) -> Result<[RasterImage; 4]> {
    Ok([
        render_view(signal, ViewKind::Constellation, params)?,
        render_view(signal, ViewKind::FftSpectrum, params)?,
        render_view(signal, ViewKind::StftSpectrogram, params)?,
        render_view(signal, ViewKind::IqWaveform, params)?,
    ])
}

fn render_constellation(signal: &IqSignal, params: &RenderParams) -> Result<RasterImage> {
    let stride = params
        .constellation_stride
        .unwrap_or(DEFAULT_CONSTELLATION_STRIDE);
    if stride == 0 {
        return Err(Error::invalid("constellation stride must be positive"));
    }
    let size = params.size;
    let mut img = RasterImage::new(size, size, WHITE)?;
    let points: Vec<_> = signal.samples().iter().step_by(stride).collect();
    let peak = points.iter().fold(0.0f64, |m, p| m.max(p.norm()));
    let limit = if peak > 0.0 { 1.5 * peak } else { 1.0 };
    let span = (size - 1) as f64;
    let radius = i64::from(size >= 64);
    for p in points {
        let x = ((p.re + limit) / (2.0 * limit) * span).round() as i64;
        let y = ((limit - p.im) / (2.0 * limit) * span).round() as i64;
        img.dot(x, y, radius, TRACE);
    }
    Ok(img)
}

/// Magnitude in dB relative to `peak`, clamped to the display range.
fn relative_db(value: f64, peak: f64) -> f64 {
    if peak <= 0.0 || value <= 0.0 {
        return -DYNAMIC_RANGE_DB;
    }
    (20.0 * (value / peak).log10()).max(-DYNAMIC_RANGE_DB)
}

/// Bins covered by pixel column `c` out of `width`.
fn column_bins(c: usize, width: usize, n: usize) -> std::ops::Range<usize> {
    let start = c * n / width;
    let end = ((c + 1) * n / width).max(start + 1).min(n);
    start.min(n - 1)..end
}

fn render_spectrum(signal: &IqSignal, size: u32) -> Result<RasterImage> {
    let mags = fft_magnitude(signal)?;
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    let mut img = RasterImage::new(size, size, WHITE)?;
    let span = (size - 1) as f64;
    let mut prev: Option<i64> = None;
    for c in 0..size as usize {
        let m = mags[column_bins(c, size as usize, mags.len())]
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        let y = (-relative_db(m, peak) / DYNAMIC_RANGE_DB * span).round() as i64;
        img.vspan(c as i64, prev.unwrap_or(y), y, TRACE);
        prev = Some(y);
    }
    Ok(img)
}

fn render_spectrogram(signal: &IqSignal, params: &RenderParams) -> Result<RasterImage> {
    let spec = stft(signal, &params.stft)?;
    let peak = spec.values().iter().cloned().fold(0.0, f64::max);
    let table = color_table();
    let size = params.size as usize;
    let mut img = RasterImage::new(params.size, params.size, WHITE)?;
    for x in 0..size {
        let t = x * spec.n_frames / size;
        for y in 0..size {
            // Top row is the highest frequency.
            let bin = spec.n_bins - 1 - y * spec.n_bins / size;
            let db = relative_db(spec.get(t, bin), peak);
            let level = ((db + DYNAMIC_RANGE_DB) / DYNAMIC_RANGE_DB * 255.0).round() as usize;
            img.set(x as i64, y as i64, table[level.min(255)]);
        }
    }
    Ok(img)
}

fn render_waveform(signal: &IqSignal, size: u32) -> Result<RasterImage> {
    let samples = signal.samples();
    let peak = samples
        .iter()
        .fold(0.0f64, |m, s| m.max(s.re.abs()).max(s.im.abs()).max(s.norm()));
    let limit = if peak > 0.0 { 1.05 * peak } else { 1.0 };
    let span = (size - 1) as f64;
    let to_y = |v: f64| ((limit - v) / (2.0 * limit) * span).round() as i64;
    let mut img = RasterImage::new(size, size, WHITE)?;
    let traces: [(fn(&num_complex::Complex64) -> f64, Rgb); 3] = [
        (|s| s.re, TRACE),
        (|s| s.im, TRACE_Q),
        (|s| s.norm(), TRACE_ENVELOPE),
    ];
    for (value, color) in traces {
        let mut prev: Option<(i64, i64)> = None;
        for c in 0..size as usize {
            let range = column_bins(c, size as usize, samples.len());
            let (lo, hi) = samples[range]
                .iter()
                .map(value)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let (top, bottom) = (to_y(hi), to_y(lo));
            // Connect to the previous column so the trace stays continuous.
            let (from, to) = match prev {
                Some((ptop, pbottom)) => (top.min(pbottom), bottom.max(ptop)),
                None => (top, bottom),
            };
            img.vspan(c as i64, from, to, color);
            prev = Some((top, bottom));
        }
    }
    Ok(img)
}
