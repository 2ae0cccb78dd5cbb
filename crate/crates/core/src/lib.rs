//! Corpus forge and benchmark harness for multi-view electromagnetic signal
//! instruction data.
//!
//! The pipeline runs in five stages, one module each:
//!
//! - [`sigsynth`]: labeled complex-baseband synthesis (modulations, radar
//!   pulse trains, protocol bursts, jamming scenes) plus AWGN and receiver
//!   impairments.
//! - [`views`]: the four canonical views (constellation, FFT spectrum, STFT
//!   spectrogram, IQ waveform) rendered as deterministic rasters and PNGs.
//! - [`instrgen`]: OpenQA / MCQA instruction records with distractor
//!   synthesis and the mandatory "Unable to answer" option.
//! - [`corpus`]: per-task builds, leak-free SNR-stratified splitting and
//!   manifest I/O.
//! - [`metrics`]: tag parsing, accuracy, BLEU-4 / ROUGE-L / METEOR / CIDEr,
//!   the AJSD composite and SNR-binned reports.
//!
//! [`budget`] holds the multi-view packing arithmetic and the autoregressive
//! log-probability / loss reference, and [`config`] ties everything into a
//! single reproducible run configuration.

pub mod budget;
pub mod config;
pub mod corpus;
mod error;
pub mod instrgen;
pub mod metrics;
pub mod seed;
pub mod sigsynth;
pub mod views;

pub use error::{Error, Result};
