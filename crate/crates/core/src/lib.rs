//! Musical-instrument timbre classification from spectral features.
//!
//! The pipeline turns a labeled audio clip into a 50-element normalized
//! feature vector (FFT magnitude, resampled to a 1 Hz grid over 1-1000 Hz,
//! pitch-shifted to A4, band-masked per experiment variant, partitioned
//! into 50 bands, min-max scaled) and trains a 50-30-8 multilayer
//! perceptron with resilient backpropagation and early stopping.
//!
//! Modules:
//! - [`dataset`]: manifest/WAV ingestion, synthetic corpus generation,
//!   stratified splits
//! - [`dsp`]: Fourier magnitude spectra, RMS, dB ratios, unit-grid resampling
//! - [`segmentation`]: onset detection, attack / steady-state extraction
//! - [`features`]: the per-variant feature pipeline and feature CSV format
//! - [`mlp`]: network, Rprop updates, early-stopping trainer, evaluation
//! - [`experiment`]: the five-variant comparison harness and reports

pub mod dataset;
pub mod dsp;
pub mod experiment;
pub mod features;
pub mod mlp;
pub mod segmentation;

pub use dataset::{AudioClip, InstrumentClass, ToneLabel};
pub use features::{FeatureVector, Variant};
