//! Signal-processing kernels: Fourier magnitude spectra (fast path plus a
//! brute-force oracle), RMS energy, decibel ratios, and resampling of
//! magnitude spectra onto the fixed 1 Hz analysis grid.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

/// Lowest frequency of the canonical analysis grid, in Hz.
pub const UNIT_GRID_MIN_HZ: usize = 1;
/// Highest frequency of the canonical analysis grid, in Hz.
pub const UNIT_GRID_MAX_HZ: usize = 1000;
/// Number of points on the canonical grid (one per integer frequency).
pub const UNIT_GRID_LEN: usize = UNIT_GRID_MAX_HZ - UNIT_GRID_MIN_HZ + 1;

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("input signal is empty")]
    EmptyInput,
    #[error("spectrum covers only {covered_hz:.2} Hz, need at least {required_hz} Hz")]
    InsufficientBandwidth { covered_hz: f64, required_hz: f64 },
    #[error("ratio arguments must be positive, got {0} and {1}")]
    NonPositive(f64, f64),
}

/// Linear magnitude spectrum on a uniform grid starting at DC.
///
/// `values[k]` is the magnitude at `k * bin_hz` Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeSpectrum {
    pub values: Vec<f64>,
    pub bin_hz: f64,
}

impl MagnitudeSpectrum {
    /// Highest frequency covered by the spectrum.
    pub fn max_frequency(&self) -> f64 {
        self.bin_hz * self.values.len().saturating_sub(1) as f64
    }
}

/// Magnitude sampled at the integer frequencies 1..=1000 Hz.
///
/// `values[k]` is the magnitude at `k + 1` Hz; DC is excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSpectrum {
    values: Vec<f64>,
}

impl UnitSpectrum {
    /// Wraps a vector of exactly [`UNIT_GRID_LEN`] non-negative magnitudes.
    pub fn new(values: Vec<f64>) -> Self {
        assert_eq!(values.len(), UNIT_GRID_LEN, "unit spectrum must have {UNIT_GRID_LEN} points");
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Magnitude at an integer frequency in 1..=1000 Hz.
    pub fn value_at_hz(&self, hz: usize) -> f64 {
        assert!((UNIT_GRID_MIN_HZ..=UNIT_GRID_MAX_HZ).contains(&hz));
        self.values[hz - UNIT_GRID_MIN_HZ]
    }
}

/// Direct O(N^2) evaluation of the DFT magnitude for bins `0..=N/2`.
///
/// Reference route for [`fft_magnitude`]; the two must agree on identical
/// input but share no code.
pub fn dft_magnitude_oracle(samples: &[f64], sample_rate: u32) -> Result<MagnitudeSpectrum, DspError> {
    if samples.is_empty() {
        return Err(DspError::EmptyInput);
    }
    let n = samples.len();
    let values = (0..=n / 2).map(|k| dft_bin_magnitude(samples, k)).collect();
    Ok(MagnitudeSpectrum {
        values,
        bin_hz: sample_rate as f64 / n as f64,
    })
}

/// Direct O(N^2) DFT magnitudes for all `N` bins, for energy accounting
/// (Parseval) where the redundant upper half matters.
pub fn dft_magnitude_oracle_full(samples: &[f64]) -> Result<Vec<f64>, DspError> {
    if samples.is_empty() {
        return Err(DspError::EmptyInput);
    }
    Ok((0..samples.len()).map(|k| dft_bin_magnitude(samples, k)).collect())
}

fn dft_bin_magnitude(samples: &[f64], k: usize) -> f64 {
    let n = samples.len() as f64;
    let step = -2.0 * std::f64::consts::PI * k as f64 / n;
    let mut re = 0.0;
    let mut im = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let (s, c) = (step * i as f64).sin_cos();
        re += x * c;
        im += x * s;
    }
    re.hypot(im)
}

/// FFT magnitude spectrum of a real signal.
///
/// The input is zero-padded to the next power of two N; the result holds
/// bins `0..=N/2` with `bin_hz = sample_rate / N`.
pub fn fft_magnitude(samples: &[f64], sample_rate: u32) -> Result<MagnitudeSpectrum, DspError> {
    if samples.is_empty() {
        return Err(DspError::EmptyInput);
    }
    let n = samples.len().next_power_of_two();
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    buf.resize(n, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let values = buf[..=n / 2].iter().map(|c| c.norm()).collect();
    Ok(MagnitudeSpectrum {
        values,
        bin_hz: sample_rate as f64 / n as f64,
    })
}

/// Linear interpolation of a magnitude spectrum onto the integer grid
/// 1..=1000 Hz. DC is excluded from the output.
pub fn resample_to_unit_grid(spec: &MagnitudeSpectrum) -> Result<UnitSpectrum, DspError> {
    let covered = spec.max_frequency();
    if covered < UNIT_GRID_MAX_HZ as f64 {
        return Err(DspError::InsufficientBandwidth {
            covered_hz: covered,
            required_hz: UNIT_GRID_MAX_HZ as f64,
        });
    }
    let mut values = Vec::with_capacity(UNIT_GRID_LEN);
    for hz in UNIT_GRID_MIN_HZ..=UNIT_GRID_MAX_HZ {
        let pos = hz as f64 / spec.bin_hz;
        let lo = pos.floor() as usize;
        let t = pos - pos.floor();
        let v = if lo + 1 < spec.values.len() {
            spec.values[lo] * (1.0 - t) + spec.values[lo + 1] * t
        } else {
            spec.values[lo]
        };
        values.push(v);
    }
    Ok(UnitSpectrum::new(values))
}

/// Root mean square of a signal.
pub fn rms(samples: &[f64]) -> Result<f64, DspError> {
    if samples.is_empty() {
        return Err(DspError::EmptyInput);
    }
    let sum_sq: f64 = samples.iter().map(|&x| x * x).sum();
    Ok((sum_sq / samples.len() as f64).sqrt())
}

/// Amplitude ratio of `a` to `b` in decibels: `20 * log10(a / b)`.
pub fn db_ratio(a: f64, b: f64) -> Result<f64, DspError> {
    if a <= 0.0 || b <= 0.0 {
        return Err(DspError::NonPositive(a, b));
    }
    Ok(20.0 * (a / b).log10())
}
