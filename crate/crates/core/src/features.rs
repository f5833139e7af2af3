//! The per-variant feature pipeline: segment selection, FFT magnitude,
//! unit-grid resampling, multiplicative pitch shift to A4, band masking,
//! partitioning into 50 bands, and min-max normalization.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{AudioClip, InstrumentClass, ToneLabel, A4_HZ};
use crate::dsp::{self, DspError, UnitSpectrum, UNIT_GRID_LEN, UNIT_GRID_MAX_HZ, UNIT_GRID_MIN_HZ};
use crate::segmentation::{self, SegmentError};

/// Length of a feature vector.
pub const FEATURE_LEN: usize = 50;
/// Width of one partition band on the unit grid, Hz.
pub const BAND_WIDTH_HZ: usize = UNIT_GRID_LEN / FEATURE_LEN;
/// Cut frequency between the two band-mask experiments, Hz.
pub const BAND_SPLIT_HZ: usize = 100;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("feature file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// The five experiment variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Base,
    AttackOnly,
    WithoutAttack,
    First100Hz,
    Following900Hz,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Base,
        Variant::AttackOnly,
        Variant::WithoutAttack,
        Variant::First100Hz,
        Variant::Following900Hz,
    ];

    /// Stable machine-readable key, used in CSV files and file names.
    pub fn key(self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::AttackOnly => "only-attack",
            Variant::WithoutAttack => "without-attack",
            Variant::First100Hz => "first-100hz",
            Variant::Following900Hz => "following-900hz",
        }
    }

    /// Human-readable experiment label for report tables.
    pub fn label(self) -> &'static str {
        match self {
            Variant::Base => "Base experiment",
            Variant::AttackOnly => "Only attack",
            Variant::WithoutAttack => "Without attack",
            Variant::First100Hz => "First 100Hz",
            Variant::Following900Hz => "Following 900Hz",
        }
    }

    pub fn from_key(key: &str) -> Option<Variant> {
        Self::ALL.iter().copied().find(|v| v.key() == key.trim())
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

/// A labeled, normalized 50-element feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: InstrumentClass,
    pub variant: Variant,
    pub source_id: String,
}

/// Rescales the frequency axis multiplicatively so the labeled fundamental
/// lands on A4 (440 Hz): the output at `f` Hz takes the input value at
/// `f / r` Hz with `r = 440 / f0`, zero outside the source range.
pub fn shift_to_a4(spec: &UnitSpectrum, tone: &ToneLabel) -> UnitSpectrum {
    let ratio = A4_HZ / tone.base_frequency;
    let values = spec.values();
    let mut out = vec![0.0; UNIT_GRID_LEN];
    for (i, slot) in out.iter_mut().enumerate() {
        let f = (i + UNIT_GRID_MIN_HZ) as f64;
        let src = f / ratio;
        if !(UNIT_GRID_MIN_HZ as f64..=UNIT_GRID_MAX_HZ as f64).contains(&src) {
            continue;
        }
        let lo = src.floor() as usize; // integer source frequency in Hz
        let t = src - src.floor();
        *slot = if lo >= UNIT_GRID_MAX_HZ {
            values[UNIT_GRID_LEN - 1]
        } else {
            values[lo - 1] * (1.0 - t) + values[lo] * t
        };
    }
    UnitSpectrum::new(out)
}

/// Zeroes the spectrum outside the variant's frequency range: everything
/// above 100 Hz for `First100Hz`, everything at or below 100 Hz for
/// `Following900Hz`; other variants pass through unchanged.
pub fn apply_band_mask(spec: &UnitSpectrum, variant: Variant) -> UnitSpectrum {
    let mut values = spec.values().to_vec();
    match variant {
        Variant::First100Hz => {
            for v in values.iter_mut().skip(BAND_SPLIT_HZ) {
                *v = 0.0;
            }
        }
        Variant::Following900Hz => {
            for v in values.iter_mut().take(BAND_SPLIT_HZ) {
                *v = 0.0;
            }
        }
        Variant::Base | Variant::AttackOnly | Variant::WithoutAttack => {}
    }
    UnitSpectrum::new(values)
}

/// Averages the unit spectrum into 50 consecutive 20 Hz bands; band `k`
/// covers `20k+1 ..= 20k+20` Hz.
pub fn partition_50(spec: &UnitSpectrum) -> [f64; FEATURE_LEN] {
    let values = spec.values();
    std::array::from_fn(|k| {
        let band = &values[k * BAND_WIDTH_HZ..(k + 1) * BAND_WIDTH_HZ];
        band.iter().sum::<f64>() / BAND_WIDTH_HZ as f64
    })
}

/// Min-max scaling into [0, 1]; an all-equal input maps to all zeros.
pub fn normalize(values: &[f64; FEATURE_LEN]) -> [f64; FEATURE_LEN] {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return [0.0; FEATURE_LEN];
    }
    let span = max - min;
    std::array::from_fn(|i| (values[i] - min) / span)
}

/// Runs the whole pipeline for one clip and variant. The attack variants
/// segment the clip first; `Base`, `First100Hz`, and `Following900Hz` use
/// the whole clip.
pub fn extract_features(clip: &AudioClip, variant: Variant) -> Result<FeatureVector, FeatureError> {
    let segment;
    let samples = match variant {
        Variant::Base | Variant::First100Hz | Variant::Following900Hz => &clip.samples,
        Variant::AttackOnly => {
            let onset = segmentation::detect_onset(clip)?;
            segment = segmentation::extract_attack(clip, &onset)?;
            &segment.samples
        }
        Variant::WithoutAttack => {
            let onset = segmentation::detect_onset(clip)?;
            segment = segmentation::extract_steady(clip, &onset)?;
            &segment.samples
        }
    };

    let spectrum = dsp::fft_magnitude(samples, clip.sample_rate)?;
    let unit = dsp::resample_to_unit_grid(&spectrum)?;
    let shifted = shift_to_a4(&unit, &clip.tone);
    let masked = apply_band_mask(&shifted, variant);
    let values = normalize(&partition_50(&masked));

    Ok(FeatureVector {
        values: values.to_vec(),
        label: clip.instrument,
        variant,
        source_id: clip.source_id.clone(),
    })
}

fn feature_csv_header() -> String {
    let mut header = String::from("source_id,instrument,variant");
    for i in 0..FEATURE_LEN {
        header.push_str(&format!(",f{i:02}"));
    }
    header
}

/// Writes feature vectors as CSV: header
/// `source_id,instrument,variant,f00..f49`, values with 10 significant
/// digits.
pub fn write_features_csv(path: &Path, features: &[FeatureVector]) -> Result<(), FeatureError> {
    let io_err = |source| FeatureError::Io { path: path.display().to_string(), source };
    let mut file = std::fs::File::create(path).map(std::io::BufWriter::new).map_err(io_err)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(file, "{}", feature_csv_header())?;
        for fv in features {
            write!(file, "{},{},{}", fv.source_id, fv.label.name(), fv.variant.key())?;
            for v in &fv.values {
                write!(file, ",{v:.9e}")?;
            }
            writeln!(file)?;
        }
        file.flush()
    };
    write().map_err(io_err)
}

/// Reads a feature CSV written by [`write_features_csv`].
pub fn read_features_csv(path: &Path) -> Result<Vec<FeatureVector>, FeatureError> {
    let file = std::fs::File::open(path).map_err(|source| FeatureError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut features = Vec::new();
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let lineno = idx + 1;
        let row = line.trim();
        if row.is_empty() || row.starts_with("source_id,") {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 3 + FEATURE_LEN {
            return Err(FeatureError::Parse {
                line: lineno,
                message: format!("expected {} fields, got {}", 3 + FEATURE_LEN, fields.len()),
            });
        }
        let label = InstrumentClass::from_name(fields[1]).ok_or_else(|| FeatureError::Parse {
            line: lineno,
            message: format!("unknown instrument {:?}", fields[1]),
        })?;
        let variant = Variant::from_key(fields[2]).ok_or_else(|| FeatureError::Parse {
            line: lineno,
            message: format!("unknown variant {:?}", fields[2]),
        })?;
        let values = fields[3..]
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| FeatureError::Parse { line: lineno, message: e.to_string() })?;
        features.push(FeatureVector {
            values,
            label,
            variant,
            source_id: fields[0].to_string(),
        });
    }
    Ok(features)
}
