//! Labeled audio ingestion: the fixed instrument/tone label sets, CSV
//! manifests, WAV loading, synthetic corpus generation, and stratified
//! train/validation/test splits.

mod synth;
mod wav;

pub use synth::{
    class_profile, generate_synthetic_corpus, render_clip, ClassProfile, ClipSpec,
    CLASS_PROFILES, SYNTH_SAMPLE_RATE,
};
pub use wav::{load_clip, write_clip_wav};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of instrument classes.
pub const CLASS_COUNT: usize = 8;

/// Reference pitch every spectrum is shifted to, in Hz.
pub const A4_HZ: f64 = 440.0;

/// Expected manifest header row.
pub const MANIFEST_HEADER: &str = "path,instrument,pitch_class,octave";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("manifest line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("manifest line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("manifest line {line}: octave {octave} not supported, only octave 4")]
    WrongOctave { line: usize, octave: i64 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: unsupported format: {detail}")]
    UnsupportedFormat { path: String, detail: String },
    #[error("class {class} has only {count} items, need at least 3 to split")]
    ClassTooSmall { class: InstrumentClass, count: usize },
}

/// One of the eight instruments, in the fixed index order 1..=8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InstrumentClass {
    Banjo,
    Cello,
    Clarinet,
    EnglishHorn,
    Guitar,
    Oboe,
    Trumpet,
    Violin,
}

impl InstrumentClass {
    pub const ALL: [InstrumentClass; CLASS_COUNT] = [
        InstrumentClass::Banjo,
        InstrumentClass::Cello,
        InstrumentClass::Clarinet,
        InstrumentClass::EnglishHorn,
        InstrumentClass::Guitar,
        InstrumentClass::Oboe,
        InstrumentClass::Trumpet,
        InstrumentClass::Violin,
    ];

    /// 1-based class index.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&c| c == self).unwrap() + 1
    }

    /// 0-based position, used as the network output slot.
    pub fn class_index(self) -> usize {
        self.index() - 1
    }

    pub fn name(self) -> &'static str {
        match self {
            InstrumentClass::Banjo => "Banjo",
            InstrumentClass::Cello => "Cello",
            InstrumentClass::Clarinet => "Clarinet",
            InstrumentClass::EnglishHorn => "EnglishHorn",
            InstrumentClass::Guitar => "Guitar",
            InstrumentClass::Oboe => "Oboe",
            InstrumentClass::Trumpet => "Trumpet",
            InstrumentClass::Violin => "Violin",
        }
    }

    pub fn from_name(name: &str) -> Option<InstrumentClass> {
        match name.trim() {
            "Banjo" => Some(InstrumentClass::Banjo),
            "Cello" => Some(InstrumentClass::Cello),
            "Clarinet" => Some(InstrumentClass::Clarinet),
            "EnglishHorn" | "English horn" => Some(InstrumentClass::EnglishHorn),
            "Guitar" => Some(InstrumentClass::Guitar),
            "Oboe" => Some(InstrumentClass::Oboe),
            "Trumpet" => Some(InstrumentClass::Trumpet),
            "Violin" => Some(InstrumentClass::Violin),
            _ => None,
        }
    }
}

impl std::fmt::Display for InstrumentClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A pitch class of the chromatic scale, written with sharps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PitchClass {
    C,
    CSharp,
    D,
    DSharp,
    E,
    F,
    FSharp,
    G,
    GSharp,
    A,
    ASharp,
    B,
}

impl PitchClass {
    pub const ALL: [PitchClass; 12] = [
        PitchClass::C,
        PitchClass::CSharp,
        PitchClass::D,
        PitchClass::DSharp,
        PitchClass::E,
        PitchClass::F,
        PitchClass::FSharp,
        PitchClass::G,
        PitchClass::GSharp,
        PitchClass::A,
        PitchClass::ASharp,
        PitchClass::B,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PitchClass::C => "C",
            PitchClass::CSharp => "C#",
            PitchClass::D => "D",
            PitchClass::DSharp => "D#",
            PitchClass::E => "E",
            PitchClass::F => "F",
            PitchClass::FSharp => "F#",
            PitchClass::G => "G",
            PitchClass::GSharp => "G#",
            PitchClass::A => "A",
            PitchClass::ASharp => "A#",
            PitchClass::B => "B",
        }
    }

    pub fn from_str_opt(s: &str) -> Option<PitchClass> {
        Self::ALL.iter().copied().find(|p| p.as_str() == s.trim())
    }

    /// Equal-tempered frequency of this pitch class in the fourth octave.
    pub fn fourth_octave_frequency(self) -> f64 {
        match self {
            PitchClass::C => 261.63,
            PitchClass::CSharp => 277.18,
            PitchClass::D => 293.66,
            PitchClass::DSharp => 311.13,
            PitchClass::E => 329.63,
            PitchClass::F => 349.23,
            PitchClass::FSharp => 369.99,
            PitchClass::G => 392.00,
            PitchClass::GSharp => 415.30,
            PitchClass::A => 440.00,
            PitchClass::ASharp => 466.16,
            PitchClass::B => 493.88,
        }
    }
}

/// A tone of the fourth octave with its equal-tempered base frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneLabel {
    pub pitch_class: PitchClass,
    pub octave: u8,
    pub base_frequency: f64,
}

impl ToneLabel {
    pub fn fourth_octave(pitch_class: PitchClass) -> ToneLabel {
        ToneLabel {
            pitch_class,
            octave: 4,
            base_frequency: pitch_class.fourth_octave_frequency(),
        }
    }

    /// The twelve fourth-octave tones in chromatic order.
    pub fn all_fourth_octave() -> [ToneLabel; 12] {
        PitchClass::ALL.map(ToneLabel::fourth_octave)
    }
}

impl std::fmt::Display for ToneLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", self.pitch_class.as_str(), self.octave)
    }
}

/// A labeled mono time-domain signal.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub instrument: InstrumentClass,
    pub tone: ToneLabel,
    pub source_id: String,
}

impl AudioClip {
    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// One row of a dataset manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: String,
    pub instrument: InstrumentClass,
    pub tone: ToneLabel,
}

/// A validated list of manifest entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Renders the manifest back to its CSV form (header plus one row per
    /// entry). Parsing the result yields the same entries.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.path,
                e.instrument.name(),
                e.tone.pitch_class.as_str(),
                e.tone.octave
            ));
        }
        out
    }
}

/// Parses manifest text: comma-separated `path,instrument,pitch_class,octave`
/// rows, an optional header, blank lines ignored.
pub fn parse_manifest(text: &str) -> Result<DatasetManifest, DatasetError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() || row == MANIFEST_HEADER {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 4 {
            return Err(DatasetError::Parse {
                line,
                message: format!("expected 4 comma-separated fields, got {}", fields.len()),
            });
        }
        let path = fields[0].trim();
        if path.is_empty() {
            return Err(DatasetError::Parse { line, message: "empty path".into() });
        }
        let instrument = InstrumentClass::from_name(fields[1]).ok_or(DatasetError::UnknownLabel {
            line,
            label: fields[1].trim().to_string(),
        })?;
        let pitch_class = PitchClass::from_str_opt(fields[2]).ok_or(DatasetError::UnknownLabel {
            line,
            label: fields[2].trim().to_string(),
        })?;
        let octave: i64 = fields[3].trim().parse().map_err(|_| DatasetError::Parse {
            line,
            message: format!("octave {:?} is not an integer", fields[3].trim()),
        })?;
        if octave != 4 {
            return Err(DatasetError::WrongOctave { line, octave });
        }
        entries.push(ManifestEntry {
            path: path.to_string(),
            instrument,
            tone: ToneLabel::fourth_octave(pitch_class),
        });
    }
    Ok(DatasetManifest { entries })
}

/// Loads and validates a manifest file.
pub fn load_manifest(path: &std::path::Path) -> Result<DatasetManifest, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_manifest(&text)
}

/// Disjoint train/validation/test id sets covering the full corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    pub train_ids: Vec<String>,
    pub validation_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

/// Splits ids into train/validation/test with the given ratios, applied per
/// class (stratified). Rounding uses largest remainders with ties resolved
/// in order train, validation, test. Deterministic for a given seed.
pub fn stratified_split(
    items: &[(String, InstrumentClass)],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<SplitAssignment, DatasetError> {
    let (r_train, r_val, r_test) = ratios;
    assert!(
        r_train > 0.0 && r_val >= 0.0 && r_test >= 0.0 && (r_train + r_val + r_test - 1.0).abs() < 1e-9,
        "split ratios must be positive and sum to 1"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = SplitAssignment {
        train_ids: Vec::new(),
        validation_ids: Vec::new(),
        test_ids: Vec::new(),
    };

    for class in InstrumentClass::ALL {
        let mut ids: Vec<&String> =
            items.iter().filter(|(_, c)| *c == class).map(|(id, _)| id).collect();
        if ids.is_empty() {
            continue;
        }
        if ids.len() < 3 {
            return Err(DatasetError::ClassTooSmall { class, count: ids.len() });
        }
        ids.shuffle(&mut rng);

        let (n_train, n_val, n_test) = apportion(ids.len(), ratios);
        split.train_ids.extend(ids[..n_train].iter().map(|s| s.to_string()));
        split
            .validation_ids
            .extend(ids[n_train..n_train + n_val].iter().map(|s| s.to_string()));
        split
            .test_ids
            .extend(ids[n_train + n_val..n_train + n_val + n_test].iter().map(|s| s.to_string()));
    }
    Ok(split)
}

/// Largest-remainder apportionment of `n` items over three ratios; ties in
/// remainders go to train first, then validation, then test.
fn apportion(n: usize, ratios: (f64, f64, f64)) -> (usize, usize, usize) {
    let quotas = [ratios.0 * n as f64, ratios.1 * n as f64, ratios.2 * n as f64];
    let mut counts = [0usize; 3];
    let mut remainders = [0f64; 3];
    for i in 0..3 {
        counts[i] = quotas[i].floor() as usize;
        remainders[i] = quotas[i] - quotas[i].floor();
    }
    let mut leftover = n - counts.iter().sum::<usize>();
    // Stable sort keeps the train/validation/test tie order.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| remainders[b].partial_cmp(&remainders[a]).unwrap());
    let mut i = 0;
    while leftover > 0 {
        counts[order[i % 3]] += 1;
        leftover -= 1;
        i += 1;
    }
    (counts[0], counts[1], counts[2])
}
