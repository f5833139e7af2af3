//! WAV ingestion: RIFF/WAVE, 16-bit integer PCM or 32-bit IEEE float,
//! mono or stereo, any sample rate >= 8000 Hz. Stereo is averaged to mono
//! and integer PCM is rescaled to [-1, 1].

use std::path::Path;

use super::{AudioClip, DatasetError, ManifestEntry};

const MIN_SAMPLE_RATE: u32 = 8000;

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io { path: path.display().to_string(), source }
}

fn format_err(path: &Path, detail: impl Into<String>) -> DatasetError {
    DatasetError::UnsupportedFormat { path: path.display().to_string(), detail: detail.into() }
}

/// Reads the WAV file referenced by a manifest entry (resolved against
/// `root`) into a mono [`AudioClip`]. The entry path doubles as source id.
pub fn load_clip(entry: &ManifestEntry, root: &Path) -> Result<AudioClip, DatasetError> {
    let path = root.join(&entry.path);
    let reader = hound::WavReader::open(&path).map_err(|e| match e {
        hound::Error::IoError(source) => io_err(&path, source),
        other => format_err(&path, other.to_string()),
    })?;
    let spec = reader.spec();

    if spec.sample_rate < MIN_SAMPLE_RATE {
        return Err(format_err(&path, format!("sample rate {} < {MIN_SAMPLE_RATE} Hz", spec.sample_rate)));
    }
    if spec.channels == 0 || spec.channels > 2 {
        return Err(format_err(&path, format!("{} channels, only 1-2 supported", spec.channels)));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(|e| format_err(&path, e.to_string()))?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(|e| format_err(&path, e.to_string()))?,
        (format, bits) => {
            return Err(format_err(&path, format!("{format:?} {bits}-bit samples not supported")));
        }
    };

    let samples = if spec.channels == 1 {
        interleaved
    } else {
        interleaved.chunks_exact(2).map(|pair| (pair[0] + pair[1]) / 2.0).collect()
    };
    if samples.is_empty() {
        return Err(format_err(&path, "no samples"));
    }

    Ok(AudioClip {
        samples,
        sample_rate: spec.sample_rate,
        instrument: entry.instrument,
        tone: entry.tone,
        source_id: entry.path.clone(),
    })
}

/// Writes a clip as 16-bit mono PCM. Samples are clamped to [-1, 1].
pub fn write_clip_wav(clip: &AudioClip, path: &Path) -> Result<(), DatasetError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| match e {
        hound::Error::IoError(source) => io_err(path, source),
        other => format_err(path, other.to_string()),
    })?;
    for &x in &clip.samples {
        let v = (x.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v).map_err(|e| format_err(path, e.to_string()))?;
    }
    writer.finalize().map_err(|e| format_err(path, e.to_string()))?;
    Ok(())
}
