//! Time-domain onset detection and attack / steady-state extraction.
//!
//! The clip is scanned in consecutive 10 ms windows; the onset is the start
//! of the first window whose RMS is at least 10 dB above the whole-signal
//! RMS. The attack is the fixed 100 ms after the onset; the steady state
//! starts 200 ms after the attack ends and runs to the end of the clip.

use thiserror::Error;

use crate::dataset::AudioClip;
use crate::dsp;

/// Width of the onset scan window, ms.
pub const ONSET_WINDOW_MS: u32 = 10;
/// RMS threshold over the whole-signal average, dB (amplitude convention).
pub const ONSET_THRESHOLD_DB: f64 = 10.0;
/// Fixed transient length, ms.
pub const ATTACK_MS: u32 = 100;
/// Guard gap between the attack end and the steady-state start, ms.
pub const STEADY_GAP_MS: u32 = 200;
/// Minimum usable steady-state length, ms.
pub const MIN_STEADY_MS: u32 = 100;

#[derive(Debug, Error, PartialEq)]
pub enum SegmentError {
    #[error("no window rises 10 dB above the whole-signal RMS")]
    NoOnsetFound,
    #[error("clip too short: need {required} samples, have {available}")]
    ClipTooShort { required: usize, available: usize },
}

/// Result of the windowed onset scan.
#[derive(Debug, Clone, PartialEq)]
pub struct OnsetAnalysis {
    /// Scan window width (always 10 ms).
    pub window_ms: u32,
    /// Sample index where the onset window starts; a multiple of the
    /// window length.
    pub onset_index: usize,
    /// Onset in seconds.
    pub onset_time: f64,
    /// RMS per scanned window (trailing partial window discarded).
    pub window_rms: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Attack,
    Steady,
}

/// Half-open sample range of an extracted segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentBounds {
    pub kind: SegmentKind,
    pub start_index: usize,
    pub end_index: usize,
}

/// Whole milliseconds to samples, rounded to nearest.
pub fn samples_for_ms(sample_rate: u32, ms: u32) -> usize {
    ((sample_rate as u64 * ms as u64 + 500) / 1000) as usize
}

/// Finds the onset: the first 10 ms window whose RMS is at least 10 dB
/// above the whole-signal RMS. Windows with zero RMS never cross, so an
/// all-zero clip reports no onset rather than a degenerate ratio.
pub fn detect_onset(clip: &AudioClip) -> Result<OnsetAnalysis, SegmentError> {
    let window = samples_for_ms(clip.sample_rate, ONSET_WINDOW_MS);
    if clip.samples.len() < 2 * window {
        return Err(SegmentError::ClipTooShort {
            required: 2 * window,
            available: clip.samples.len(),
        });
    }

    let global = dsp::rms(&clip.samples).expect("clip is non-empty");
    let threshold = global * 10f64.powf(ONSET_THRESHOLD_DB / 20.0);

    let window_rms: Vec<f64> = clip
        .samples
        .chunks_exact(window)
        .map(|w| dsp::rms(w).expect("window is non-empty"))
        .collect();

    if global == 0.0 {
        return Err(SegmentError::NoOnsetFound);
    }
    let onset_window = window_rms
        .iter()
        .position(|&r| r > 0.0 && r >= threshold)
        .ok_or(SegmentError::NoOnsetFound)?;

    Ok(OnsetAnalysis {
        window_ms: ONSET_WINDOW_MS,
        onset_index: onset_window * window,
        onset_time: (onset_window * window) as f64 / clip.sample_rate as f64,
        window_rms,
    })
}

/// Bounds of the 100 ms attack segment starting at the onset.
pub fn attack_bounds(clip: &AudioClip, onset: &OnsetAnalysis) -> Result<SegmentBounds, SegmentError> {
    let len = samples_for_ms(clip.sample_rate, ATTACK_MS);
    let end = onset.onset_index + len;
    if end > clip.samples.len() {
        return Err(SegmentError::ClipTooShort { required: end, available: clip.samples.len() });
    }
    Ok(SegmentBounds { kind: SegmentKind::Attack, start_index: onset.onset_index, end_index: end })
}

/// Bounds of the steady segment: from 200 ms after the attack end to the
/// clip end, requiring at least 100 ms of material.
pub fn steady_bounds(clip: &AudioClip, onset: &OnsetAnalysis) -> Result<SegmentBounds, SegmentError> {
    let start = onset.onset_index + samples_for_ms(clip.sample_rate, ATTACK_MS + STEADY_GAP_MS);
    let required = start + samples_for_ms(clip.sample_rate, MIN_STEADY_MS);
    if required > clip.samples.len() {
        return Err(SegmentError::ClipTooShort { required, available: clip.samples.len() });
    }
    Ok(SegmentBounds { kind: SegmentKind::Steady, start_index: start, end_index: clip.samples.len() })
}

fn slice_clip(clip: &AudioClip, bounds: SegmentBounds) -> AudioClip {
    AudioClip {
        samples: clip.samples[bounds.start_index..bounds.end_index].to_vec(),
        sample_rate: clip.sample_rate,
        instrument: clip.instrument,
        tone: clip.tone,
        source_id: clip.source_id.clone(),
    }
}

/// The 100 ms attack segment, label metadata preserved.
pub fn extract_attack(clip: &AudioClip, onset: &OnsetAnalysis) -> Result<AudioClip, SegmentError> {
    Ok(slice_clip(clip, attack_bounds(clip, onset)?))
}

/// The steady segment from onset + 300 ms to the clip end, label metadata
/// preserved.
pub fn extract_steady(clip: &AudioClip, onset: &OnsetAnalysis) -> Result<AudioClip, SegmentError> {
    Ok(slice_clip(clip, steady_bounds(clip, onset)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{InstrumentClass, PitchClass, ToneLabel};
    use proptest::prelude::*;

    fn clip_from(samples: Vec<f64>, rate: u32) -> AudioClip {
        AudioClip {
            samples,
            sample_rate: rate,
            instrument: InstrumentClass::Trumpet,
            tone: ToneLabel::fourth_octave(PitchClass::A),
            source_id: "test".into(),
        }
    }

    fn sine(rate: u32, seconds: f64, freq: f64, amp: f64) -> Vec<f64> {
        let n = (rate as f64 * seconds).round() as usize;
        (0..n)
            .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin())
            .collect()
    }

    /// Unit-amplitude sine decaying with time constant `tau`; peaky enough
    /// that the first windows clear the 10 dB-over-average threshold.
    fn pluck(rate: u32, seconds: f64, freq: f64, tau: f64) -> Vec<f64> {
        let n = (rate as f64 * seconds).round() as usize;
        (0..n)
            .map(|i| {
                let t = i as f64 / rate as f64;
                (-t / tau).exp() * (2.0 * std::f64::consts::PI * freq * t).sin()
            })
            .collect()
    }

    #[test]
    fn onset_after_near_silence() {
        // 500 ms of amplitude 1e-4 followed by 40 ms of full-scale sine:
        // the tone is short enough that the whole-signal RMS stays low and
        // the first loud window crosses the 10 dB threshold.
        let rate = 44100;
        let mut samples = sine(rate, 0.5, 440.0, 1e-4);
        samples.extend(sine(rate, 0.04, 440.0, 1.0));
        let onset = detect_onset(&clip_from(samples, rate)).unwrap();
        assert!(
            (0.50..=0.52).contains(&onset.onset_time),
            "onset at {}",
            onset.onset_time
        );
    }

    #[test]
    fn uniform_signal_has_no_onset() {
        let clip = clip_from(sine(44100, 1.0, 440.0, 0.8), 44100);
        assert_eq!(detect_onset(&clip).unwrap_err(), SegmentError::NoOnsetFound);
    }

    #[test]
    fn all_zero_clip_has_no_onset() {
        let clip = clip_from(vec![0.0; 44100], 44100);
        assert_eq!(detect_onset(&clip).unwrap_err(), SegmentError::NoOnsetFound);
    }

    #[test]
    fn too_short_clip_is_rejected() {
        let clip = clip_from(vec![0.1; 441], 44100);
        assert!(matches!(detect_onset(&clip), Err(SegmentError::ClipTooShort { .. })));
    }

    #[test]
    fn onset_index_is_window_aligned() {
        let rate = 44100;
        let mut samples = vec![0.0; 16317]; // 0.37 s, exactly 37 windows
        samples.extend(sine(rate, 0.03, 300.0, 1.0));
        let onset = detect_onset(&clip_from(samples, rate)).unwrap();
        assert_eq!(onset.onset_index % samples_for_ms(rate, 10), 0);
        assert_eq!(onset.onset_index, 16317);
    }

    #[test]
    fn attack_is_100ms_from_the_onset() {
        let rate = 44100;
        let mut samples = vec![0.0; 22050];
        samples.extend(pluck(rate, 0.5, 440.0, 0.05));
        let clip = clip_from(samples, rate);
        let onset = detect_onset(&clip).unwrap();
        assert_eq!(onset.onset_index, 22050);
        let attack = extract_attack(&clip, &onset).unwrap();
        assert_eq!(attack.samples.len(), 4410);
        assert_eq!(attack.samples[..], clip.samples[22050..26460]);
        assert_eq!(attack.source_id, clip.source_id);
        assert_eq!(attack.instrument, clip.instrument);
    }

    #[test]
    fn attack_at_zero_of_a_100ms_clip_is_the_whole_clip() {
        let rate = 44100;
        let clip = clip_from(sine(rate, 0.1, 440.0, 1.0), rate);
        let onset = OnsetAnalysis { window_ms: 10, onset_index: 0, onset_time: 0.0, window_rms: vec![] };
        let attack = extract_attack(&clip, &onset).unwrap();
        assert_eq!(attack.samples.len(), clip.samples.len());
    }

    #[test]
    fn attack_needs_100ms_after_the_onset() {
        let rate = 44100;
        let clip = clip_from(vec![0.5; 22050], rate); // 0.5 s
        let onset = OnsetAnalysis {
            window_ms: 10,
            onset_index: 22050 - samples_for_ms(rate, 50),
            onset_time: 0.45,
            window_rms: vec![],
        };
        assert!(matches!(extract_attack(&clip, &onset), Err(SegmentError::ClipTooShort { .. })));
    }

    #[test]
    fn steady_runs_from_onset_plus_300ms_to_the_end() {
        let rate = 44100;
        let clip = clip_from(vec![0.5; 2 * rate as usize], rate); // 2 s
        let onset = OnsetAnalysis {
            window_ms: 10,
            onset_index: samples_for_ms(rate, 500),
            onset_time: 0.5,
            window_rms: vec![],
        };
        let steady = extract_steady(&clip, &onset).unwrap();
        assert_eq!(steady.samples.len(), clip.samples.len() - samples_for_ms(rate, 800));
        let bounds = steady_bounds(&clip, &onset).unwrap();
        assert_eq!(bounds.start_index, samples_for_ms(rate, 800));
        assert_eq!(bounds.end_index, clip.samples.len());
    }

    #[test]
    fn steady_boundary_cases() {
        let rate = 44100;
        // Ends exactly at onset + 400 ms: minimal 100 ms segment.
        let clip = clip_from(vec![0.5; samples_for_ms(rate, 400)], rate);
        let onset = OnsetAnalysis { window_ms: 10, onset_index: 0, onset_time: 0.0, window_rms: vec![] };
        let steady = extract_steady(&clip, &onset).unwrap();
        assert_eq!(steady.samples.len(), samples_for_ms(rate, 100));
        // Ends at onset + 350 ms: too short.
        let clip = clip_from(vec![0.5; samples_for_ms(rate, 350)], rate);
        assert!(matches!(extract_steady(&clip, &onset), Err(SegmentError::ClipTooShort { .. })));
    }

    #[test]
    fn segments_reconstruct_the_clip() {
        let rate = 44100;
        let mut samples = vec![0.0; 22050];
        samples.extend(pluck(rate, 1.0, 440.0, 0.1));
        let clip = clip_from(samples, rate);
        let onset = detect_onset(&clip).unwrap();
        let attack = attack_bounds(&clip, &onset).unwrap();
        let steady = steady_bounds(&clip, &onset).unwrap();
        let mut rebuilt = clip.samples[..attack.start_index].to_vec();
        rebuilt.extend_from_slice(&clip.samples[attack.start_index..attack.end_index]);
        rebuilt.extend_from_slice(&clip.samples[attack.end_index..steady.start_index]);
        rebuilt.extend_from_slice(&clip.samples[steady.start_index..steady.end_index]);
        assert_eq!(rebuilt, clip.samples);
    }

    proptest! {
        #[test]
        fn onset_is_amplitude_scale_invariant(
            scale in 1e-3f64..1e3,
            silence_ms in 100u32..400,
        ) {
            let rate = 44100u32;
            let mut samples = vec![0.0; samples_for_ms(rate, silence_ms)];
            samples.extend(pluck(rate, 0.2, 440.0, 0.03));
            let base = detect_onset(&clip_from(samples.clone(), rate)).unwrap();
            let scaled: Vec<f64> = samples.iter().map(|&x| x * scale).collect();
            let got = detect_onset(&clip_from(scaled, rate)).unwrap();
            prop_assert_eq!(base.onset_index, got.onset_index);
        }
    }
}
