//! Synthetic desk-scale instrument corpus.
//!
//! Each class is an additive-synthesis recipe built from components that the
//! downstream feature pipeline can observe after the spectrum is shifted to
//! A4 and cut at 1000 Hz:
//!
//! - fundamental plus second harmonic (amplitude paired per instrument
//!   family, so steady-state spectra alone separate families but barely
//!   separate the two members of a family),
//! - two inharmonic transient partials at class-specific non-integer
//!   multiples of the fundamental, decaying within ~100 ms of the onset
//!   (the within-family discriminator, audible only around the attack),
//! - a steady subharmonic below 100 Hz shared per family,
//! - a broadband attack noise burst and a class attack envelope.
//!
//! All frequencies are multiples of the fundamental, so after the pitch
//! shift every component lands on the same grid position regardless of the
//! tone being played. Clips start with 10 ms aligned leading silence so
//! window-based onset detection localizes the programmed onset exactly.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AudioClip, InstrumentClass, ToneLabel};

/// Sample rate of every generated clip, in Hz.
pub const SYNTH_SAMPLE_RATE: u32 = 44100;

/// Seconds of tone rendered after the onset.
pub const TONE_DURATION_S: f64 = 1.6;

const BURST_DECAY_S: f64 = 0.040;
/// Raised-cosine release at the tone end. A hard stop would leave 1/df
/// leakage skirts whose sampled height depends on the pitch-shift ratio.
const RELEASE_S: f64 = 0.08;
const TWO_PI: f64 = std::f64::consts::TAU;

/// Additive-synthesis recipe for one instrument class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfile {
    pub instrument: InstrumentClass,
    /// Second-harmonic amplitude relative to the fundamental.
    pub second_harmonic: f64,
    /// Transient partials as (multiple of f0, amplitude).
    pub partials: [(f64, f64); 2],
    /// Decay constant of the transient partials, ms.
    pub partial_decay_ms: f64,
    /// Steady subharmonic as (multiple of f0, amplitude).
    pub subharmonic: (f64, f64),
    /// Attack rise time, ms.
    pub attack_rise_ms: f64,
    /// Broadband attack burst amplitude.
    pub attack_burst: f64,
    /// Peak-to-sustain decay constant, ms.
    pub decay_ms: f64,
    /// Sustain level relative to the attack peak.
    pub sustain: f64,
}

/// The eight class recipes, in instrument index order.
pub static CLASS_PROFILES: [ClassProfile; 8] = [
    ClassProfile {
        instrument: InstrumentClass::Banjo,
        second_harmonic: 0.88,
        partials: [(1.52, 0.55), (1.91, 0.40)],
        partial_decay_ms: 70.0,
        subharmonic: (0.070, 0.13),
        attack_rise_ms: 5.0,
        attack_burst: 0.20,
        decay_ms: 100.0,
        sustain: 0.08,
    },
    ClassProfile {
        instrument: InstrumentClass::Cello,
        second_harmonic: 0.65,
        partials: [(1.26, 0.50), (1.76, 0.35)],
        partial_decay_ms: 80.0,
        subharmonic: (0.115, 0.14),
        attack_rise_ms: 13.0,
        attack_burst: 0.12,
        decay_ms: 120.0,
        sustain: 0.18,
    },
    ClassProfile {
        instrument: InstrumentClass::Clarinet,
        second_harmonic: 0.365,
        partials: [(1.62, 0.48), (1.15, 0.32)],
        partial_decay_ms: 75.0,
        subharmonic: (0.160, 0.13),
        attack_rise_ms: 12.0,
        attack_burst: 0.10,
        decay_ms: 110.0,
        sustain: 0.20,
    },
    ClassProfile {
        instrument: InstrumentClass::EnglishHorn,
        second_harmonic: 0.185,
        partials: [(1.44, 0.52), (1.12, 0.36)],
        partial_decay_ms: 85.0,
        subharmonic: (0.205, 0.15),
        attack_rise_ms: 14.0,
        attack_burst: 0.11,
        decay_ms: 115.0,
        sustain: 0.17,
    },
    ClassProfile {
        instrument: InstrumentClass::Guitar,
        second_harmonic: 0.82,
        partials: [(1.33, 0.50), (1.84, 0.38)],
        partial_decay_ms: 65.0,
        subharmonic: (0.070, 0.13),
        attack_rise_ms: 8.0,
        attack_burst: 0.16,
        decay_ms: 100.0,
        sustain: 0.10,
    },
    ClassProfile {
        instrument: InstrumentClass::Oboe,
        second_harmonic: 0.335,
        partials: [(1.37, 0.55), (1.70, 0.30)],
        partial_decay_ms: 90.0,
        subharmonic: (0.160, 0.13),
        attack_rise_ms: 10.0,
        attack_burst: 0.09,
        decay_ms: 105.0,
        sustain: 0.19,
    },
    ClassProfile {
        instrument: InstrumentClass::Trumpet,
        second_harmonic: 0.59,
        partials: [(1.58, 0.50), (1.95, 0.34)],
        partial_decay_ms: 60.0,
        subharmonic: (0.115, 0.14),
        attack_rise_ms: 9.0,
        attack_burst: 0.22,
        decay_ms: 95.0,
        sustain: 0.16,
    },
    ClassProfile {
        instrument: InstrumentClass::Violin,
        second_harmonic: 0.155,
        partials: [(1.47, 0.45), (1.22, 0.30)],
        partial_decay_ms: 95.0,
        subharmonic: (0.205, 0.15),
        attack_rise_ms: 15.0,
        attack_burst: 0.10,
        decay_ms: 125.0,
        sustain: 0.18,
    },
];

/// Recipe for a given instrument.
pub fn class_profile(instrument: InstrumentClass) -> &'static ClassProfile {
    &CLASS_PROFILES[instrument.class_index()]
}

/// Per-clip rendering parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipSpec {
    pub tone: ToneLabel,
    /// Leading silence before the tone starts, seconds. Must be a multiple
    /// of 0.01 s so the onset sits on a 10 ms analysis window boundary.
    pub onset_s: f64,
    /// Tone length after the onset, seconds.
    pub tone_duration_s: f64,
    /// Relative detune of the fundamental (e.g. 0.003 = +0.3%).
    pub detune: f64,
    /// Relative depth of the slow pitch drift. The drift spreads each
    /// spectral line over a few hertz, which keeps 20 Hz band averages
    /// stable against how the line falls on the 1 Hz analysis grid; a fast
    /// narrow vibrato would leave the energy in one sub-hertz carrier.
    pub vibrato_depth: f64,
    /// Pitch drift rate, Hz. Whole numbers of cycles over the tone give a
    /// start-phase-independent dwell distribution.
    pub vibrato_hz: f64,
    /// Overall gain applied to the clip.
    pub gain: f64,
    /// Signal-to-noise ratio of the additive noise floor, dB.
    pub snr_db: f64,
}

impl ClipSpec {
    /// Nominal parameters: 0.5 s silence, no detune, moderate vibrato,
    /// unit gain, 60 dB SNR.
    pub fn nominal(tone: ToneLabel) -> ClipSpec {
        ClipSpec {
            tone,
            onset_s: 0.5,
            tone_duration_s: TONE_DURATION_S,
            detune: 0.0,
            vibrato_depth: 0.0075,
            vibrato_hz: 1.25,
            gain: 1.0,
            snr_db: 60.0,
        }
    }
}

/// Renders one clip from a class recipe. Deterministic for a given RNG state.
pub fn render_clip(
    profile: &ClassProfile,
    spec: &ClipSpec,
    source_id: String,
    rng: &mut impl Rng,
) -> AudioClip {
    let rate = SYNTH_SAMPLE_RATE as f64;
    let onset_samples = (spec.onset_s * rate).round() as usize;
    let tone_samples = (spec.tone_duration_s * rate).round() as usize;
    let total = onset_samples + tone_samples;

    let f0 = spec.tone.base_frequency * (1.0 + spec.detune);
    let rise = profile.attack_rise_ms / 1000.0;
    let decay = profile.decay_ms / 1000.0;
    let partial_decay = profile.partial_decay_ms / 1000.0;
    let sustain = profile.sustain;

    let phases: [f64; 5] = std::array::from_fn(|_| rng.random_range(0.0..TWO_PI));
    let vibrato_phase = rng.random_range(0.0..TWO_PI);
    // Amplitude jitter on every component except the fundamental, which
    // stays dominant so the spectral peak remains at f0.
    let jitter: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.90..1.10));
    let a2 = profile.second_harmonic * jitter[0];
    let a_sub = profile.subharmonic.1 * jitter[1];
    let a_p1 = profile.partials[0].1 * jitter[2];
    let a_p2 = profile.partials[1].1 * jitter[3];

    // Drift-modulated base phase: instantaneous frequency
    // f0 * (1 + depth * tri(rate_v * t + phase_v)), integrated. A triangle
    // drift sweeps at constant speed, so a spectral line spreads into a
    // flat shelf over [f0*(1-depth), f0*(1+depth)] with no dwell spikes.
    let tri_integral = |cycle: f64| {
        let c = cycle.fract();
        if c < 0.5 {
            2.0 * c * c - c
        } else {
            -2.0 * c * c + 3.0 * c - 1.0
        }
    };
    let cycle0 = vibrato_phase / TWO_PI;
    let base_phase = |tau: f64| {
        let drift = if spec.vibrato_hz > 0.0 {
            f0 * spec.vibrato_depth / spec.vibrato_hz
                * (tri_integral(spec.vibrato_hz * tau + cycle0) - tri_integral(cycle0))
        } else {
            0.0
        };
        TWO_PI * (f0 * tau + drift)
    };

    let release_start = spec.tone_duration_s - RELEASE_S;
    let mut samples = vec![0.0f64; total];
    for (i, out) in samples.iter_mut().enumerate().skip(onset_samples) {
        let tau = (i - onset_samples) as f64 / rate;
        let ramp = (tau / rise).min(1.0);
        // Raised-cosine rise and Gaussian peak-to-sustain decay keep the
        // envelope transient spectrally compact; exponential decay would
        // put 1/df tails around every harmonic, and those tails resample
        // differently per tone after the pitch shift.
        let mut env = if tau < rise {
            0.5 * (1.0 - (std::f64::consts::PI * tau / rise).cos())
        } else {
            let x = (tau - rise) / decay;
            sustain + (1.0 - sustain) * (-x * x).exp()
        };
        if tau > release_start {
            env *= 0.5 * (1.0 + (std::f64::consts::PI * (tau - release_start) / RELEASE_S).cos());
        }
        let theta = base_phase(tau);

        let steady = (theta + phases[0]).sin()
            + a2 * (2.0 * theta + phases[1]).sin()
            + a_sub * (profile.subharmonic.0 * theta + phases[2]).sin();
        let transient = a_p1 * (profile.partials[0].0 * theta + phases[3]).sin()
            + a_p2 * (profile.partials[1].0 * theta + phases[4]).sin();
        let burst: f64 = rng.random_range(-1.0..1.0);

        *out = env * steady
            + ramp * (-tau / partial_decay).exp() * transient
            + ramp * (-tau / BURST_DECAY_S).exp() * profile.attack_burst * burst;
    }

    // Noise floor relative to the rendered signal RMS.
    let rms = (samples.iter().map(|x| x * x).sum::<f64>() / total as f64).sqrt();
    let noise_amp = rms * 10f64.powf(-spec.snr_db / 20.0);
    for out in samples.iter_mut() {
        *out += noise_amp * rng.random_range(-1.0..1.0);
    }

    for out in samples.iter_mut() {
        *out *= spec.gain;
    }
    let peak = samples.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    if peak > 0.99 {
        let scale = 0.99 / peak;
        for out in samples.iter_mut() {
            *out *= scale;
        }
    }

    AudioClip {
        samples,
        sample_rate: SYNTH_SAMPLE_RATE,
        instrument: profile.instrument,
        tone: spec.tone,
        source_id,
    }
}

/// Generates `per_class` clips for each of the eight classes, cycling
/// through the twelve fourth-octave tones. Deterministic for a given seed.
pub fn generate_synthetic_corpus(seed: u64, per_class: usize) -> Vec<AudioClip> {
    assert!(per_class >= 1, "per_class must be at least 1");
    let tones = ToneLabel::all_fourth_octave();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clips = Vec::with_capacity(8 * per_class);
    for profile in &CLASS_PROFILES {
        for k in 0..per_class {
            let tone = tones[k % tones.len()];
            let spec = ClipSpec {
                tone,
                // Silence in whole 10 ms steps, between 0.2 s and 1.0 s.
                onset_s: rng.random_range(20u32..=100) as f64 / 100.0,
                tone_duration_s: TONE_DURATION_S,
                detune: rng.random_range(-0.0008..0.0008),
                vibrato_depth: rng.random_range(0.006..0.008),
                vibrato_hz: rng.random_range(0.4..1.4),
                gain: rng.random_range(0.55..0.95),
                snr_db: rng.random_range(33.0..40.0),
            };
            let source_id = format!("{}_{}_{k:03}", profile.instrument.name(), tone);
            clips.push(render_clip(profile, &spec, source_id, &mut rng));
        }
    }
    clips
}
