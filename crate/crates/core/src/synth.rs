//! Synthetic single-lead ECG generation with ground-truth R-peak positions.
//!
//! Beats are sums of Gaussian bumps (P, Q, R, S, T for normal beats; no P wave
//! and a 4-9 Hz fibrillatory ripple for AF; widened, inverted-polarity beats
//! with a compensatory pause for PVC). RR intervals are drawn log-normally
//! around the mean with a configurable coefficient of variation, clipped to
//! the physiological [0.3, 2.0] s band. Generation is bitwise deterministic
//! for a fixed spec: every random quantity comes from a seeded counter-based
//! stream, and independent concerns (rhythm, PVC selection, baseline wander,
//! fibrillation, noise) draw from separate streams so that, for example, a
//! PVC spec with `pvc_rate = 0` reproduces the Normal waveform exactly.
//!
//! The waveform model is a desk-scale stand-in for real corpora; morphology
//! is qualitative, not clinically calibrated.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::resample_to;
use crate::error::{CoreError, Result};
use crate::record::{Class, EcgRecord};

/// Coefficient of variation floor applied to AF rhythm draws.
const AF_CV_FLOOR: f64 = 0.25;
/// Fibrillatory wave amplitude relative to the R peak.
const AF_FIB_AMP: f64 = 0.05;
/// RR clipping band in seconds.
const RR_MIN_S: f64 = 0.3;
const RR_MAX_S: f64 = 2.0;

/// Parameters for one synthetic record.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub class: Class,
    pub duration_s: f64,
    pub fs: f64,
    pub mean_hr_bpm: f64,
    /// Coefficient of variation of the RR intervals.
    pub rr_jitter: f64,
    /// Fraction of beats replaced by premature wide beats (PVC class only).
    pub pvc_rate: f64,
    pub amplitude_scale: f64,
    /// Amplitude of the added low-frequency drift.
    pub baseline_wander_amp: f64,
    /// When set, white Gaussian noise is added at this SNR.
    pub noise_snr_db: Option<f64>,
    pub seed: u64,
    pub domain_id: String,
    pub record_id: String,
}

impl SyntheticSpec {
    pub fn new(class: Class, duration_s: f64, fs: f64, seed: u64) -> Self {
        Self {
            class,
            duration_s,
            fs,
            mean_hr_bpm: 70.0,
            rr_jitter: 0.04,
            pvc_rate: if class == Class::Pvc { 0.2 } else { 0.0 },
            amplitude_scale: 1.0,
            baseline_wander_amp: 0.0,
            noise_snr_db: None,
            seed,
            domain_id: "synthetic".into(),
            record_id: format!("{}-{seed}", class.name().to_ascii_lowercase()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) {
            return Err(CoreError::Config("duration_s must be > 0".into()));
        }
        if !(self.fs > 0.0) {
            return Err(CoreError::Config("fs must be > 0".into()));
        }
        if !(20.0..=240.0).contains(&self.mean_hr_bpm) {
            return Err(CoreError::Config(format!(
                "mean_hr_bpm {} outside [20, 240]",
                self.mean_hr_bpm
            )));
        }
        if !(0.0..=1.0).contains(&self.pvc_rate) {
            return Err(CoreError::Config("pvc_rate must be in [0, 1]".into()));
        }
        if self.rr_jitter < 0.0 {
            return Err(CoreError::Config("rr_jitter must be >= 0".into()));
        }
        Ok(())
    }
}

/// One Gaussian bump of the beat template: (amplitude, offset from R in s, sigma in s).
type Bump = (f64, f64, f64);

const P_WAVE: Bump = (0.12, -0.18, 0.025);
const QRS_T: [Bump; 4] = [
    (-0.13, -0.028, 0.009), // Q
    (1.0, 0.0, 0.011),      // R
    (-0.22, 0.030, 0.010),  // S
    (0.32, 0.25, 0.055),    // T
];

// Premature ventricular beat: inverted polarity, doubled QRS width,
// discordant T, no P wave.
const PVC_BUMPS: [Bump; 4] = [
    (0.15, -0.056, 0.018),
    (-1.15, 0.0, 0.022),
    (0.25, 0.060, 0.020),
    (0.42, 0.28, 0.060),
];

#[derive(Debug, Clone, Copy, PartialEq)]
enum BeatKind {
    Sinus { with_p: bool },
    Premature,
}

#[derive(Debug, Clone, Copy)]
struct Beat {
    t: f64,
    kind: BeatKind,
}

/// Seeded uniform in [0, 1) from a counter-based stream.
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Box-Muller standard normal; consumes exactly two uniforms per call.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = (uniform(rng)).max(f64::MIN_POSITIVE);
    let u2 = uniform(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Draws one RR interval (seconds) log-normally with the given mean and CV,
/// clipped to the physiological band. CV = 0 degenerates to the exact mean.
fn draw_rr(mean_rr: f64, cv: f64, rng: &mut ChaCha8Rng) -> f64 {
    let z = standard_normal(rng);
    let rr = if cv > 0.0 {
        let sigma2 = (1.0 + cv * cv).ln();
        let mu = mean_rr.ln() - 0.5 * sigma2;
        (mu + sigma2.sqrt() * z).exp()
    } else {
        mean_rr
    };
    rr.clamp(RR_MIN_S, RR_MAX_S)
}

/// Generates one synthetic record plus the exact R-peak sample indices.
///
/// Deterministic: the same spec (including seed) yields bit-identical samples
/// and indices. The returned indices are strictly increasing and within
/// `[0, samples.len())`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(EcgRecord, Vec<usize>)> {
    spec.validate()?;

    let n = (spec.duration_s * spec.fs).round() as usize;
    let mean_rr = 60.0 / spec.mean_hr_bpm;
    let cv = match spec.class {
        Class::Af => spec.rr_jitter.max(AF_CV_FLOOR),
        _ => spec.rr_jitter,
    };

    let mut rhythm_rng = stream(spec.seed, 0);
    let mut pvc_rng = stream(spec.seed, 1);
    let mut baseline_rng = stream(spec.seed, 2);
    let mut fib_rng = stream(spec.seed, 3);
    let mut noise_rng = stream(spec.seed, 4);

    // Beat schedule. The first beat sits far enough in for its P wave to fit.
    let mut beats: Vec<Beat> = Vec::new();
    let with_p = spec.class != Class::Af;
    let mut t = 0.35f64;
    let horizon = spec.duration_s + RR_MAX_S;
    let mut prev_was_pvc = false;
    while t < horizon {
        beats.push(Beat {
            t,
            kind: BeatKind::Sinus { with_p },
        });
        let rr = draw_rr(mean_rr, cv, &mut rhythm_rng);
        // PVC selection draws happen for every beat regardless of class or
        // rate so the rhythm stream stays aligned across configurations.
        let u = uniform(&mut pvc_rng);
        let replace = spec.class == Class::Pvc && !prev_was_pvc && u < spec.pvc_rate;
        if replace {
            // Premature beat: the interval leading to it shrinks by 30%; the
            // following interval absorbs the difference (compensatory pause).
            let t_pvc = t + 0.7 * rr;
            if t_pvc >= horizon {
                break;
            }
            beats.push(Beat {
                t: t_pvc,
                kind: BeatKind::Premature,
            });
            let rr_next = draw_rr(mean_rr, cv, &mut rhythm_rng);
            let _ = uniform(&mut pvc_rng);
            t = t + rr + rr_next;
            prev_was_pvc = true;
        } else {
            t += rr;
            prev_was_pvc = false;
        }
    }

    let dt = 1.0 / spec.fs;
    let mut samples = vec![0.0f64; n];
    for beat in &beats {
        let bumps: &[Bump] = match beat.kind {
            BeatKind::Sinus { .. } => &QRS_T,
            BeatKind::Premature => &PVC_BUMPS,
        };
        let lo = (((beat.t - 0.45) * spec.fs).floor().max(0.0)) as usize;
        let hi = (((beat.t + 0.55) * spec.fs).ceil() as usize).min(n);
        for i in lo..hi {
            let tau = i as f64 * dt - beat.t;
            let mut v = 0.0;
            if let BeatKind::Sinus { with_p: true } = beat.kind {
                let (a, mu, s) = P_WAVE;
                let d = (tau - mu) / s;
                v += a * (-0.5 * d * d).exp();
            }
            for &(a, mu, s) in bumps {
                let d = (tau - mu) / s;
                v += a * (-0.5 * d * d).exp();
            }
            samples[i] += v;
        }
    }

    if spec.class == Class::Af {
        let f = 4.0 + 5.0 * uniform(&mut fib_rng);
        let phase = std::f64::consts::TAU * uniform(&mut fib_rng);
        for (i, s) in samples.iter_mut().enumerate() {
            *s += AF_FIB_AMP * (std::f64::consts::TAU * f * i as f64 * dt + phase).sin();
        }
    }

    if spec.amplitude_scale != 1.0 {
        for s in &mut samples {
            *s *= spec.amplitude_scale;
        }
    }

    if spec.baseline_wander_amp != 0.0 {
        let f = 0.15 + 0.2 * uniform(&mut baseline_rng);
        let phase = std::f64::consts::TAU * uniform(&mut baseline_rng);
        for (i, s) in samples.iter_mut().enumerate() {
            *s += spec.baseline_wander_amp
                * (std::f64::consts::TAU * f * i as f64 * dt + phase).sin();
        }
    }

    if let Some(snr_db) = spec.noise_snr_db {
        add_white_noise(&mut samples, snr_db, &mut noise_rng);
    }

    let r_peaks: Vec<usize> = beats
        .iter()
        .map(|b| (b.t * spec.fs).round() as usize)
        .filter(|&i| i < n)
        .collect();

    let record = EcgRecord {
        samples,
        fs: spec.fs,
        label: Some(spec.class),
        domain_id: spec.domain_id.clone(),
        record_id: spec.record_id.clone(),
    };
    Ok((record, r_peaks))
}

/// Adds white Gaussian noise at `snr_db` relative to the mean-square power of
/// the current signal.
fn add_white_noise(samples: &mut [f64], snr_db: f64, rng: &mut ChaCha8Rng) {
    let n = samples.len();
    if n == 0 {
        return;
    }
    let power = samples.iter().map(|s| s * s).sum::<f64>() / n as f64;
    if power <= 0.0 {
        return;
    }
    let noise_std = (power * 10f64.powf(-snr_db / 10.0)).sqrt();
    for s in samples.iter_mut() {
        *s += noise_std * standard_normal(rng);
    }
}

/// Derives a shifted-domain copy of a record: gain, 0.2 Hz sinusoidal drift,
/// resampling, and optional additive white noise. The domain tag gains a
/// `-shifted` suffix. Identity parameters return the samples unchanged.
pub fn make_domain_variant(
    record: &EcgRecord,
    gain: f64,
    offset_drift: f64,
    resample_fs: f64,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<EcgRecord> {
    if gain == 0.0 {
        return Err(CoreError::Config("gain must be non-zero".into()));
    }
    if !(resample_fs > 0.0) {
        return Err(CoreError::Config("resample_fs must be > 0".into()));
    }

    let mut samples = record.samples.clone();
    if gain != 1.0 {
        for s in &mut samples {
            *s *= gain;
        }
    }
    if offset_drift != 0.0 {
        let dt = 1.0 / record.fs;
        for (i, s) in samples.iter_mut().enumerate() {
            *s += offset_drift * (std::f64::consts::TAU * 0.2 * i as f64 * dt).sin();
        }
    }
    let mut samples = resample_to(&samples, record.fs, resample_fs);
    if let Some(snr) = snr_db {
        let mut rng = stream(seed, 0);
        add_white_noise(&mut samples, snr, &mut rng);
    }

    Ok(EcgRecord {
        samples,
        fs: resample_fs,
        label: record.label,
        domain_id: format!("{}-shifted", record.domain_id),
        record_id: record.record_id.clone(),
    })
}
