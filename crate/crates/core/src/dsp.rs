//! Preprocessing stages: median baseline removal, band-pass filtering,
//! resampling to 100 Hz, 10-second segmentation, and [-1, 1] normalization.
//!
//! `preprocess_record` applies the stages in that order. The linear
//! resampler assumes its input is already band-limited by the preceding
//! Butterworth stage; callers composing stages by hand must keep that
//! ordering.

use crate::error::Result;
use crate::filter::{butterworth_bandpass, FilterSpec};
use crate::record::{EcgRecord, RawWindow, Segment, SEGMENT_LEN, TARGET_FS};

/// First median window (seconds): shorter than a beat, longer than a QRS.
const MEDIAN_WIN1_S: f64 = 0.2;
/// Second median window (seconds): spans T waves.
const MEDIAN_WIN2_S: f64 = 0.6;

/// Running median with reflection padding; `window` must be odd.
fn median_filter(x: &[f64], window: usize) -> Vec<f64> {
    debug_assert!(window % 2 == 1);
    let n = x.len();
    let half = window / 2;
    let reflect = |i: isize| -> f64 {
        let m = n as isize;
        let j = if i < 0 {
            -i
        } else if i >= m {
            2 * (m - 1) - i
        } else {
            i
        };
        x[j.clamp(0, m - 1) as usize]
    };
    let mut buf = vec![0.0f64; window];
    let mut out = Vec::with_capacity(n);
    for c in 0..n as isize {
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = reflect(c - half as isize + k as isize);
        }
        buf.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.push(buf[half]);
    }
    out
}

fn odd_window(fs: f64, seconds: f64) -> usize {
    let w = (seconds * fs).round() as usize;
    if w % 2 == 0 {
        w + 1
    } else {
        w.max(1)
    }
}

/// Removes baseline wander by subtracting a two-pass running-median estimate
/// (200 ms then 600 ms windows). Returns the corrected signal and a flag that
/// is true when the input was shorter than the filter window and was passed
/// through unchanged.
pub fn median_baseline_remove(samples: &[f64], fs: f64) -> (Vec<f64>, bool) {
    let w1 = odd_window(fs, MEDIAN_WIN1_S);
    let w2 = odd_window(fs, MEDIAN_WIN2_S);
    if samples.len() < w1.max(w2) || samples.len() < 3 {
        return (samples.to_vec(), true);
    }
    let stage1 = median_filter(samples, w1);
    let baseline = median_filter(&stage1, w2);
    let out = samples
        .iter()
        .zip(&baseline)
        .map(|(x, b)| x - b)
        .collect();
    (out, false)
}

/// Linear-interpolation resampling onto a uniform grid. Output length is
/// `round(len * fs_out / fs_in)`; equal rates return the input unchanged.
pub fn resample_to(samples: &[f64], fs_in: f64, fs_out: f64) -> Vec<f64> {
    assert!(fs_in > 0.0 && fs_out > 0.0, "sampling rates must be positive");
    if fs_in == fs_out || samples.is_empty() {
        return samples.to_vec();
    }
    let n_in = samples.len();
    let n_out = (n_in as f64 * fs_out / fs_in).round() as usize;
    let step = fs_in / fs_out;
    let mut out = Vec::with_capacity(n_out);
    for i in 0..n_out {
        let pos = i as f64 * step;
        let j = pos.floor() as usize;
        if j + 1 >= n_in {
            out.push(samples[n_in - 1]);
        } else {
            let frac = pos - j as f64;
            out.push(samples[j] * (1.0 - frac) + samples[j + 1] * frac);
        }
    }
    out
}

/// Cuts consecutive non-overlapping 1000-sample windows; the trailing
/// remainder is discarded. `fs` must already be the 100 Hz target rate.
pub fn segment_windows(samples: &[f64], fs: f64) -> Result<Vec<RawWindow>> {
    if fs != TARGET_FS {
        return Err(crate::error::CoreError::Config(format!(
            "segmentation expects fs = {TARGET_FS} Hz after resampling, got {fs}"
        )));
    }
    Ok(samples
        .chunks_exact(SEGMENT_LEN)
        .enumerate()
        .map(|(k, chunk)| RawWindow {
            samples: chunk.to_vec(),
            start_index: k * SEGMENT_LEN,
        })
        .collect())
}

/// Affine map onto [-1, 1]; constant windows map to all zeros.
pub fn normalize_unit(samples: &[f64]) -> Vec<f64> {
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &s in samples {
        min = min.min(s);
        max = max.max(s);
    }
    let range = max - min;
    if !(range > 0.0) {
        return vec![0.0; samples.len()];
    }
    samples
        .iter()
        .map(|&s| (2.0 * (s - min) / range - 1.0).clamp(-1.0, 1.0))
        .collect()
}

/// Full preprocessing pipeline for one record: median baseline removal,
/// band-pass filtering, resampling to 100 Hz, segmentation, normalization.
/// Labels and domain tags propagate to every produced segment.
pub fn preprocess_record(record: &EcgRecord, spec: &FilterSpec) -> Result<Vec<Segment>> {
    record.validate()?;
    let (detrended, _short) = median_baseline_remove(&record.samples, record.fs);
    let filtered = butterworth_bandpass(&detrended, record.fs, spec)?;
    let resampled = resample_to(&filtered, record.fs, TARGET_FS);
    let windows = segment_windows(&resampled, TARGET_FS)?;
    Ok(windows
        .into_iter()
        .map(|w| Segment {
            samples: normalize_unit(&w.samples),
            label: record.label,
            domain_id: record.domain_id.clone(),
            source_record: record.record_id.clone(),
            start_index: w.start_index,
        })
        .collect())
}
