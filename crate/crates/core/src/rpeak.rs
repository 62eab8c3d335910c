//! Pan-Tompkins R-peak detection.
//!
//! Stage order: 5-15 Hz band-pass, five-point derivative, squaring, 150 ms
//! moving-window integration, then dual adaptive thresholds with a 200 ms
//! refractory period, a T-wave slope check, and RR-gap search-back. The
//! derivative and integration kernels are symmetric, and the band-pass is
//! zero-phase, so envelope fiducials stay aligned with the QRS; each accepted
//! fiducial is refined to the largest-magnitude raw sample within +/-50 ms,
//! which also lands on inverted (ventricular) beats.

use crate::filter::{butterworth_bandpass, FilterSpec};

/// Detected R-peak sample positions, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct RPeakTrain {
    pub indices: Vec<usize>,
    pub fs: f64,
}

impl RPeakTrain {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Successive RR intervals in seconds; empty when fewer than two peaks
    /// were detected (insufficient beats).
    pub fn rr_intervals(&self) -> Vec<f64> {
        self.indices
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64 / self.fs)
            .collect()
    }
}

const REFRACTORY_S: f64 = 0.2;
const TWAVE_WINDOW_S: f64 = 0.36;
const INTEGRATION_S: f64 = 0.15;
const REFINE_S: f64 = 0.05;

/// Symmetric five-point derivative, reflected at the edges.
fn five_point_derivative(x: &[f64]) -> Vec<f64> {
    let n = x.len() as isize;
    let get = |i: isize| -> f64 {
        let j = i.clamp(0, n - 1);
        x[j as usize]
    };
    (0..n)
        .map(|i| (-get(i - 2) - 2.0 * get(i - 1) + 2.0 * get(i + 1) + get(i + 2)) / 8.0)
        .collect()
}

/// Centered moving average over an odd window.
fn moving_window_integration(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    let half = window / 2;
    let mut prefix = vec![0.0f64; n + 1];
    for (i, &v) in x.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

struct Candidate {
    index: usize,
    value: f64,
}

/// Detects R peaks in a window or record. Returns an empty train when the
/// signal is shorter than two seconds or the rate is below 50 Hz.
pub fn detect_r_peaks(samples: &[f64], fs: f64) -> RPeakTrain {
    let empty = RPeakTrain {
        indices: Vec::new(),
        fs,
    };
    if fs < 50.0 || (samples.len() as f64) < 2.0 * fs {
        return empty;
    }

    let band = FilterSpec::new(5.0, (15.0f64).min(0.45 * fs));
    let bp = match butterworth_bandpass(samples, fs, &band) {
        Ok(v) => v,
        Err(_) => return empty,
    };
    let deriv = five_point_derivative(&bp);
    let squared: Vec<f64> = deriv.iter().map(|d| d * d).collect();
    let win = {
        let w = (INTEGRATION_S * fs).round() as usize;
        if w % 2 == 0 {
            w + 1
        } else {
            w
        }
    };
    let mwi = moving_window_integration(&squared, win);

    // Local maxima of the integrated envelope are the QRS candidates.
    let mut candidates: Vec<Candidate> = Vec::new();
    for i in 1..mwi.len() - 1 {
        if mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1] && mwi[i] > 0.0 {
            candidates.push(Candidate {
                index: i,
                value: mwi[i],
            });
        }
    }
    if candidates.is_empty() {
        return empty;
    }

    // Threshold initialization from the first two seconds.
    let init_len = ((2.0 * fs) as usize).min(mwi.len());
    let init_max = mwi[..init_len].iter().cloned().fold(0.0f64, f64::max);
    let init_mean = mwi[..init_len].iter().sum::<f64>() / init_len as f64;
    let mut spki = 0.25 * init_max;
    let mut npki = 0.5 * init_mean;

    let refractory = (REFRACTORY_S * fs) as usize;
    let twave_win = (TWAVE_WINDOW_S * fs) as usize;
    let mut accepted: Vec<usize> = Vec::new();
    let mut rr_history: Vec<usize> = Vec::new();

    let slope_near = |idx: usize| -> f64 {
        let lo = idx.saturating_sub(win / 2);
        let hi = (idx + win / 2 + 1).min(deriv.len());
        deriv[lo..hi].iter().fold(0.0f64, |m, d| m.max(d.abs()))
    };

    let mut i = 0usize;
    while i < candidates.len() {
        let cand = &candidates[i];
        let threshold1 = npki + 0.25 * (spki - npki);
        let since_last = accepted.last().map(|&l| cand.index - l);

        if let Some(gap) = since_last {
            if gap < refractory {
                i += 1;
                continue;
            }
        }

        let mut is_qrs = cand.value > threshold1;

        // T waves ride within 360 ms of the previous QRS and have a much
        // shallower slope.
        if is_qrs {
            if let (Some(&last), Some(gap)) = (accepted.last(), since_last) {
                if gap < twave_win && slope_near(cand.index) < 0.5 * slope_near(last) {
                    is_qrs = false;
                }
            }
        }

        if is_qrs {
            if let Some(&last) = accepted.last() {
                rr_history.push(cand.index - last);
                if rr_history.len() > 8 {
                    rr_history.remove(0);
                }
            }
            accepted.push(cand.index);
            spki = 0.125 * cand.value + 0.875 * spki;
        } else {
            npki = 0.125 * cand.value + 0.875 * npki;

            // Search-back: when the gap since the last QRS exceeds 166% of
            // the running RR average, take the strongest skipped candidate
            // above the lower threshold.
            if let Some(&last) = accepted.last() {
                if !rr_history.is_empty() {
                    let rr_avg = rr_history.iter().sum::<usize>() as f64 / rr_history.len() as f64;
                    if (cand.index - last) as f64 > 1.66 * rr_avg {
                        let threshold2 = 0.5 * (npki + 0.25 * (spki - npki));
                        let best = candidates[..=i]
                            .iter()
                            .filter(|c| c.index > last + refractory && c.index < cand.index)
                            .filter(|c| c.value > threshold2)
                            .max_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
                        if let Some(b) = best {
                            let pos = accepted.len();
                            accepted.push(b.index);
                            accepted.sort_unstable();
                            let _ = pos;
                            spki = 0.25 * b.value + 0.75 * spki;
                            rr_history.push(b.index - last);
                            if rr_history.len() > 8 {
                                rr_history.remove(0);
                            }
                        }
                    }
                }
            }
        }
        i += 1;
    }

    // Refine each fiducial to the strongest raw deflection within +/-50 ms.
    let refine = (REFINE_S * fs).round() as usize;
    let mut peaks: Vec<usize> = accepted
        .iter()
        .map(|&idx| {
            let lo = idx.saturating_sub(refine);
            let hi = (idx + refine + 1).min(samples.len());
            (lo..hi)
                .max_by(|&a, &b| samples[a].abs().partial_cmp(&samples[b].abs()).unwrap())
                .unwrap_or(idx)
        })
        .collect();
    peaks.sort_unstable();
    peaks.dedup();

    // Enforce the refractory period on the refined train.
    let mut final_peaks: Vec<usize> = Vec::with_capacity(peaks.len());
    for p in peaks {
        match final_peaks.last() {
            Some(&last) if p - last < refractory => {
                if samples[p].abs() > samples[last].abs() {
                    *final_peaks.last_mut().unwrap() = p;
                }
            }
            _ => final_peaks.push(p),
        }
    }

    RPeakTrain {
        indices: final_peaks,
        fs,
    }
}
