//! The seven RR-interval statistics and per-segment feature extraction.
//!
//! Formulas are evaluated exactly as defined: the standard deviation uses the
//! population form (divide by N), RMSSD averages the N-1 squared successive
//! differences, and Shannon entropy uses natural log over an 8-bin
//! equal-width histogram of the segment's own RR range (a constant sequence
//! occupies a single bin and has zero entropy).

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::record::Segment;
use crate::rpeak::detect_r_peaks;

/// Number of histogram bins for the Shannon entropy estimate.
pub const ENTROPY_BINS: usize = 8;

/// The seven RR-interval features, in the stable file/model order:
/// mean, std, entropy, rmssd, nrmssd, mean_ad, median_ad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrvFeatures {
    /// Mean RR interval (seconds).
    pub mean_rr: f64,
    /// Population standard deviation (seconds).
    pub std_rr: f64,
    /// Shannon entropy of the RR histogram (nats).
    pub shannon_entropy: f64,
    /// Root mean square of successive differences (seconds).
    pub rmssd: f64,
    /// RMSSD normalized by the mean RR.
    pub nrmssd: f64,
    /// Mean absolute deviation from the mean (seconds).
    pub mean_ad: f64,
    /// Median absolute deviation from the median (seconds).
    pub median_ad: f64,
}

impl HrvFeatures {
    /// Fixed-order feature vector; this ordering is a stable contract shared
    /// by the feature files and the model input.
    pub fn to_vector(self) -> [f64; 7] {
        [
            self.mean_rr,
            self.std_rr,
            self.shannon_entropy,
            self.rmssd,
            self.nrmssd,
            self.mean_ad,
            self.median_ad,
        ]
    }

    pub fn from_vector(v: [f64; 7]) -> Self {
        Self {
            mean_rr: v[0],
            std_rr: v[1],
            shannon_entropy: v[2],
            rmssd: v[3],
            nrmssd: v[4],
            mean_ad: v[5],
            median_ad: v[6],
        }
    }

    /// Feature names matching `to_vector` order.
    pub const NAMES: [&'static str; 7] = [
        "mean_rr",
        "std_rr",
        "shannon_entropy",
        "rmssd",
        "nrmssd",
        "mean_ad",
        "median_ad",
    ];
}

fn median_of(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Shannon entropy (nats) over an equal-width histogram of the values' own
/// range; zero-width ranges collapse to a single bin.
fn shannon_entropy(rr: &[f64]) -> f64 {
    let n = rr.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &r in rr {
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let range = hi - lo;
    let mut counts = [0usize; ENTROPY_BINS];
    if range > 0.0 {
        for &r in rr {
            let b = (((r - lo) / range) * ENTROPY_BINS as f64) as usize;
            counts[b.min(ENTROPY_BINS - 1)] += 1;
        }
    } else {
        counts[0] = n;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

/// Evaluates the seven statistics over a segment's RR intervals (seconds).
/// Needs at least two intervals so a successive difference exists.
pub fn hrv_features(rr: &[f64]) -> Result<HrvFeatures> {
    let n = rr.len();
    if n < 2 {
        return Err(CoreError::InsufficientRr(n));
    }
    let nf = n as f64;
    let mean = rr.iter().sum::<f64>() / nf;
    let std = (rr.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / nf).sqrt();
    let rmssd = (rr
        .windows(2)
        .map(|w| (w[1] - w[0]).powi(2))
        .sum::<f64>()
        / (nf - 1.0))
        .sqrt();
    let mean_ad = rr.iter().map(|r| (r - mean).abs()).sum::<f64>() / nf;

    let mut sorted = rr.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = median_of(&sorted);
    let mut abs_dev: Vec<f64> = rr.iter().map(|r| (r - median).abs()).collect();
    abs_dev.sort_by(|a, b| a.partial_cmp(b).unwrap());

    Ok(HrvFeatures {
        mean_rr: mean,
        std_rr: std,
        shannon_entropy: shannon_entropy(rr),
        rmssd,
        nrmssd: rmssd / mean,
        mean_ad,
        median_ad: median_of(&abs_dev),
    })
}

/// Outcome of per-segment feature extraction. Segments without enough
/// detectable beats are flagged unusable: excluded from training, counted in
/// evaluation reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentFeatures {
    Usable(HrvFeatures),
    /// Carries the number of detected R peaks.
    Unusable(usize),
}

impl SegmentFeatures {
    pub fn usable(&self) -> Option<HrvFeatures> {
        match self {
            SegmentFeatures::Usable(f) => Some(*f),
            SegmentFeatures::Unusable(_) => None,
        }
    }
}

/// Detects R peaks in the segment and evaluates the seven statistics.
pub fn features_for_segment(segment: &Segment) -> SegmentFeatures {
    let train = detect_r_peaks(&segment.samples, crate::record::TARGET_FS);
    let rr = train.rr_intervals();
    match hrv_features(&rr) {
        Ok(f) => SegmentFeatures::Usable(f),
        Err(_) => SegmentFeatures::Unusable(train.len()),
    }
}
