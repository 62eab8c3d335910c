//! Noise-robustness sweep: additive white Gaussian noise at a list of SNR
//! levels, HRV features recomputed from the corrupted signal, macro
//! one-vs-rest AUC against the clean baseline.

use ecgdk_core::io::FeaturedSegment;
use ecgdk_core::{features_for_segment, Segment};
use ecgdk_core::dsp::normalize_unit;
use ecgdk_model::Model;
use ecgdk_nn::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TrainError};
use crate::metrics::{macro_ovr_auc, model_scores};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSweepPoint {
    pub snr_db: f64,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub mean_auc_loss: f64,
    pub std_auc_loss: f64,
    /// Per-seed noisy AUC values, in seed order.
    pub auc_per_seed: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSweepReport {
    pub clean_auc: f64,
    pub points: Vec<NoiseSweepPoint>,
}

/// Corrupts one segment at the given SNR (noise variance =
/// `mean_square(signal) * 10^(-snr/10)`), then renormalizes to [-1, 1] and
/// recomputes the HRV features from the corrupted waveform.
fn corrupt_segment(seg: &Segment, snr_db: f64, rng: &mut Rng) -> FeaturedSegment {
    let n = seg.samples.len() as f64;
    let power = seg.samples.iter().map(|s| s * s).sum::<f64>() / n;
    let noise_std = (power * 10f64.powf(-snr_db / 10.0)).sqrt();
    let noisy: Vec<f64> = seg
        .samples
        .iter()
        .map(|s| s + noise_std * rng.normal())
        .collect();
    let segment = Segment {
        samples: normalize_unit(&noisy),
        label: seg.label,
        domain_id: seg.domain_id.clone(),
        source_record: seg.source_record.clone(),
        start_index: seg.start_index,
    };
    let features = features_for_segment(&segment).usable();
    FeaturedSegment { segment, features }
}

/// Evaluates AUC degradation across SNR levels, `noise_seeds` independent
/// noise realizations per level. Deterministic in `seed`.
pub fn noise_sweep(
    model: &Model,
    test_set: &[FeaturedSegment],
    snr_list_db: &[f64],
    noise_seeds: usize,
    seed: u64,
) -> Result<NoiseSweepReport> {
    if snr_list_db.is_empty() {
        return Err(TrainError::Data("empty SNR list".into()));
    }
    if noise_seeds == 0 {
        return Err(TrainError::Data("need at least one noise seed".into()));
    }

    let (clean_scores, clean_truth, _) = model_scores(model, test_set)?;
    let clean_auc = macro_ovr_auc(&clean_scores, &clean_truth)
        .ok_or_else(|| TrainError::Data("clean AUC undefined (single-class test set)".into()))?;

    let mut points = Vec::with_capacity(snr_list_db.len());
    for (snr_idx, &snr) in snr_list_db.iter().enumerate() {
        let mut aucs = Vec::with_capacity(noise_seeds);
        for rep in 0..noise_seeds {
            let mut rng = Rng::new(seed, 1000 + (rep as u64) * 64 + snr_idx as u64);
            let corrupted: Vec<FeaturedSegment> = test_set
                .iter()
                .map(|e| corrupt_segment(&e.segment, snr, &mut rng))
                .collect();
            let (scores, truth, _) = model_scores(model, &corrupted)?;
            let auc = macro_ovr_auc(&scores, &truth).ok_or_else(|| {
                TrainError::Data(format!("AUC undefined at {snr} dB (no usable segments)"))
            })?;
            aucs.push(auc);
        }
        let n = aucs.len() as f64;
        let mean = aucs.iter().sum::<f64>() / n;
        let var = if aucs.len() > 1 {
            aucs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        points.push(NoiseSweepPoint {
            snr_db: snr,
            mean_auc: mean,
            std_auc: var.sqrt(),
            mean_auc_loss: clean_auc - mean,
            std_auc_loss: var.sqrt(),
            auc_per_seed: aucs,
        });
    }
    Ok(NoiseSweepReport { clean_auc, points })
}

/// Writes the sweep as CSV: snr_db, mean_auc, std_auc, mean_auc_loss,
/// std_auc_loss.
pub fn write_sweep_csv(path: &std::path::Path, report: &NoiseSweepReport) -> Result<()> {
    use std::io::Write;
    let mut out = String::from("snr_db,mean_auc,std_auc,mean_auc_loss,std_auc_loss\n");
    for p in &report.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.snr_db, p.mean_auc, p.std_auc, p.mean_auc_loss, p.std_auc_loss
        ));
    }
    let io_err = |source| TrainError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io_err)?;
    f.write_all(out.as_bytes()).map_err(io_err)
}
