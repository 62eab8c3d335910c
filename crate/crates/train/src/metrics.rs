//! Classification metrics: per-class precision/recall/F1 (one-vs-rest),
//! F1-macro, balanced accuracy, confusion matrix, and macro one-vs-rest ROC
//! AUC from softmax scores.

use ecgdk_core::io::FeaturedSegment;
use ecgdk_core::Class;
use ecgdk_model::Model;
use ecgdk_nn::{no_grad, softmax_lastdim, Rng};
use serde::{Deserialize, Serialize};

use crate::data::batch_tensors;
use crate::error::TrainError;

pub const EVAL_BATCH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Keyed by `Class::index()` order: Normal, AF, PVC.
    pub per_class: Vec<ClassMetrics>,
    pub f1_macro: f64,
    pub balanced_accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub evaluated_segments: usize,
    pub unusable_segments: usize,
    /// Zero-division and coverage notes.
    pub flags: Vec<String>,
}

/// Metrics from parallel truth/prediction index lists.
pub fn compute_metrics(truth: &[usize], predicted: &[usize], unusable: usize) -> MetricsReport {
    assert_eq!(truth.len(), predicted.len());
    let k = Class::ALL.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for (&t, &p) in truth.iter().zip(predicted) {
        confusion[t][p] += 1;
    }
    let mut per_class = Vec::with_capacity(k);
    let mut flags = Vec::new();
    for c in 0..k {
        let tp = confusion[c][c];
        let fp: usize = (0..k).filter(|&r| r != c).map(|r| confusion[r][c]).sum();
        let fn_: usize = (0..k).filter(|&p| p != c).map(|p| confusion[c][p]).sum();
        let support: usize = confusion[c].iter().sum();
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            flags.push(format!(
                "precision undefined for {} (no predictions); reported as 0",
                Class::from_index(c).unwrap().name()
            ));
            0.0
        };
        let recall = if tp + fn_ > 0 {
            tp as f64 / (tp + fn_) as f64
        } else {
            flags.push(format!(
                "recall undefined for {} (no support); reported as 0",
                Class::from_index(c).unwrap().name()
            ));
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
            support,
        });
    }
    let f1_macro = per_class.iter().map(|m| m.f1).sum::<f64>() / k as f64;
    let balanced_accuracy = per_class.iter().map(|m| m.recall).sum::<f64>() / k as f64;
    MetricsReport {
        per_class,
        f1_macro,
        balanced_accuracy,
        confusion,
        evaluated_segments: truth.len(),
        unusable_segments: unusable,
        flags,
    }
}

/// Eval-mode softmax scores for every usable labeled example, in input
/// order. Returns (scores, true class indices, unusable count).
pub fn model_scores(
    model: &Model,
    set: &[FeaturedSegment],
) -> Result<(Vec<[f64; 3]>, Vec<usize>, usize), TrainError> {
    let mut scores = Vec::new();
    let mut truth = Vec::new();
    let mut unusable = 0usize;
    let needs_features = model.cfg.use_rr_path;
    let eligible: Vec<&FeaturedSegment> = set
        .iter()
        .filter(|e| {
            if e.segment.label.is_none() {
                return false;
            }
            if e.features.is_none() {
                unusable += 1;
                return false;
            }
            true
        })
        .collect();
    let mut rng = Rng::new(0, 0); // eval mode: never consumed
    for chunk in eligible.chunks(EVAL_BATCH) {
        let (ecg, feats, targets) = batch_tensors(chunk, needs_features);
        let out = no_grad(|| model.forward(&ecg, feats.as_ref(), false, &mut rng))
            .map_err(TrainError::Model)?;
        let probs = no_grad(|| softmax_lastdim(&out.logits)).to_vec();
        for (r, &t) in targets.iter().enumerate() {
            scores.push([probs[r * 3], probs[r * 3 + 1], probs[r * 3 + 2]]);
            truth.push(t);
        }
    }
    Ok((scores, truth, unusable))
}

/// Argmax evaluation of a model over a labeled set.
pub fn evaluate(model: &Model, set: &[FeaturedSegment]) -> Result<MetricsReport, TrainError> {
    let (scores, truth, unusable) = model_scores(model, set)?;
    if truth.is_empty() {
        return Err(TrainError::Data(
            "evaluation set has no usable labeled segments".into(),
        ));
    }
    let predicted: Vec<usize> = scores
        .iter()
        .map(|s| {
            s.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        })
        .collect();
    Ok(compute_metrics(&truth, &predicted, unusable))
}

/// Rank-based (Mann-Whitney) binary AUC with average ranks on ties.
fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|p| **p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut ranks = vec![0.0f64; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg_rank;
        }
        i = j + 1;
    }
    let pos_rank_sum: f64 = ranks
        .iter()
        .zip(positive)
        .filter(|(_, p)| **p)
        .map(|(r, _)| r)
        .sum();
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Macro one-vs-rest ROC AUC over the classes present in the labels.
pub fn macro_ovr_auc(scores: &[[f64; 3]], truth: &[usize]) -> Option<f64> {
    assert_eq!(scores.len(), truth.len());
    let mut aucs = Vec::new();
    for c in 0..3 {
        let class_scores: Vec<f64> = scores.iter().map(|s| s[c]).collect();
        let positive: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        if let Some(a) = binary_auc(&class_scores, &positive) {
            aucs.push(a);
        }
    }
    if aucs.is_empty() {
        None
    } else {
        Some(aucs.iter().sum::<f64>() / aucs.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let truth = vec![0, 1, 2, 0, 1, 2];
        let report = compute_metrics(&truth, &truth, 0);
        assert_eq!(report.f1_macro, 1.0);
        assert_eq!(report.balanced_accuracy, 1.0);
        for m in &report.per_class {
            assert_eq!(m.precision, 1.0);
            assert_eq!(m.recall, 1.0);
            assert_eq!(m.f1, 1.0);
        }
    }

    #[test]
    fn balanced_accuracy_is_mean_recall() {
        // Class recalls 1.0, 0.5, 0.75.
        let truth = vec![0, 0, 1, 1, 2, 2, 2, 2];
        let pred = vec![0, 0, 1, 0, 2, 2, 2, 0];
        let report = compute_metrics(&truth, &pred, 0);
        assert!((report.per_class[0].recall - 1.0).abs() < 1e-12);
        assert!((report.per_class[1].recall - 0.5).abs() < 1e-12);
        assert!((report.per_class[2].recall - 0.75).abs() < 1e-12);
        assert!((report.balanced_accuracy - 0.75).abs() < 1e-12);
    }

    #[test]
    fn f1_harmonic_mean() {
        // For class 0: precision 0.5 (1 tp, 1 fp), recall 1.0 -> F1 = 2/3.
        let truth = vec![0, 1, 1];
        let pred = vec![0, 0, 1];
        let report = compute_metrics(&truth, &pred, 0);
        let m = &report.per_class[0];
        assert!((m.precision - 0.5).abs() < 1e-12);
        assert!((m.recall - 1.0).abs() < 1e-12);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_division_flagged() {
        // No PVC support and no PVC predictions.
        let truth = vec![0, 1];
        let pred = vec![0, 1];
        let report = compute_metrics(&truth, &pred, 0);
        assert!(report.per_class[2].precision == 0.0);
        assert!(!report.flags.is_empty());
    }

    #[test]
    fn confusion_row_sums_are_support() {
        let truth = vec![0, 0, 1, 2, 2, 2];
        let pred = vec![0, 1, 1, 2, 0, 2];
        let report = compute_metrics(&truth, &pred, 0);
        for (c, row) in report.confusion.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), report.per_class[c].support);
        }
        assert_eq!(report.evaluated_segments, 6);
    }

    #[test]
    fn macro_metrics_invariant_under_label_permutation() {
        let truth = vec![0, 0, 1, 1, 2, 2, 0, 1, 2];
        let pred = vec![0, 1, 1, 1, 2, 0, 0, 2, 2];
        let base = compute_metrics(&truth, &pred, 0);
        // Permute labels 0->1, 1->2, 2->0 in both lists.
        let perm = |v: &[usize]| -> Vec<usize> { v.iter().map(|&x| (x + 1) % 3).collect() };
        let permuted = compute_metrics(&perm(&truth), &perm(&pred), 0);
        assert!((base.f1_macro - permuted.f1_macro).abs() < 1e-12);
        assert!((base.balanced_accuracy - permuted.balanced_accuracy).abs() < 1e-12);
    }

    #[test]
    fn auc_perfect_and_random() {
        let scores = vec![0.9, 0.8, 0.2, 0.1];
        let pos = vec![true, true, false, false];
        assert_eq!(binary_auc(&scores, &pos), Some(1.0));
        let scores = vec![0.5, 0.5, 0.5, 0.5];
        assert_eq!(binary_auc(&scores, &pos), Some(0.5));
        // Inverted ordering.
        let scores = vec![0.1, 0.2, 0.8, 0.9];
        assert_eq!(binary_auc(&scores, &pos), Some(0.0));
        // Degenerate: one class absent.
        assert_eq!(binary_auc(&[0.1, 0.2], &[true, true]), None);
    }

    #[test]
    fn macro_auc_combines_classes() {
        let scores = vec![
            [0.8, 0.1, 0.1],
            [0.7, 0.2, 0.1],
            [0.1, 0.8, 0.1],
            [0.2, 0.7, 0.1],
            [0.1, 0.1, 0.8],
            [0.2, 0.1, 0.7],
        ];
        let truth = vec![0, 0, 1, 1, 2, 2];
        assert_eq!(macro_ovr_auc(&scores, &truth), Some(1.0));
    }
}
