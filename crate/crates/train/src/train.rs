//! The optimization loop: shuffled mini-batches, cross-entropy task loss,
//! per-batch MMD alignment, Adam with the Noam schedule, and early stopping
//! on validation F1-macro.
//!
//! MMD target batches come from an unlabeled target-domain pool when one is
//! supplied. Without one, the loop falls back to pairing embeddings from
//! distinct source domains inside each mini-batch (the two largest domain
//! groups); single-domain batches skip the MMD term for that step.

use ecgdk_core::io::FeaturedSegment;
use ecgdk_model::{total_loss, Model, ModelConfig, MmdConfig};
use ecgdk_nn::{cross_entropy, gather_rows, Rng, Tensor};
use serde::{Deserialize, Serialize};

use crate::data::{batch_tensors, trainable, usable};
use crate::error::{Result, TrainError};
use crate::metrics::evaluate;
use crate::optim::{adam_step, noam_lr, AdamState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub base_lr: f64,
    pub weight_decay: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub warmup_steps: usize,
    pub early_stop_patience: usize,
    pub seed: u64,
    pub mmd: MmdConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            max_epochs: 50,
            base_lr: 1e-3,
            weight_decay: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.98,
            adam_eps: 1e-9,
            warmup_steps: 4000,
            early_stop_patience: 7,
            seed: 0,
            mmd: MmdConfig {
                lambda_mmd: 0.0,
                ..MmdConfig::default()
            },
        }
    }
}

/// One training-log row; `val_f1_macro` is filled on the last step of each
/// epoch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRow {
    pub epoch: usize,
    pub step: usize,
    pub lr: f64,
    pub task_loss: f64,
    pub mmd: f64,
    pub total_loss: f64,
    pub val_f1_macro: Option<f64>,
}

#[derive(Debug)]
pub struct TrainOutcome {
    /// Best-validation model, parameters quantized to checkpoint precision.
    pub model: Model,
    pub log: Vec<LogRow>,
    pub best_epoch: usize,
    pub best_val_f1: f64,
    pub epochs_run: usize,
    /// Steps where the MMD pair had to be truncated to the smaller batch.
    pub mmd_truncated_steps: usize,
    /// Steps where no MMD pair could be formed (single-domain batch).
    pub mmd_skipped_steps: usize,
}

fn snapshot(params: &[(String, Tensor)]) -> Vec<Vec<f64>> {
    params.iter().map(|(_, t)| t.to_vec()).collect()
}

fn restore(params: &[(String, Tensor)], snap: &[Vec<f64>]) {
    for ((_, t), s) in params.iter().zip(snap) {
        t.set_data(s);
    }
}

/// Splits a mini-batch into its two largest domain groups (row indices).
/// Returns None when the batch holds a single domain.
fn domain_pair(batch: &[&FeaturedSegment]) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, e) in batch.iter().enumerate() {
        match groups.iter_mut().find(|(d, _)| *d == e.segment.domain_id) {
            Some((_, v)) => v.push(i),
            None => groups.push((e.segment.domain_id.clone(), vec![i])),
        }
    }
    if groups.len() < 2 {
        return None;
    }
    groups.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));
    Some((groups[0].1.clone(), groups[1].1.clone()))
}

/// Trains a model from scratch and returns the best-validation checkpoint.
///
/// Deterministic: the same inputs, config, and seed reproduce byte-identical
/// parameters. Stops after `early_stop_patience` epochs without validation
/// improvement or at `max_epochs`.
pub fn train(
    train_set: &[FeaturedSegment],
    val_set: &[FeaturedSegment],
    target_unlabeled: Option<&[FeaturedSegment]>,
    cfg: &TrainConfig,
    model_cfg: &ModelConfig,
) -> Result<TrainOutcome> {
    let examples = trainable(train_set);
    if examples.is_empty() {
        return Err(TrainError::EmptyTrainSet);
    }
    let classes = crate::data::classes_present(train_set);
    if classes.len() < 2 {
        return Err(TrainError::SingleClass(
            classes.first().map(|c| c.name().to_string()).unwrap_or_default(),
        ));
    }

    let target_pool: Vec<&FeaturedSegment> = target_unlabeled.map(usable).unwrap_or_default();
    let use_target = !target_pool.is_empty() && cfg.mmd.lambda_mmd > 0.0;

    let model = Model::new(model_cfg.clone(), cfg.seed)?;
    let params = model.params();
    let mut adam = AdamState::new(&params);
    let mut dropout_rng = Rng::new(cfg.seed, 11);
    let mut shuffle_rng = Rng::new(cfg.seed, 12);
    let mut target_rng = Rng::new(cfg.seed, 13);

    let mut log: Vec<LogRow> = Vec::new();
    let mut best_val = f64::NEG_INFINITY;
    let mut best_epoch = 0usize;
    let mut best_params: Vec<Vec<f64>> = snapshot(&params);
    let mut stale_epochs = 0usize;
    let mut global_step = 0usize;
    let mut epochs_run = 0usize;
    let mut mmd_truncated_steps = 0usize;
    let mut mmd_skipped_steps = 0usize;

    let mut target_cursor = 0usize;
    let mut target_order: Vec<usize> = (0..target_pool.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        epochs_run = epoch;
        let mut order: Vec<usize> = (0..examples.len()).collect();
        shuffle_rng.shuffle(&mut order);

        for chunk in order.chunks(cfg.batch_size) {
            global_step += 1;
            let batch: Vec<&FeaturedSegment> = chunk.iter().map(|&i| examples[i]).collect();
            let (ecg, feats, targets) = batch_tensors(&batch, model_cfg.use_rr_path);

            model.zero_grads();
            let out = model.forward(&ecg, feats.as_ref(), true, &mut dropout_rng)?;
            let task = cross_entropy(&out.logits, &targets);
            let task_value = task.item();

            let (loss, mmd_value) = if cfg.mmd.lambda_mmd == 0.0 {
                (task, 0.0)
            } else if use_target {
                // Draw a same-size target batch, reshuffling the pool each
                // time it is exhausted.
                let want = batch.len().min(target_pool.len());
                let mut idx = Vec::with_capacity(want);
                for _ in 0..want {
                    if target_cursor == 0 {
                        target_rng.shuffle(&mut target_order);
                    }
                    idx.push(target_order[target_cursor]);
                    target_cursor = (target_cursor + 1) % target_order.len();
                }
                let tgt: Vec<&FeaturedSegment> = idx.iter().map(|&i| target_pool[i]).collect();
                let (t_ecg, t_feats, _) = batch_tensors(&tgt, model_cfg.use_rr_path);
                let t_out = model.forward(&t_ecg, t_feats.as_ref(), true, &mut dropout_rng)?;
                if tgt.len() != batch.len() {
                    mmd_truncated_steps += 1;
                }
                total_loss(&task, &out.embedding, &t_out.embedding, &cfg.mmd)?
            } else if let Some((ia, ib)) = domain_pair(&batch) {
                if ia.len() != ib.len() {
                    mmd_truncated_steps += 1;
                }
                let xa = gather_rows(&out.embedding, &ia);
                let xb = gather_rows(&out.embedding, &ib);
                total_loss(&task, &xa, &xb, &cfg.mmd)?
            } else {
                mmd_skipped_steps += 1;
                (task, 0.0)
            };

            let total_value = loss.item();
            loss.backward();
            let lr = noam_lr(global_step, model_cfg.d_model, cfg.warmup_steps, cfg.base_lr);
            adam_step(
                &params,
                &mut adam,
                lr,
                cfg.weight_decay,
                cfg.adam_beta1,
                cfg.adam_beta2,
                cfg.adam_eps,
            );

            log.push(LogRow {
                epoch,
                step: global_step,
                lr,
                task_loss: task_value,
                mmd: mmd_value,
                total_loss: total_value,
                val_f1_macro: None,
            });
        }

        let val_f1 = evaluate(&model, val_set)?.f1_macro;
        if let Some(row) = log.last_mut() {
            row.val_f1_macro = Some(val_f1);
        }

        if val_f1 > best_val {
            best_val = val_f1;
            best_epoch = epoch;
            best_params = snapshot(&params);
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= cfg.early_stop_patience {
                break;
            }
        }
    }

    restore(&params, &best_params);
    model.quantize_params();
    Ok(TrainOutcome {
        model,
        log,
        best_epoch,
        best_val_f1: best_val,
        epochs_run,
        mmd_truncated_steps,
        mmd_skipped_steps,
    })
}

/// Writes the training log as CSV: epoch, step, lr, task_loss, mmd,
/// total_loss, val_f1_macro (blank except on epoch-final rows).
pub fn write_log_csv(path: &std::path::Path, log: &[LogRow]) -> Result<()> {
    use std::io::Write;
    let mut out = String::from("epoch,step,lr,task_loss,mmd,total_loss,val_f1_macro\n");
    for row in log {
        let val = row
            .val_f1_macro
            .map(|v| format!("{v}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.epoch, row.step, row.lr, row.task_loss, row.mmd, row.total_loss, val
        ));
    }
    let mut f = std::fs::File::create(path).map_err(|source| TrainError::Io {
        path: path.display().to_string(),
        source,
    })?;
    f.write_all(out.as_bytes()).map_err(|source| TrainError::Io {
        path: path.display().to_string(),
        source,
    })
}
