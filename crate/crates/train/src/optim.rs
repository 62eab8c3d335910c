//! Noam learning-rate schedule and Adam with decoupled weight decay.

use ecgdk_nn::Tensor;

/// Noam schedule with the scale pinned so the peak (at `step == warmup`)
/// equals `base_lr`:
///
/// `lr(step) = scale * d_model^(-1/2) * min(step^(-1/2), step * warmup^(-3/2))`
///
/// with `scale = base_lr * sqrt(d_model * warmup)`. Linear warmup up to
/// `warmup`, inverse-square-root decay after; continuous at the peak.
pub fn noam_lr(step: usize, d_model: usize, warmup: usize, base_lr: f64) -> f64 {
    assert!(step >= 1, "noam_lr: steps are 1-based");
    assert!(warmup >= 1 && d_model >= 1);
    let scale = base_lr * ((d_model * warmup) as f64).sqrt();
    let s = step as f64;
    let w = warmup as f64;
    scale * (d_model as f64).powf(-0.5) * (s.powf(-0.5)).min(s * w.powf(-1.5))
}

/// First/second moment buffers, one pair per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: usize,
}

impl AdamState {
    pub fn new(params: &[(String, Tensor)]) -> Self {
        Self {
            m: params.iter().map(|(_, p)| vec![0.0; p.numel()]).collect(),
            v: params.iter().map(|(_, p)| vec![0.0; p.numel()]).collect(),
            t: 0,
        }
    }

    pub fn step_count(&self) -> usize {
        self.t
    }
}

/// One Adam update with bias correction. Decoupled weight decay shrinks the
/// parameters (`theta -= lr * wd * theta`) before the moment update.
#[allow(clippy::too_many_arguments)]
pub fn adam_step(
    params: &[(String, Tensor)],
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    assert_eq!(params.len(), state.m.len(), "optimizer state mismatch");
    state.t += 1;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    for (idx, (_, p)) in params.iter().enumerate() {
        let m = &mut state.m[idx];
        let v = &mut state.v[idx];
        p.apply_update(|theta, grad| {
            for i in 0..theta.len() {
                if weight_decay != 0.0 {
                    theta[i] -= lr * weight_decay * theta[i];
                }
                let g = grad[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                theta[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        });
    }
}
