//! Scaled dot-product attention, the multi-head layer, and sinusoidal
//! positional encodings.

use crate::kernels::{matmul_nn_acc, matmul_nt_acc, matmul_tn_acc};
use crate::layers::Linear;
use crate::ops::{permute, reshape, softmax_row};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Softmax(q k^T * scale) v over `[batch_heads, seq, d_head]` inputs, fused
/// into one node. The attention probabilities are kept for the backward pass.
pub fn scaled_dot_attention(q: &Tensor, k: &Tensor, v: &Tensor, scale: f64) -> Tensor {
    let qs = q.shape().to_vec();
    assert!(
        qs.len() == 3 && q.shape() == k.shape() && q.shape() == v.shape(),
        "attention: q {:?} k {:?} v {:?}",
        q.shape(),
        k.shape(),
        v.shape()
    );
    let (bh, s, dh) = (qs[0], qs[1], qs[2]);

    let mut probs = vec![0.0f64; bh * s * s];
    let mut data = vec![0.0f64; bh * s * dh];
    {
        let qd = q.data();
        let kd = k.data();
        let vd = v.data();
        let mut scores = vec![0.0f64; s * s];
        for b in 0..bh {
            let qb = &qd[b * s * dh..(b + 1) * s * dh];
            let kb = &kd[b * s * dh..(b + 1) * s * dh];
            let vb = &vd[b * s * dh..(b + 1) * s * dh];
            scores.iter_mut().for_each(|x| *x = 0.0);
            matmul_nt_acc(&mut scores, qb, kb, s, dh, s);
            let pb = &mut probs[b * s * s..(b + 1) * s * s];
            for r in 0..s {
                let row = &mut scores[r * s..(r + 1) * s];
                for x in row.iter_mut() {
                    *x *= scale;
                }
                softmax_row(row, &mut pb[r * s..(r + 1) * s]);
            }
            matmul_nn_acc(&mut data[b * s * dh..(b + 1) * s * dh], pb, vb, s, s, dh);
        }
    }

    let probs = std::rc::Rc::new(probs);
    let (pq, pk, pv) = (q.clone(), k.clone(), v.clone());
    Tensor::from_op(
        vec![bh, s, dh],
        data,
        vec![q.clone(), k.clone(), v.clone()],
        move |g, _| {
            let qd = pq.data();
            let kd = pk.data();
            let vd = pv.data();
            let mut dp = vec![0.0f64; s * s];
            let mut ds = vec![0.0f64; s * s];
            for b in 0..bh {
                let gb = &g[b * s * dh..(b + 1) * s * dh];
                let pb = &probs[b * s * s..(b + 1) * s * s];
                if pv.requires_grad() {
                    pv.with_grad_mut(|vg| {
                        matmul_tn_acc(&mut vg[b * s * dh..(b + 1) * s * dh], pb, gb, s, s, dh);
                    });
                }
                if pq.requires_grad() || pk.requires_grad() {
                    dp.iter_mut().for_each(|x| *x = 0.0);
                    matmul_nt_acc(&mut dp, gb, &vd[b * s * dh..(b + 1) * s * dh], s, dh, s);
                    for r in 0..s {
                        let prow = &pb[r * s..(r + 1) * s];
                        let dprow = &dp[r * s..(r + 1) * s];
                        let dot: f64 = prow.iter().zip(dprow).map(|(p, d)| p * d).sum();
                        for j in 0..s {
                            ds[r * s + j] = scale * prow[j] * (dprow[j] - dot);
                        }
                    }
                    if pq.requires_grad() {
                        pq.with_grad_mut(|qg| {
                            matmul_nn_acc(
                                &mut qg[b * s * dh..(b + 1) * s * dh],
                                &ds,
                                &kd[b * s * dh..(b + 1) * s * dh],
                                s,
                                s,
                                dh,
                            );
                        });
                    }
                    if pk.requires_grad() {
                        pk.with_grad_mut(|kg| {
                            matmul_tn_acc(
                                &mut kg[b * s * dh..(b + 1) * s * dh],
                                &ds,
                                &qd[b * s * dh..(b + 1) * s * dh],
                                s,
                                s,
                                dh,
                            );
                        });
                    }
                }
            }
        },
    )
}

/// Forward-only attention probabilities for one `[seq, d_head]` pair; used by
/// tests to inspect the weight matrix directly.
pub fn attention_probs(q: &[f64], k: &[f64], seq: usize, d_head: usize, scale: f64) -> Vec<f64> {
    let mut scores = vec![0.0f64; seq * seq];
    matmul_nt_acc(&mut scores, q, k, seq, d_head, seq);
    let mut probs = vec![0.0f64; seq * seq];
    for r in 0..seq {
        let row = &mut scores[r * seq..(r + 1) * seq];
        for x in row.iter_mut() {
            *x *= scale;
        }
        softmax_row(row, &mut probs[r * seq..(r + 1) * seq]);
    }
    probs
}

/// Multi-head attention with learned input/output projections (encoder
/// style, unmasked).
#[derive(Debug, Clone)]
pub struct MultiHeadAttention {
    pub wq: Linear,
    pub wk: Linear,
    pub wv: Linear,
    pub wo: Linear,
    pub heads: usize,
    pub d_model: usize,
}

impl MultiHeadAttention {
    /// Panics if `d_model` is not divisible by `heads`; validate the config
    /// before building.
    pub fn new(d_model: usize, heads: usize, rng: &mut Rng) -> Self {
        assert!(
            heads > 0 && d_model % heads == 0,
            "multi-head attention: d_model {d_model} not divisible by heads {heads}"
        );
        Self {
            wq: Linear::new(d_model, d_model, rng),
            wk: Linear::new(d_model, d_model, rng),
            wv: Linear::new(d_model, d_model, rng),
            wo: Linear::new(d_model, d_model, rng),
            heads,
            d_model,
        }
    }

    /// `q, k, v: [batch, seq, d_model]` -> `[batch, seq, d_model]`.
    pub fn forward(&self, q: &Tensor, k: &Tensor, v: &Tensor) -> Tensor {
        let s = q.shape().to_vec();
        assert!(
            s.len() == 3 && s[2] == self.d_model,
            "multi-head attention: input {s:?} vs d_model {}",
            self.d_model
        );
        let (batch, seq) = (s[0], s[1]);
        let dh = self.d_model / self.heads;
        let split = |t: &Tensor| {
            let t = reshape(t, &[batch, seq, self.heads, dh]);
            let t = permute(&t, &[0, 2, 1, 3]);
            reshape(&t, &[batch * self.heads, seq, dh])
        };
        let qh = split(&self.wq.forward(q));
        let kh = split(&self.wk.forward(k));
        let vh = split(&self.wv.forward(v));
        let out = scaled_dot_attention(&qh, &kh, &vh, 1.0 / (dh as f64).sqrt());
        let out = reshape(&out, &[batch, self.heads, seq, dh]);
        let out = permute(&out, &[0, 2, 1, 3]);
        let out = reshape(&out, &[batch, seq, self.d_model]);
        self.wo.forward(&out)
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        self.wq.collect_params(&format!("{prefix}.wq"), out);
        self.wk.collect_params(&format!("{prefix}.wk"), out);
        self.wv.collect_params(&format!("{prefix}.wv"), out);
        self.wo.collect_params(&format!("{prefix}.wo"), out);
    }
}

/// Sinusoidal positional encoding table `[seq, d_model]`:
/// `PE(pos, 2i) = sin(pos / 10000^(2i/d))`, `PE(pos, 2i+1) = cos(...)`.
pub fn positional_encoding(seq: usize, d_model: usize) -> Tensor {
    let mut data = vec![0.0f64; seq * d_model];
    for pos in 0..seq {
        for i in 0..d_model / 2 {
            let rate = 1.0 / 10_000f64.powf(2.0 * i as f64 / d_model as f64);
            let angle = pos as f64 * rate;
            data[pos * d_model + 2 * i] = angle.sin();
            if 2 * i + 1 < d_model {
                data[pos * d_model + 2 * i + 1] = angle.cos();
            }
        }
    }
    Tensor::from_vec(&[seq, d_model], data, false)
}
