//! Differentiable tensor operations.
//!
//! Every op validates shapes up front (panicking with both shapes on
//! mismatch), computes the forward value, and registers a backward closure
//! that accumulates into the parents' gradients. Gradient work for a parent
//! is skipped when that parent does not require a gradient.

use crate::kernels::{matmul_nn_acc, matmul_nt_acc, matmul_tn_acc};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Elementwise sum of two same-shape tensors.
pub fn add(a: &Tensor, b: &Tensor) -> Tensor {
    assert_eq!(
        a.shape(),
        b.shape(),
        "add: shape {:?} vs {:?}",
        a.shape(),
        b.shape()
    );
    let data = a
        .data()
        .iter()
        .zip(b.data().iter())
        .map(|(x, y)| x + y)
        .collect();
    let (pa, pb) = (a.clone(), b.clone());
    Tensor::from_op(a.shape().to_vec(), data, vec![a.clone(), b.clone()], move |g, _| {
        if pa.requires_grad() {
            pa.accumulate_grad(g);
        }
        if pb.requires_grad() {
            pb.accumulate_grad(g);
        }
    })
}

/// Adds a `[seq, d]` table to every batch row of a `[batch, seq, d]` tensor.
pub fn add_broadcast_seq(x: &Tensor, table: &Tensor) -> Tensor {
    let (xs, ts) = (x.shape().to_vec(), table.shape().to_vec());
    assert!(
        xs.len() == 3 && ts.len() == 2 && xs[1] == ts[0] && xs[2] == ts[1],
        "add_broadcast_seq: shape {xs:?} vs table {ts:?}"
    );
    let per = ts[0] * ts[1];
    let t = table.data();
    let data: Vec<f64> = x
        .data()
        .iter()
        .enumerate()
        .map(|(i, v)| v + t[i % per])
        .collect();
    drop(t);
    let (px, pt) = (x.clone(), table.clone());
    Tensor::from_op(xs, data, vec![x.clone(), table.clone()], move |g, _| {
        if px.requires_grad() {
            px.accumulate_grad(g);
        }
        if pt.requires_grad() {
            pt.with_grad_mut(|tg| {
                for (i, gv) in g.iter().enumerate() {
                    tg[i % per] += gv;
                }
            });
        }
    })
}

/// Multiplies by a compile-time constant factor.
pub fn scale(x: &Tensor, factor: f64) -> Tensor {
    let data = x.data().iter().map(|v| v * factor).collect();
    let px = x.clone();
    Tensor::from_op(x.shape().to_vec(), data, vec![x.clone()], move |g, _| {
        if px.requires_grad() {
            px.with_grad_mut(|xg| {
                for (xi, gi) in xg.iter_mut().zip(g) {
                    *xi += factor * gi;
                }
            });
        }
    })
}

/// Elementwise product of two same-shape tensors.
pub fn mul_elem(a: &Tensor, b: &Tensor) -> Tensor {
    assert_eq!(
        a.shape(),
        b.shape(),
        "mul_elem: shape {:?} vs {:?}",
        a.shape(),
        b.shape()
    );
    let data = a
        .data()
        .iter()
        .zip(b.data().iter())
        .map(|(x, y)| x * y)
        .collect();
    let (pa, pb) = (a.clone(), b.clone());
    Tensor::from_op(a.shape().to_vec(), data, vec![a.clone(), b.clone()], move |g, _| {
        if pa.requires_grad() {
            let bd = pb.data();
            pa.with_grad_mut(|ag| {
                for i in 0..ag.len() {
                    ag[i] += g[i] * bd[i];
                }
            });
        }
        if pb.requires_grad() {
            let ad = pa.data();
            pb.with_grad_mut(|bg| {
                for i in 0..bg.len() {
                    bg[i] += g[i] * ad[i];
                }
            });
        }
    })
}

pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|v| v.max(0.0)).collect();
    let px = x.clone();
    Tensor::from_op(x.shape().to_vec(), data, vec![x.clone()], move |g, out| {
        if px.requires_grad() {
            px.with_grad_mut(|xg| {
                for i in 0..xg.len() {
                    if out[i] > 0.0 {
                        xg[i] += g[i];
                    }
                }
            });
        }
    })
}

/// Same data, new shape (element count must match).
pub fn reshape(x: &Tensor, shape: &[usize]) -> Tensor {
    assert_eq!(
        x.numel(),
        shape.iter().product::<usize>(),
        "reshape: {:?} to {:?}",
        x.shape(),
        shape
    );
    let px = x.clone();
    Tensor::from_op(shape.to_vec(), x.to_vec(), vec![x.clone()], move |g, _| {
        if px.requires_grad() {
            px.accumulate_grad(g);
        }
    })
}

fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

fn permute_copy(src: &[f64], shape: &[usize], perm: &[usize]) -> (Vec<usize>, Vec<f64>) {
    let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let in_strides = strides_of(shape);
    let out_perm_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let n = src.len();
    let mut out = vec![0.0f64; n];
    let mut idx = vec![0usize; shape.len()];
    for slot in out.iter_mut() {
        let mut off = 0;
        for (d, &i) in idx.iter().enumerate() {
            off += i * out_perm_strides[d];
        }
        *slot = src[off];
        for d in (0..idx.len()).rev() {
            idx[d] += 1;
            if idx[d] < out_shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    (out_shape, out)
}

/// Dimension permutation (generalized transpose).
pub fn permute(x: &Tensor, perm: &[usize]) -> Tensor {
    let shape = x.shape().to_vec();
    assert_eq!(
        perm.len(),
        shape.len(),
        "permute: perm {perm:?} for shape {shape:?}"
    );
    let (out_shape, data) = permute_copy(&x.data(), &shape, perm);
    let mut inverse = vec![0usize; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inverse[p] = i;
    }
    let px = x.clone();
    let out_shape_b = out_shape.clone();
    Tensor::from_op(out_shape, data, vec![x.clone()], move |g, _| {
        if px.requires_grad() {
            let (_, ginv) = permute_copy(g, &out_shape_b, &inverse);
            px.accumulate_grad(&ginv);
        }
    })
}

/// Concatenates two 2-D tensors along the last dimension.
pub fn concat_last(a: &Tensor, b: &Tensor) -> Tensor {
    let (sa, sb) = (a.shape().to_vec(), b.shape().to_vec());
    assert!(
        sa.len() == 2 && sb.len() == 2 && sa[0] == sb[0],
        "concat_last: shape {sa:?} vs {sb:?}"
    );
    let (rows, da, db) = (sa[0], sa[1], sb[1]);
    let mut data = Vec::with_capacity(rows * (da + db));
    {
        let av = a.data();
        let bv = b.data();
        for r in 0..rows {
            data.extend_from_slice(&av[r * da..(r + 1) * da]);
            data.extend_from_slice(&bv[r * db..(r + 1) * db]);
        }
    }
    let (pa, pb) = (a.clone(), b.clone());
    Tensor::from_op(
        vec![rows, da + db],
        data,
        vec![a.clone(), b.clone()],
        move |g, _| {
            let w = da + db;
            if pa.requires_grad() {
                pa.with_grad_mut(|ag| {
                    for r in 0..rows {
                        for i in 0..da {
                            ag[r * da + i] += g[r * w + i];
                        }
                    }
                });
            }
            if pb.requires_grad() {
                pb.with_grad_mut(|bg| {
                    for r in 0..rows {
                        for i in 0..db {
                            bg[r * db + i] += g[r * w + da + i];
                        }
                    }
                });
            }
        },
    )
}

/// Mean over the sequence axis: `[batch, seq, d]` to `[batch, d]`.
pub fn mean_pool_seq(x: &Tensor) -> Tensor {
    let s = x.shape().to_vec();
    assert_eq!(s.len(), 3, "mean_pool_seq: expected 3-D input, got {s:?}");
    let (b, seq, d) = (s[0], s[1], s[2]);
    let xd = x.data();
    let mut data = vec![0.0f64; b * d];
    for bi in 0..b {
        for si in 0..seq {
            let row = &xd[(bi * seq + si) * d..(bi * seq + si + 1) * d];
            for (o, v) in data[bi * d..(bi + 1) * d].iter_mut().zip(row) {
                *o += v;
            }
        }
    }
    let inv = 1.0 / seq as f64;
    for v in &mut data {
        *v *= inv;
    }
    drop(xd);
    let px = x.clone();
    Tensor::from_op(vec![b, d], data, vec![x.clone()], move |g, _| {
        if px.requires_grad() {
            px.with_grad_mut(|xg| {
                for bi in 0..b {
                    for si in 0..seq {
                        let base = (bi * seq + si) * d;
                        for di in 0..d {
                            xg[base + di] += g[bi * d + di] * inv;
                        }
                    }
                }
            });
        }
    })
}

/// Affine map over the last dimension: `y = x w + b` with `w: [d_in, d_out]`.
pub fn linear(x: &Tensor, w: &Tensor, b: &Tensor) -> Tensor {
    let xs = x.shape().to_vec();
    let ws = w.shape().to_vec();
    assert!(
        ws.len() == 2 && xs.last() == Some(&ws[0]) && b.shape() == [ws[1]],
        "linear: x {xs:?} w {ws:?} b {:?}",
        b.shape()
    );
    let (d_in, d_out) = (ws[0], ws[1]);
    let rows = x.numel() / d_in;
    let mut data = vec![0.0f64; rows * d_out];
    matmul_nn_acc(&mut data, &x.data(), &w.data(), rows, d_in, d_out);
    {
        let bv = b.data();
        for r in 0..rows {
            for (o, bias) in data[r * d_out..(r + 1) * d_out].iter_mut().zip(bv.iter()) {
                *o += bias;
            }
        }
    }
    let mut out_shape = xs.clone();
    *out_shape.last_mut().unwrap() = d_out;
    let (px, pw, pb) = (x.clone(), w.clone(), b.clone());
    Tensor::from_op(
        out_shape,
        data,
        vec![x.clone(), w.clone(), b.clone()],
        move |g, _| {
            if px.requires_grad() {
                let wd = pw.data();
                px.with_grad_mut(|xg| {
                    matmul_nt_acc(xg, g, &wd, rows, d_out, d_in);
                });
            }
            if pw.requires_grad() {
                let xd = px.data();
                pw.with_grad_mut(|wg| {
                    matmul_tn_acc(wg, &xd, g, rows, d_in, d_out);
                });
            }
            if pb.requires_grad() {
                pb.with_grad_mut(|bg| {
                    for r in 0..rows {
                        for (bi, gv) in bg.iter_mut().zip(&g[r * d_out..(r + 1) * d_out]) {
                            *bi += gv;
                        }
                    }
                });
            }
        },
    )
}

/// Layer normalization over the last dimension.
pub fn layer_norm(x: &Tensor, gain: &Tensor, bias: &Tensor, eps: f64) -> Tensor {
    let xs = x.shape().to_vec();
    let d = *xs.last().expect("layer_norm: empty shape");
    assert!(
        gain.shape() == [d] && bias.shape() == [d],
        "layer_norm: x {xs:?} gain {:?} bias {:?}",
        gain.shape(),
        bias.shape()
    );
    let rows = x.numel() / d;
    let xd = x.data();
    let gv = gain.data();
    let bv = bias.data();
    let mut data = vec![0.0f64; rows * d];
    let mut xhat = vec![0.0f64; rows * d];
    let mut inv_std = vec![0.0f64; rows];
    for r in 0..rows {
        let row = &xd[r * d..(r + 1) * d];
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let is = 1.0 / (var + eps).sqrt();
        inv_std[r] = is;
        for i in 0..d {
            let h = (row[i] - mean) * is;
            xhat[r * d + i] = h;
            data[r * d + i] = h * gv[i] + bv[i];
        }
    }
    drop(xd);
    drop(gv);
    drop(bv);
    let xhat = std::rc::Rc::new(xhat);
    let inv_std = std::rc::Rc::new(inv_std);
    let (px, pg, pb) = (x.clone(), gain.clone(), bias.clone());
    Tensor::from_op(
        xs,
        data,
        vec![x.clone(), gain.clone(), bias.clone()],
        move |g, _| {
            if px.requires_grad() {
                let gv = pg.data();
                px.with_grad_mut(|xg| {
                    let inv_d = 1.0 / d as f64;
                    for r in 0..rows {
                        let gr = &g[r * d..(r + 1) * d];
                        let hr = &xhat[r * d..(r + 1) * d];
                        let mut m1 = 0.0;
                        let mut m2 = 0.0;
                        for i in 0..d {
                            let gy = gr[i] * gv[i];
                            m1 += gy;
                            m2 += gy * hr[i];
                        }
                        m1 *= inv_d;
                        m2 *= inv_d;
                        let is = inv_std[r];
                        for i in 0..d {
                            let gy = gr[i] * gv[i];
                            xg[r * d + i] += is * (gy - m1 - hr[i] * m2);
                        }
                    }
                });
            }
            if pg.requires_grad() {
                pg.with_grad_mut(|gg| {
                    for r in 0..rows {
                        for i in 0..d {
                            gg[i] += g[r * d + i] * xhat[r * d + i];
                        }
                    }
                });
            }
            if pb.requires_grad() {
                pb.with_grad_mut(|bg| {
                    for r in 0..rows {
                        for i in 0..d {
                            bg[i] += g[r * d + i];
                        }
                    }
                });
            }
        },
    )
}

/// Numerically stable softmax over the last dimension.
pub fn softmax_lastdim(x: &Tensor) -> Tensor {
    let xs = x.shape().to_vec();
    let d = *xs.last().expect("softmax: empty shape");
    let rows = x.numel() / d;
    let xd = x.data();
    let mut data = vec![0.0f64; rows * d];
    for r in 0..rows {
        softmax_row(&xd[r * d..(r + 1) * d], &mut data[r * d..(r + 1) * d]);
    }
    drop(xd);
    let px = x.clone();
    Tensor::from_op(xs, data, vec![x.clone()], move |g, out| {
        if px.requires_grad() {
            px.with_grad_mut(|xg| {
                for r in 0..rows {
                    let s = &out[r * d..(r + 1) * d];
                    let gr = &g[r * d..(r + 1) * d];
                    let dot: f64 = s.iter().zip(gr).map(|(si, gi)| si * gi).sum();
                    for i in 0..d {
                        xg[r * d + i] += s[i] * (gr[i] - dot);
                    }
                }
            });
        }
    })
}

pub fn softmax_row(row: &[f64], out: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &v) in out.iter_mut().zip(row) {
        let e = (v - max).exp();
        *o = e;
        sum += e;
    }
    let inv = 1.0 / sum;
    for o in out.iter_mut() {
        *o *= inv;
    }
}

/// Mean negative log-likelihood of the target classes under softmax(logits).
pub fn cross_entropy(logits: &Tensor, targets: &[usize]) -> Tensor {
    let s = logits.shape().to_vec();
    assert!(
        s.len() == 2 && s[0] == targets.len(),
        "cross_entropy: logits {s:?} vs {} targets",
        targets.len()
    );
    let (batch, classes) = (s[0], s[1]);
    assert!(
        targets.iter().all(|&t| t < classes),
        "cross_entropy: target out of range for {classes} classes"
    );
    let xd = logits.data();
    let mut probs = vec![0.0f64; batch * classes];
    let mut loss = 0.0;
    for r in 0..batch {
        softmax_row(
            &xd[r * classes..(r + 1) * classes],
            &mut probs[r * classes..(r + 1) * classes],
        );
        loss -= probs[r * classes + targets[r]].max(f64::MIN_POSITIVE).ln();
    }
    loss /= batch as f64;
    drop(xd);
    let probs = std::rc::Rc::new(probs);
    let targets = targets.to_vec();
    let pl = logits.clone();
    Tensor::from_op(vec![1], vec![loss], vec![logits.clone()], move |g, _| {
        if pl.requires_grad() {
            let g0 = g[0] / batch as f64;
            pl.with_grad_mut(|lg| {
                for r in 0..batch {
                    for c in 0..classes {
                        let y = if c == targets[r] { 1.0 } else { 0.0 };
                        lg[r * classes + c] += g0 * (probs[r * classes + c] - y);
                    }
                }
            });
        }
    })
}

/// Selects rows of a 2-D tensor by index; the backward pass scatters
/// gradients to the selected rows.
pub fn gather_rows(x: &Tensor, indices: &[usize]) -> Tensor {
    let s = x.shape().to_vec();
    assert_eq!(s.len(), 2, "gather_rows: expected 2-D input, got {s:?}");
    let (rows, d) = (s[0], s[1]);
    assert!(
        indices.iter().all(|&i| i < rows),
        "gather_rows: index out of range for {rows} rows"
    );
    let xd = x.data();
    let mut data = Vec::with_capacity(indices.len() * d);
    for &i in indices {
        data.extend_from_slice(&xd[i * d..(i + 1) * d]);
    }
    drop(xd);
    let idx = indices.to_vec();
    let px = x.clone();
    Tensor::from_op(vec![indices.len(), d], data, vec![x.clone()], move |g, _| {
        if px.requires_grad() {
            px.with_grad_mut(|xg| {
                for (r, &i) in idx.iter().enumerate() {
                    for c in 0..d {
                        xg[i * d + c] += g[r * d + c];
                    }
                }
            });
        }
    })
}

/// Weighted sum of all elements down to a scalar; the standard way to close
/// a graph over a non-scalar output (weights are constants).
pub fn weighted_sum(x: &Tensor, weights: &[f64]) -> Tensor {
    assert_eq!(
        x.numel(),
        weights.len(),
        "weighted_sum: {} elements vs {} weights",
        x.numel(),
        weights.len()
    );
    let s: f64 = x.data().iter().zip(weights).map(|(v, w)| v * w).sum();
    let w = weights.to_vec();
    let px = x.clone();
    Tensor::from_op(vec![1], vec![s], vec![x.clone()], move |g, _| {
        if px.requires_grad() {
            px.with_grad_mut(|xg| {
                for (xi, wi) in xg.iter_mut().zip(&w) {
                    *xi += g[0] * wi;
                }
            });
        }
    })
}

/// Inverted dropout: keeps each element with probability `1 - p` and scales
/// by `1/(1-p)` during training; identity in eval mode or when `p == 0`.
pub fn dropout(x: &Tensor, p: f64, rng: &mut Rng, training: bool) -> Tensor {
    assert!((0.0..1.0).contains(&p), "dropout: p {p} outside [0, 1)");
    if !training || p == 0.0 {
        return x.clone();
    }
    let keep = 1.0 - p;
    let inv = 1.0 / keep;
    let mask: Vec<f64> = (0..x.numel())
        .map(|_| if rng.uniform() < keep { inv } else { 0.0 })
        .collect();
    let data = x
        .data()
        .iter()
        .zip(&mask)
        .map(|(v, m)| v * m)
        .collect();
    let mask = std::rc::Rc::new(mask);
    let px = x.clone();
    Tensor::from_op(x.shape().to_vec(), data, vec![x.clone()], move |g, _| {
        if px.requires_grad() {
            px.with_grad_mut(|xg| {
                for i in 0..xg.len() {
                    xg[i] += g[i] * mask[i];
                }
            });
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_examples() {
        let x = Tensor::from_vec(&[1, 2], vec![0.0, 0.0], false);
        let y = softmax_lastdim(&x);
        assert_eq!(y.to_vec(), vec![0.5, 0.5]);

        let x = Tensor::from_vec(&[1, 2], vec![(2.0f64).ln(), 0.0], false);
        let y = softmax_lastdim(&x).to_vec();
        assert!((y[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((y[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut rng = Rng::new(3, 0);
        let data: Vec<f64> = (0..60).map(|_| rng.uniform_in(-5.0, 5.0)).collect();
        let x = Tensor::from_vec(&[12, 5], data, false);
        let y = softmax_lastdim(&x);
        for r in 0..12 {
            let s: f64 = y.to_vec()[r * 5..(r + 1) * 5].iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cross_entropy_uniform_logits() {
        let x = Tensor::from_vec(&[2, 3], vec![0.0; 6], false);
        let loss = cross_entropy(&x, &[0, 2]);
        assert!((loss.item() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_confident_correct() {
        let x = Tensor::from_vec(&[1, 3], vec![50.0, 0.0, 0.0], false);
        let loss = cross_entropy(&x, &[0]);
        assert!(loss.item() < 1e-12);
    }

    #[test]
    fn linear_identity_and_bias() {
        let x = Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0], false);
        let w = Tensor::from_vec(&[2, 2], vec![1.0, 0.0, 0.0, 1.0], false);
        let b = Tensor::from_vec(&[2], vec![0.0, 0.0], false);
        assert_eq!(linear(&x, &w, &b).to_vec(), x.to_vec());

        let wz = Tensor::from_vec(&[2, 2], vec![0.0; 4], false);
        let bb = Tensor::from_vec(&[2], vec![5.0, -1.0], false);
        assert_eq!(linear(&x, &wz, &bb).to_vec(), vec![5.0, -1.0, 5.0, -1.0]);
    }

    #[test]
    fn linear_hand_case() {
        // [1 2; 3 4] x [5 6; 7 8] = [19 22; 43 50]
        let x = Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0], false);
        let w = Tensor::from_vec(&[2, 2], vec![5.0, 6.0, 7.0, 8.0], false);
        let b = Tensor::from_vec(&[2], vec![0.0, 0.0], false);
        assert_eq!(linear(&x, &w, &b).to_vec(), vec![19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn layer_norm_examples() {
        let gain = Tensor::from_vec(&[2], vec![1.0, 1.0], false);
        let bias = Tensor::from_vec(&[2], vec![0.0, 0.0], false);
        let x = Tensor::from_vec(&[1, 2], vec![3.0, 3.0], false);
        let y = layer_norm(&x, &gain, &bias, 1e-5);
        assert!(y.to_vec().iter().all(|v| v.abs() < 1e-9));

        let x = Tensor::from_vec(&[1, 2], vec![1.0, -1.0], false);
        let y = layer_norm(&x, &gain, &bias, 1e-5).to_vec();
        assert!((y[0] - 1.0).abs() < 1e-4);
        assert!((y[1] + 1.0).abs() < 1e-4);
    }

    #[test]
    fn dropout_modes() {
        let mut rng = Rng::new(0, 0);
        let x = Tensor::from_vec(&[100], vec![1.0; 100], false);
        let eval = dropout(&x, 0.25, &mut rng, false);
        assert_eq!(eval.to_vec(), x.to_vec());
        let zero = dropout(&x, 0.0, &mut rng, true);
        assert_eq!(zero.to_vec(), x.to_vec());
    }

    #[test]
    fn dropout_keep_rate() {
        let n = 100_000;
        let mut rng = Rng::new(42, 0);
        let x = Tensor::from_vec(&[n], vec![1.0; n], false);
        let y = dropout(&x, 0.25, &mut rng, true);
        let kept = y.to_vec().iter().filter(|v| **v != 0.0).count();
        let rate = kept as f64 / n as f64;
        assert!((rate - 0.75).abs() < 0.01, "keep rate {rate}");
        // Surviving elements are scaled by 1/(1-p).
        let v = y.to_vec().iter().cloned().fold(0.0f64, f64::max);
        assert!((v - 1.0 / 0.75).abs() < 1e-12);
    }

    #[test]
    fn permute_roundtrip() {
        let x = Tensor::from_vec(&[2, 3, 4], (0..24).map(|v| v as f64).collect(), false);
        let y = permute(&x, &[2, 0, 1]);
        assert_eq!(y.shape(), &[4, 2, 3]);
        let z = permute(&y, &[1, 2, 0]);
        assert_eq!(z.to_vec(), x.to_vec());
    }

    #[test]
    fn mean_pool_values() {
        let x = Tensor::from_vec(&[1, 2, 3], vec![1.0, 2.0, 3.0, 5.0, 6.0, 7.0], false);
        assert_eq!(mean_pool_seq(&x).to_vec(), vec![3.0, 4.0, 5.0]);
    }

    #[test]
    fn concat_splits_gradient() {
        let a = Tensor::from_vec(&[2, 2], vec![1.0; 4], true);
        let b = Tensor::from_vec(&[2, 1], vec![2.0; 2], true);
        let c = concat_last(&a, &b);
        assert_eq!(c.shape(), &[2, 3]);
        assert_eq!(c.to_vec(), vec![1.0, 1.0, 2.0, 1.0, 1.0, 2.0]);
        let loss = scale(&mean_pool_like(&c), 1.0);
        loss.backward();
        assert!(a.grad().is_some() && b.grad().is_some());
    }

    fn mean_pool_like(x: &Tensor) -> Tensor {
        // Quick scalar reduction for tests: mean of all entries.
        let n = x.numel() as f64;
        let s: f64 = x.data().iter().sum();
        let px = x.clone();
        Tensor::from_op(vec![1], vec![s / n], vec![x.clone()], move |g, _| {
            px.with_grad_mut(|xg| {
                for v in xg.iter_mut() {
                    *v += g[0] / n;
                }
            });
        })
    }
}
