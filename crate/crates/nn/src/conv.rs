//! 1-D convolution (cross-correlation convention) and max pooling.

use crate::kernels::{matmul_nn_acc, matmul_nt_acc, matmul_tn_acc};
use crate::tensor::Tensor;

/// Output length of a conv/pool window sweep.
pub fn conv_out_len(len: usize, k: usize, stride: usize, padding: usize) -> usize {
    (len + 2 * padding - k) / stride + 1
}

fn im2col(x: &[f64], ci: usize, l: usize, k: usize, stride: usize, padding: usize, col: &mut [f64]) {
    let lo = conv_out_len(l, k, stride, padding);
    debug_assert_eq!(col.len(), ci * k * lo);
    for c in 0..ci {
        let xrow = &x[c * l..(c + 1) * l];
        for kk in 0..k {
            let dst = &mut col[(c * k + kk) * lo..(c * k + kk + 1) * lo];
            for (o, slot) in dst.iter_mut().enumerate() {
                let pos = o * stride + kk;
                *slot = if pos < padding || pos - padding >= l {
                    0.0
                } else {
                    xrow[pos - padding]
                };
            }
        }
    }
}

/// `x: [batch, ch_in, len]`, `w: [ch_out, ch_in, k]`, `b: [ch_out]`.
/// Output `[batch, ch_out, out_len]` with
/// `out_len = (len + 2 padding - k) / stride + 1`.
pub fn conv1d(x: &Tensor, w: &Tensor, b: &Tensor, stride: usize, padding: usize) -> Tensor {
    let xs = x.shape().to_vec();
    let ws = w.shape().to_vec();
    assert!(
        xs.len() == 3 && ws.len() == 3 && xs[1] == ws[1] && b.shape() == [ws[0]],
        "conv1d: x {xs:?} w {ws:?} b {:?}",
        b.shape()
    );
    assert!(stride > 0, "conv1d: stride must be positive");
    let (batch, ci, l) = (xs[0], xs[1], xs[2]);
    let (co, k) = (ws[0], ws[2]);
    assert!(
        k <= l + 2 * padding,
        "conv1d: kernel {k} longer than padded input {}",
        l + 2 * padding
    );
    let lo = conv_out_len(l, k, stride, padding);
    let cik = ci * k;

    let mut data = vec![0.0f64; batch * co * lo];
    {
        let xd = x.data();
        let wd = w.data();
        let bd = b.data();
        let mut col = vec![0.0f64; cik * lo];
        for bi in 0..batch {
            im2col(&xd[bi * ci * l..(bi + 1) * ci * l], ci, l, k, stride, padding, &mut col);
            let out = &mut data[bi * co * lo..(bi + 1) * co * lo];
            matmul_nn_acc(out, &wd, &col, co, cik, lo);
            for c in 0..co {
                let bias = bd[c];
                for v in out[c * lo..(c + 1) * lo].iter_mut() {
                    *v += bias;
                }
            }
        }
    }

    let (px, pw, pb) = (x.clone(), w.clone(), b.clone());
    Tensor::from_op(
        vec![batch, co, lo],
        data,
        vec![x.clone(), w.clone(), b.clone()],
        move |g, _| {
            let xd = px.data();
            let wd = pw.data();
            let mut col = vec![0.0f64; cik * lo];

            if pb.requires_grad() {
                pb.with_grad_mut(|bg| {
                    for bi in 0..batch {
                        for c in 0..co {
                            bg[c] += g[(bi * co + c) * lo..(bi * co + c + 1) * lo]
                                .iter()
                                .sum::<f64>();
                        }
                    }
                });
            }
            if pw.requires_grad() {
                pw.with_grad_mut(|wg| {
                    for bi in 0..batch {
                        im2col(&xd[bi * ci * l..(bi + 1) * ci * l], ci, l, k, stride, padding, &mut col);
                        let gb = &g[bi * co * lo..(bi + 1) * co * lo];
                        matmul_nt_acc(wg, gb, &col, co, lo, cik);
                    }
                });
            }
            if px.requires_grad() {
                px.with_grad_mut(|xg| {
                    let mut dcol = vec![0.0f64; cik * lo];
                    for bi in 0..batch {
                        dcol.iter_mut().for_each(|v| *v = 0.0);
                        let gb = &g[bi * co * lo..(bi + 1) * co * lo];
                        matmul_tn_acc(&mut dcol, &wd, gb, co, cik, lo);
                        let xgb = &mut xg[bi * ci * l..(bi + 1) * ci * l];
                        for c in 0..ci {
                            for kk in 0..k {
                                let src = &dcol[(c * k + kk) * lo..(c * k + kk + 1) * lo];
                                for (o, v) in src.iter().enumerate() {
                                    let pos = o * stride + kk;
                                    if pos >= padding && pos - padding < l {
                                        xgb[c * l + pos - padding] += v;
                                    }
                                }
                            }
                        }
                    }
                });
            }
        },
    )
}

/// Max pooling over the last dimension; gradient routes to the argmax
/// (first index on ties).
pub fn maxpool1d(x: &Tensor, k: usize, stride: usize) -> Tensor {
    let xs = x.shape().to_vec();
    assert!(xs.len() == 3, "maxpool1d: expected 3-D input, got {xs:?}");
    assert!(stride > 0 && k > 0, "maxpool1d: k and stride must be positive");
    let (batch, ch, l) = (xs[0], xs[1], xs[2]);
    assert!(k <= l, "maxpool1d: window {k} longer than input {l}");
    let lo = (l - k) / stride + 1;

    let xd = x.data();
    let mut data = vec![0.0f64; batch * ch * lo];
    let mut argmax = vec![0u32; batch * ch * lo];
    for r in 0..batch * ch {
        let row = &xd[r * l..(r + 1) * l];
        for o in 0..lo {
            let base = o * stride;
            let mut best = row[base];
            let mut best_i = base;
            for i in base + 1..base + k {
                if row[i] > best {
                    best = row[i];
                    best_i = i;
                }
            }
            data[r * lo + o] = best;
            argmax[r * lo + o] = best_i as u32;
        }
    }
    drop(xd);

    let argmax = std::rc::Rc::new(argmax);
    let px = x.clone();
    Tensor::from_op(vec![batch, ch, lo], data, vec![x.clone()], move |g, _| {
        if px.requires_grad() {
            px.with_grad_mut(|xg| {
                for r in 0..batch * ch {
                    for o in 0..lo {
                        xg[r * l + argmax[r * lo + o] as usize] += g[r * lo + o];
                    }
                }
            });
        }
    })
}
