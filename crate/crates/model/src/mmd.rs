//! Squared maximum mean discrepancy with a Gaussian RBF kernel, and the
//! combined training objective.
//!
//! The estimator is the biased V-statistic, diagonal terms included:
//!
//! ```text
//! MMD^2(X, X') = (1/n^2) sum_ij k(x_i, x_j)
//!              + (1/n^2) sum_ij k(x'_i, x'_j)
//!              - (2/n^2) sum_ij k(x_i, x'_j)
//! ```
//!
//! with `k(x, y) = exp(-beta ||x - y||^2)`. The kernel bandwidth either comes
//! from explicit configuration or from the median heuristic over the pooled
//! batch; the heuristic bandwidth is treated as a constant by the gradient.

use ecgdk_nn::{add, scale, Tensor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MmdError {
    #[error("mmd batches must be non-empty")]
    EmptyBatch,
    #[error("mmd dimension mismatch: {x} vs {y}")]
    DimMismatch { x: usize, y: usize },
}

/// Kernel bandwidth selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMode {
    Explicit(f64),
    MedianHeuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmdConfig {
    pub beta: BetaMode,
    pub lambda_mmd: f64,
}

impl Default for MmdConfig {
    fn default() -> Self {
        Self {
            beta: BetaMode::MedianHeuristic,
            lambda_mmd: 1.0,
        }
    }
}

/// `k(x, y) = exp(-beta ||x - y||^2)`; symmetric, in (0, 1].
pub fn rbf_kernel(x: &[f64], y: &[f64], beta: f64) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let d2: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum();
    (-beta * d2).exp()
}

/// Median-heuristic bandwidth: `beta = 1 / (2 m^2)` where `m` is the median
/// pairwise Euclidean distance over the pooled rows (self-pairs excluded).
/// Falls back to 1 when the median distance is zero.
pub fn median_heuristic_beta(pooled: &[f64], n: usize, d: usize) -> f64 {
    assert_eq!(pooled.len(), n * d, "pooled rows {n} x {d}");
    if n < 2 {
        return 1.0;
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let mut d2 = 0.0;
            for c in 0..d {
                let diff = pooled[i * d + c] - pooled[j * d + c];
                d2 += diff * diff;
            }
            dists.push(d2.sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = if dists.len() % 2 == 1 {
        dists[dists.len() / 2]
    } else {
        0.5 * (dists[dists.len() / 2 - 1] + dists[dists.len() / 2])
    };
    if m > 0.0 {
        1.0 / (2.0 * m * m)
    } else {
        1.0
    }
}

/// Plain-f64 evaluation of the squared MMD over `[n, d]` row-major batches.
pub fn mmd2_value(x: &[f64], y: &[f64], n: usize, d: usize, beta: f64) -> f64 {
    let mut kxx = 0.0;
    let mut kyy = 0.0;
    let mut kxy = 0.0;
    for i in 0..n {
        for j in 0..n {
            kxx += rbf_kernel(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d], beta);
            kyy += rbf_kernel(&y[i * d..(i + 1) * d], &y[j * d..(j + 1) * d], beta);
            kxy += rbf_kernel(&x[i * d..(i + 1) * d], &y[j * d..(j + 1) * d], beta);
        }
    }
    let n2 = (n * n) as f64;
    (kxx + kyy - 2.0 * kxy) / n2
}

/// Differentiable squared MMD between two `[n, d]` embedding batches.
/// Unequal batch sizes are truncated to the smaller one (the estimator
/// assumes equal `n`); callers log when that happens.
pub fn mmd2(x: &Tensor, y: &Tensor, beta: f64) -> Result<Tensor, MmdError> {
    let (xs, ys) = (x.shape().to_vec(), y.shape().to_vec());
    if xs.len() != 2 || ys.len() != 2 {
        return Err(MmdError::DimMismatch {
            x: xs.len(),
            y: ys.len(),
        });
    }
    if xs[1] != ys[1] {
        return Err(MmdError::DimMismatch { x: xs[1], y: ys[1] });
    }
    let n = xs[0].min(ys[0]);
    if n == 0 {
        return Err(MmdError::EmptyBatch);
    }
    let d = xs[1];

    let value = mmd2_value(&x.data()[..n * d], &y.data()[..n * d], n, d, beta);
    let (px, py) = (x.clone(), y.clone());
    Ok(Tensor::from_op(
        vec![1],
        vec![value],
        vec![x.clone(), y.clone()],
        move |g, _| {
            let g0 = g[0];
            let xd = px.data();
            let yd = py.data();
            let n2 = (n * n) as f64;
            let coef = 4.0 * beta / n2 * g0;
            // d/dx_t = (-4 beta / n^2) sum_j kxx(t,j)(x_t - x_j)
            //        + ( 4 beta / n^2) sum_j kxy(t,j)(x_t - y_j)
            if px.requires_grad() {
                px.with_grad_mut(|xg| {
                    for t in 0..n {
                        let xt = &xd[t * d..(t + 1) * d];
                        for j in 0..n {
                            let xj = &xd[j * d..(j + 1) * d];
                            let k = rbf_kernel(xt, xj, beta);
                            for c in 0..d {
                                xg[t * d + c] -= coef * k * (xt[c] - xj[c]);
                            }
                            let yj = &yd[j * d..(j + 1) * d];
                            let k = rbf_kernel(xt, yj, beta);
                            for c in 0..d {
                                xg[t * d + c] += coef * k * (xt[c] - yj[c]);
                            }
                        }
                    }
                });
            }
            if py.requires_grad() {
                py.with_grad_mut(|yg| {
                    for t in 0..n {
                        let yt = &yd[t * d..(t + 1) * d];
                        for j in 0..n {
                            let yj = &yd[j * d..(j + 1) * d];
                            let k = rbf_kernel(yt, yj, beta);
                            for c in 0..d {
                                yg[t * d + c] -= coef * k * (yt[c] - yj[c]);
                            }
                            let xj = &xd[j * d..(j + 1) * d];
                            let k = rbf_kernel(yt, xj, beta);
                            for c in 0..d {
                                yg[t * d + c] += coef * k * (yt[c] - xj[c]);
                            }
                        }
                    }
                });
            }
        },
    ))
}

/// Resolves the kernel bandwidth for a batch pair.
pub fn resolve_beta(cfg: &MmdConfig, x: &Tensor, y: &Tensor) -> f64 {
    match cfg.beta {
        BetaMode::Explicit(b) => b,
        BetaMode::MedianHeuristic => {
            let d = x.shape()[1];
            let n = x.shape()[0].min(y.shape()[0]);
            let mut pooled = Vec::with_capacity(2 * n * d);
            pooled.extend_from_slice(&x.data()[..n * d]);
            pooled.extend_from_slice(&y.data()[..n * d]);
            median_heuristic_beta(&pooled, 2 * n, d)
        }
    }
}

/// `L_total = L_task + lambda * MMD^2(X, X')`. With `lambda == 0` the task
/// loss tensor is returned as-is (bit-exact identity).
pub fn total_loss(
    task_loss: &Tensor,
    source_emb: &Tensor,
    target_emb: &Tensor,
    cfg: &MmdConfig,
) -> Result<(Tensor, f64), MmdError> {
    if cfg.lambda_mmd == 0.0 {
        return Ok((task_loss.clone(), 0.0));
    }
    let beta = resolve_beta(cfg, source_emb, target_emb);
    let mmd = mmd2(source_emb, target_emb, beta)?;
    let value = mmd.item();
    Ok((add(task_loss, &scale(&mmd, cfg.lambda_mmd)), value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ecgdk_nn::Rng;

    #[test]
    fn kernel_basics() {
        assert_eq!(rbf_kernel(&[1.5, -2.0], &[1.5, -2.0], 3.0), 1.0);
        let v = rbf_kernel(&[0.0], &[1.0], 1.0);
        assert!((v - (-1.0f64).exp()).abs() < 1e-12);
        let mut rng = Rng::new(4, 0);
        for _ in 0..20 {
            let a: Vec<f64> = (0..5).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
            let b: Vec<f64> = (0..5).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
            assert_eq!(rbf_kernel(&a, &b, 0.7), rbf_kernel(&b, &a, 0.7));
        }
    }

    #[test]
    fn identical_batches_give_zero() {
        let mut rng = Rng::new(1, 0);
        let data: Vec<f64> = (0..8 * 3).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let x = Tensor::from_vec(&[8, 3], data.clone(), false);
        let y = Tensor::from_vec(&[8, 3], data, false);
        let v = mmd2(&x, &y, 0.5).unwrap().item();
        assert!(v.abs() < 1e-9, "mmd2(X,X) = {v}");
    }

    #[test]
    fn scalar_hand_value() {
        let x = Tensor::from_vec(&[1, 1], vec![0.0], false);
        let y = Tensor::from_vec(&[1, 1], vec![1.0], false);
        let v = mmd2(&x, &y, 1.0).unwrap().item();
        let want = 2.0 - 2.0 * (-1.0f64).exp();
        assert!((v - want).abs() < 1e-9, "{v} vs {want}");
        assert!((want - 1.26424).abs() < 1e-5);
    }

    #[test]
    fn symmetric_and_nonnegative() {
        let mut rng = Rng::new(2, 0);
        for _ in 0..20 {
            let a: Vec<f64> = (0..6 * 4).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
            let b: Vec<f64> = (0..6 * 4).map(|_| rng.uniform_in(-1.0, 3.0)).collect();
            let x = Tensor::from_vec(&[6, 4], a, false);
            let y = Tensor::from_vec(&[6, 4], b, false);
            let xy = mmd2(&x, &y, 0.3).unwrap().item();
            let yx = mmd2(&y, &x, 0.3).unwrap().item();
            assert!((xy - yx).abs() < 1e-9);
            assert!(xy >= -1e-9);
            assert!(xy <= 2.0);
        }
    }

    #[test]
    fn same_distribution_below_shifted() {
        let n = 256;
        let mut ordered = 0;
        for seed in 0..50u64 {
            let mut rng = Rng::new(seed, 5);
            let draw = |rng: &mut Rng, shift: f64| -> Vec<f64> {
                (0..n).map(|_| rng.normal() + shift).collect()
            };
            let a = Tensor::from_vec(&[n, 1], draw(&mut rng, 0.0), false);
            let b = Tensor::from_vec(&[n, 1], draw(&mut rng, 0.0), false);
            let c = Tensor::from_vec(&[n, 1], draw(&mut rng, 3.0), false);
            let same = mmd2(&a, &b, 0.5).unwrap().item();
            let shifted = mmd2(&a, &c, 0.5).unwrap().item();
            if same < shifted {
                ordered += 1;
            }
        }
        assert_eq!(ordered, 50, "same-vs-shifted ordering failed");
    }

    #[test]
    fn median_heuristic_examples() {
        // Pooled points {0, 2}: one pair at distance 2, beta = 1/8.
        assert!((median_heuristic_beta(&[0.0, 2.0], 2, 1) - 0.125).abs() < 1e-12);
        // Degenerate: all identical points fall back to 1.
        assert_eq!(median_heuristic_beta(&[3.0, 3.0, 3.0], 3, 1), 1.0);
        // Scaling all points by 10 scales the median by 10.
        let base = [0.0, 1.0, 3.0, 7.0];
        let scaled: Vec<f64> = base.iter().map(|v| v * 10.0).collect();
        let b1 = median_heuristic_beta(&base, 4, 1);
        let b2 = median_heuristic_beta(&scaled, 4, 1);
        assert!((b2 - b1 / 100.0).abs() < 1e-12);
    }

    #[test]
    fn total_loss_compositions() {
        let task = Tensor::from_vec(&[1], vec![3f64.ln()], false);
        let x = Tensor::from_vec(&[1, 1], vec![0.0], true);
        let y = Tensor::from_vec(&[1, 1], vec![1.0], false);

        let zero_cfg = MmdConfig {
            beta: BetaMode::Explicit(1.0),
            lambda_mmd: 0.0,
        };
        let (t, m) = total_loss(&task, &x, &y, &zero_cfg).unwrap();
        assert_eq!(t.item(), task.item());
        assert_eq!(m, 0.0);

        let cfg = MmdConfig {
            beta: BetaMode::Explicit(1.0),
            lambda_mmd: 1.0,
        };
        let (t, _) = total_loss(&task, &x, &y, &cfg).unwrap();
        let want = 3f64.ln() + 2.0 - 2.0 * (-1.0f64).exp();
        assert!((t.item() - want).abs() < 1e-9);
        assert!((t.item() - 2.36284).abs() < 1e-4);
    }

    #[test]
    fn lambda_scales_embedding_gradient() {
        let task = Tensor::from_vec(&[1], vec![1.0], false);
        let grad_for = |lambda: f64| -> Vec<f64> {
            let x = Tensor::from_vec(&[2, 2], vec![0.1, 0.2, -0.3, 0.4], true);
            let y = Tensor::from_vec(&[2, 2], vec![1.0, -0.5, 0.2, 0.9], false);
            let cfg = MmdConfig {
                beta: BetaMode::Explicit(0.7),
                lambda_mmd: lambda,
            };
            let (t, _) = total_loss(&task, &x, &y, &cfg).unwrap();
            t.backward();
            x.grad().unwrap()
        };
        let g1 = grad_for(1.0);
        let g05 = grad_for(0.5);
        for (a, b) in g1.iter().zip(&g05) {
            assert!((0.5 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn errors_on_degenerate_input() {
        let x = Tensor::from_vec(&[0, 3], vec![], false);
        let y = Tensor::from_vec(&[0, 3], vec![], false);
        assert!(matches!(mmd2(&x, &y, 1.0), Err(MmdError::EmptyBatch)));
        let x = Tensor::from_vec(&[2, 3], vec![0.0; 6], false);
        let y = Tensor::from_vec(&[2, 4], vec![0.0; 8], false);
        assert!(matches!(mmd2(&x, &y, 1.0), Err(MmdError::DimMismatch { .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 1e-4;
        for seed in 0..10u64 {
            let mut rng = Rng::new(seed, 8);
            let (n, d) = (3usize, 2usize);
            let x0: Vec<f64> = (0..n * d).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let y0: Vec<f64> = (0..n * d).map(|_| rng.uniform_in(-0.5, 1.5)).collect();
            let beta = 0.8;

            let x = Tensor::from_vec(&[n, d], x0.clone(), true);
            let y = Tensor::from_vec(&[n, d], y0.clone(), true);
            let loss = mmd2(&x, &y, beta).unwrap();
            loss.backward();
            let gx = x.grad().unwrap();
            let gy = y.grad().unwrap();

            let eval = |xv: &[f64], yv: &[f64]| mmd2_value(xv, yv, n, d, beta);
            let mut xp = x0.clone();
            for i in 0..n * d {
                let keep = xp[i];
                xp[i] = keep + h;
                let fp = eval(&xp, &y0);
                xp[i] = keep - h;
                let fm = eval(&xp, &y0);
                xp[i] = keep;
                let fd = (fp - fm) / (2.0 * h);
                let tol = 1e-6f64.max(1e-4 * fd.abs().max(gx[i].abs()));
                assert!((gx[i] - fd).abs() <= tol, "x[{i}]: {} vs {fd}", gx[i]);
            }
            let mut yp = y0.clone();
            for i in 0..n * d {
                let keep = yp[i];
                yp[i] = keep + h;
                let fp = eval(&x0, &yp);
                yp[i] = keep - h;
                let fm = eval(&x0, &yp);
                yp[i] = keep;
                let fd = (fp - fm) / (2.0 * h);
                let tol = 1e-6f64.max(1e-4 * fd.abs().max(gy[i].abs()));
                assert!((gy[i] - fd).abs() <= tol, "y[{i}]: {} vs {fd}", gy[i]);
            }
        }
    }
}
