//! f64 matrix micro-kernels used by the tensor ops.
//!
//! All three variants accumulate into the output (`c += ...`) and use a fixed
//! summation pattern, so results are bit-reproducible run to run. Inner loops
//! are written around `mul_add` over contiguous rows to let the compiler emit
//! fused multiply-add vector code.

/// Column-block width; keeps one block of B rows plus the C row in cache.
const NB: usize = 512;

/// `c[m,n] += a[m,k] * b[k,n]`, all row-major.
pub fn matmul_nn_acc(c: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let mut jb = 0;
    while jb < n {
        let nb = NB.min(n - jb);
        for i in 0..m {
            let a_row = &a[i * k..(i + 1) * k];
            let c_row = &mut c[i * n + jb..i * n + jb + nb];
            let mut kk = 0;
            while kk + 4 <= k {
                let a0 = a_row[kk];
                let a1 = a_row[kk + 1];
                let a2 = a_row[kk + 2];
                let a3 = a_row[kk + 3];
                let b0 = &b[kk * n + jb..kk * n + jb + nb];
                let b1 = &b[(kk + 1) * n + jb..(kk + 1) * n + jb + nb];
                let b2 = &b[(kk + 2) * n + jb..(kk + 2) * n + jb + nb];
                let b3 = &b[(kk + 3) * n + jb..(kk + 3) * n + jb + nb];
                for j in 0..nb {
                    let t0 = a0.mul_add(b0[j], c_row[j]);
                    let t1 = a1.mul_add(b1[j], t0);
                    let t2 = a2.mul_add(b2[j], t1);
                    c_row[j] = a3.mul_add(b3[j], t2);
                }
                kk += 4;
            }
            while kk < k {
                let av = a_row[kk];
                let b_row = &b[kk * n + jb..kk * n + jb + nb];
                for j in 0..nb {
                    c_row[j] = av.mul_add(b_row[j], c_row[j]);
                }
                kk += 1;
            }
        }
        jb += nb;
    }
}

/// `c[m,n] += a^T * b` where `a` is `[k,m]` and `b` is `[k,n]`, row-major.
pub fn matmul_tn_acc(c: &mut [f64], a: &[f64], b: &[f64], k: usize, m: usize, n: usize) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let mut jb = 0;
    while jb < n {
        let nb = NB.min(n - jb);
        for i in 0..m {
            let c_row = &mut c[i * n + jb..i * n + jb + nb];
            let mut kk = 0;
            while kk + 4 <= k {
                let a0 = a[kk * m + i];
                let a1 = a[(kk + 1) * m + i];
                let a2 = a[(kk + 2) * m + i];
                let a3 = a[(kk + 3) * m + i];
                let b0 = &b[kk * n + jb..kk * n + jb + nb];
                let b1 = &b[(kk + 1) * n + jb..(kk + 1) * n + jb + nb];
                let b2 = &b[(kk + 2) * n + jb..(kk + 2) * n + jb + nb];
                let b3 = &b[(kk + 3) * n + jb..(kk + 3) * n + jb + nb];
                for j in 0..nb {
                    let t0 = a0.mul_add(b0[j], c_row[j]);
                    let t1 = a1.mul_add(b1[j], t0);
                    let t2 = a2.mul_add(b2[j], t1);
                    c_row[j] = a3.mul_add(b3[j], t2);
                }
                kk += 4;
            }
            while kk < k {
                let av = a[kk * m + i];
                let b_row = &b[kk * n + jb..kk * n + jb + nb];
                for j in 0..nb {
                    c_row[j] = av.mul_add(b_row[j], c_row[j]);
                }
                kk += 1;
            }
        }
        jb += nb;
    }
}

/// `c[m,n] += a * b^T` where `a` is `[m,k]` and `b` is `[n,k]`, row-major.
/// Each output element is a contiguous dot product over `k`.
pub fn matmul_nt_acc(c: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let b_row = &b[j * k..(j + 1) * k];
            c[i * n + j] += dot(a_row, b_row);
        }
    }
}

/// Fixed eight-lane dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let k = a.len();
    let mut acc = [0.0f64; 8];
    let chunks = k / 8;
    for c in 0..chunks {
        let base = c * 8;
        for l in 0..8 {
            acc[l] = a[base + l].mul_add(b[base + l], acc[l]);
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..k {
        tail = a[i].mul_add(b[i], tail);
    }
    (((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))) + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_nn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for kk in 0..k {
                for j in 0..n {
                    c[i * n + j] += a[i * k + kk] * b[kk * n + j];
                }
            }
        }
        c
    }

    fn arb(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = crate::rng::Rng::new(seed, 0);
        (0..len).map(|_| rng.uniform_in(-1.0, 1.0)).collect()
    }

    #[test]
    fn variants_agree_with_naive() {
        for &(m, k, n) in &[(3usize, 5usize, 7usize), (8, 8, 8), (13, 21, 34), (1, 9, 1)] {
            let a = arb(m * k, 1);
            let b = arb(k * n, 2);
            let want = naive_nn(&a, &b, m, k, n);

            let mut c = vec![0.0; m * n];
            matmul_nn_acc(&mut c, &a, &b, m, k, n);
            for (x, y) in c.iter().zip(&want) {
                assert!((x - y).abs() < 1e-12);
            }

            // a^T path: store a transposed as [k, m].
            let mut at = vec![0.0; k * m];
            for i in 0..m {
                for kk in 0..k {
                    at[kk * m + i] = a[i * k + kk];
                }
            }
            let mut c = vec![0.0; m * n];
            matmul_tn_acc(&mut c, &at, &b, k, m, n);
            for (x, y) in c.iter().zip(&want) {
                assert!((x - y).abs() < 1e-12);
            }

            // b^T path: store b transposed as [n, k].
            let mut bt = vec![0.0; n * k];
            for kk in 0..k {
                for j in 0..n {
                    bt[j * k + kk] = b[kk * n + j];
                }
            }
            let mut c = vec![0.0; m * n];
            matmul_nt_acc(&mut c, &a, &bt, m, k, n);
            for (x, y) in c.iter().zip(&want) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn accumulation_is_reproducible() {
        let a = arb(64 * 100, 3);
        let b = arb(100 * 64, 4);
        let mut c1 = vec![0.0; 64 * 64];
        let mut c2 = vec![0.0; 64 * 64];
        matmul_nn_acc(&mut c1, &a, &b, 64, 100, 64);
        matmul_nn_acc(&mut c2, &a, &b, 64, 100, 64);
        assert_eq!(c1, c2);
    }
}
