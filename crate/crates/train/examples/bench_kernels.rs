use ecgdk_nn::kernels::{matmul_nn_acc, matmul_nt_acc, matmul_tn_acc};
use ecgdk_nn::ops::softmax_row;
use std::time::Instant;

fn main() {
    // conv2-like GEMM: [128, 192] x [192, 998]
    let (m, k, n) = (128, 192, 998);
    let a = vec![0.5f64; m * k];
    let b = vec![0.25f64; k * n];
    let mut c = vec![0.0f64; m * n];
    let t = Instant::now();
    let reps = 50;
    for _ in 0..reps {
        c.iter_mut().for_each(|v| *v = 0.0);
        matmul_nn_acc(&mut c, &a, &b, m, k, n);
    }
    let el = t.elapsed().as_secs_f64();
    let gflops = (2.0 * (m * k * n) as f64 * reps as f64) / el / 1e9;
    println!("nn [128x192x998]: {gflops:.2} GFLOP/s");

    // scores bmm: nt with k=8: [499,8] x [499,8]^T
    let (m, kk, n) = (499, 8, 499);
    let a = vec![0.5f64; m * kk];
    let b = vec![0.25f64; n * kk];
    let mut c = vec![0.0f64; m * n];
    let t = Instant::now();
    let reps = 200;
    for _ in 0..reps {
        c.iter_mut().for_each(|v| *v = 0.0);
        matmul_nt_acc(&mut c, &a, &b, m, kk, n);
    }
    let el = t.elapsed().as_secs_f64();
    let gflops = (2.0 * (m * kk * n) as f64 * reps as f64) / el / 1e9;
    println!("nt [499x8x499]: {gflops:.2} GFLOP/s");

    // attnV: nn [499,499] x [499,8]
    let (m, kk, n) = (499, 499, 8);
    let a = vec![0.5f64; m * kk];
    let b = vec![0.25f64; kk * n];
    let mut c = vec![0.0f64; m * n];
    let t = Instant::now();
    for _ in 0..reps {
        c.iter_mut().for_each(|v| *v = 0.0);
        matmul_nn_acc(&mut c, &a, &b, m, kk, n);
    }
    let el = t.elapsed().as_secs_f64();
    let gflops = (2.0 * (m * kk * n) as f64 * reps as f64) / el / 1e9;
    println!("nn [499x499x8]: {gflops:.2} GFLOP/s");

    // tn: dW-like [16000, 32]^T x [16000, 32]
    let (kk, m, n) = (7984, 32, 32);
    let a = vec![0.5f64; kk * m];
    let b = vec![0.25f64; kk * n];
    let mut c = vec![0.0f64; m * n];
    let t = Instant::now();
    for _ in 0..reps {
        c.iter_mut().for_each(|v| *v = 0.0);
        matmul_tn_acc(&mut c, &a, &b, kk, m, n);
    }
    let el = t.elapsed().as_secs_f64();
    let gflops = (2.0 * (m * kk * n) as f64 * reps as f64) / el / 1e9;
    println!("tn [7984: 32x32]: {gflops:.2} GFLOP/s");

    // softmax rows 499-wide
    let row = vec![0.3f64; 499];
    let mut out = vec![0.0f64; 499];
    let t = Instant::now();
    let reps = 200_000;
    for _ in 0..reps {
        softmax_row(&row, &mut out);
    }
    let el = t.elapsed().as_secs_f64();
    println!("softmax 499-row: {:.1} ns/elem ({:.3} s for 64M rows-equiv)", el / reps as f64 / 499.0 * 1e9, el / reps as f64 * 64.0 * 499.0 * 4.0);
}
