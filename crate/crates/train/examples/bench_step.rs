use ecgdk_model::{Model, ModelConfig};
use ecgdk_nn::{cross_entropy, Rng, Tensor};
use ecgdk_train::{adam_step, AdamState};
use std::time::Instant;

fn main() {
    let cfg = ModelConfig::default();
    let model = Model::new(cfg.clone(), 0).unwrap();
    let params = model.params();
    let mut adam = AdamState::new(&params);
    let mut rng = Rng::new(1, 0);
    let b = 16;
    let ecg: Vec<f64> = (0..b * 1000).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
    let feats: Vec<f64> = (0..b * 7).map(|_| rng.uniform_in(0.0, 1.5)).collect();
    let ecg = Tensor::from_vec(&[b, 1, 1000], ecg, false);
    let feats = Tensor::from_vec(&[b, 1, 7], feats, false);
    let targets: Vec<usize> = (0..b).map(|i| i % 3).collect();

    // Warm up.
    let mut drng = Rng::new(0, 1);
    for _ in 0..2 {
        model.zero_grads();
        let out = model.forward(&ecg, Some(&feats), true, &mut drng).unwrap();
        let loss = cross_entropy(&out.logits, &targets);
        loss.backward();
        adam_step(&params, &mut adam, 1e-4, 1e-4, 0.9, 0.98, 1e-9);
    }
    let t0 = Instant::now();
    let n = 5;
    for _ in 0..n {
        model.zero_grads();
        let out = model.forward(&ecg, Some(&feats), true, &mut drng).unwrap();
        let loss = cross_entropy(&out.logits, &targets);
        loss.backward();
        adam_step(&params, &mut adam, 1e-4, 1e-4, 0.9, 0.98, 1e-9);
    }
    let per_step = t0.elapsed().as_secs_f64() / n as f64;
    println!("train step (batch 16): {per_step:.3} s");

    // Eval throughput.
    let t0 = Instant::now();
    for _ in 0..3 {
        let mut r = Rng::new(0, 0);
        let _ = ecgdk_nn::no_grad(|| model.forward(&ecg, Some(&feats), false, &mut r).unwrap());
    }
    println!("eval forward (batch 16): {:.3} s", t0.elapsed().as_secs_f64() / 3.0);
}
