//! Parameterized layers: affine projections, layer normalization, and 1-D
//! convolutions, with Kaiming-uniform weight init and zeroed biases.

use crate::conv::conv1d;
use crate::ops::{layer_norm, linear};
use crate::rng::Rng;
use crate::tensor::Tensor;

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// `y = x w + b`, weight stored `[d_in, d_out]`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: Tensor,
    pub b: Tensor,
}

impl Linear {
    pub fn new(d_in: usize, d_out: usize, rng: &mut Rng) -> Self {
        let mut w = vec![0.0f64; d_in * d_out];
        rng.fill_kaiming_uniform(&mut w, d_in);
        Self {
            w: Tensor::from_vec(&[d_in, d_out], w, true),
            b: Tensor::zeros(&[d_out], true),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        linear(x, &self.w, &self.b)
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        out.push((format!("{prefix}.w"), self.w.clone()));
        out.push((format!("{prefix}.b"), self.b.clone()));
    }
}

/// Learnable layer norm over the last dimension (gain 1, bias 0 at init).
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gain: Tensor,
    pub bias: Tensor,
}

impl LayerNorm {
    pub fn new(d: usize) -> Self {
        Self {
            gain: Tensor::from_vec(&[d], vec![1.0; d], true),
            bias: Tensor::zeros(&[d], true),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        layer_norm(x, &self.gain, &self.bias, LAYER_NORM_EPS)
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        out.push((format!("{prefix}.gain"), self.gain.clone()));
        out.push((format!("{prefix}.bias"), self.bias.clone()));
    }
}

/// 1-D convolution layer, weight `[ch_out, ch_in, k]`.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub w: Tensor,
    pub b: Tensor,
    pub stride: usize,
    pub padding: usize,
}

impl Conv1d {
    pub fn new(ch_in: usize, ch_out: usize, k: usize, stride: usize, padding: usize, rng: &mut Rng) -> Self {
        let mut w = vec![0.0f64; ch_out * ch_in * k];
        rng.fill_kaiming_uniform(&mut w, ch_in * k);
        Self {
            w: Tensor::from_vec(&[ch_out, ch_in, k], w, true),
            b: Tensor::zeros(&[ch_out], true),
            stride,
            padding,
        }
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        conv1d(x, &self.w, &self.b, self.stride, self.padding)
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        out.push((format!("{prefix}.w"), self.w.clone()));
        out.push((format!("{prefix}.b"), self.b.clone()));
    }
}
