//! Minimal dense-tensor engine with reverse-mode autodiff and the neural
//! building blocks for 1-D signal models: convolution, pooling, affine and
//! normalization layers, multi-head attention, dropout, and cross-entropy.
//!
//! Values are f64 end to end; checkpoints store f32 (see [`checkpoint`]).
//! Everything is single-threaded and bit-reproducible for a fixed seed.

pub mod attention;
pub mod checkpoint;
pub mod conv;
pub mod kernels;
pub mod layers;
pub mod ops;
pub mod rng;
pub mod tensor;

pub use attention::{positional_encoding, scaled_dot_attention, MultiHeadAttention};
pub use conv::{conv1d, conv_out_len, maxpool1d};
pub use layers::{Conv1d, LayerNorm, Linear};
pub use ops::{
    add, add_broadcast_seq, concat_last, cross_entropy, dropout, gather_rows, layer_norm,
    linear, mean_pool_seq, mul_elem, permute, relu, reshape, scale, softmax_lastdim,
    weighted_sum,
};
pub use rng::Rng;
pub use tensor::{no_grad, Tensor};
