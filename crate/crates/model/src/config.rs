//! Model hyperparameters and the closed-form parameter count.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

/// ECG backbone channel plan: fixed conv widths ending at `d_model`, then a
/// k2/s2 max pool.
pub const ECG_CONV_CHANNELS: [usize; 3] = [64, 128, 128];
/// RR path hidden width.
pub const RR_CONV_HIDDEN: usize = 128;
pub const CONV_KERNEL: usize = 3;

/// Architecture hyperparameters. Defaults are the full-size model; smaller
/// values are only used for targeted testing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub d_model: usize,
    pub encoder_layers: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub dropout: f64,
    pub ecg_decoder_out: usize,
    pub rr_decoder_out: usize,
    pub fused_fc: usize,
    pub classes: usize,
    /// Ablation switch: when false the RR path (and its decoder) is absent
    /// and the fused layer reads the ECG decoder output alone.
    pub use_rr_path: bool,
    pub ecg_input_len: usize,
    pub rr_features: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_model: 32,
            encoder_layers: 4,
            heads: 4,
            ff_dim: 64,
            dropout: 0.25,
            ecg_decoder_out: 32,
            rr_decoder_out: 64,
            fused_fc: 32,
            classes: 3,
            use_rr_path: true,
            ecg_input_len: 1000,
            rr_features: 7,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.heads == 0 || self.d_model % self.heads != 0 {
            return Err(ModelError::Config(format!(
                "d_model {} must be divisible by heads {}",
                self.d_model, self.heads
            )));
        }
        for (name, v) in [
            ("d_model", self.d_model),
            ("encoder_layers", self.encoder_layers),
            ("ff_dim", self.ff_dim),
            ("ecg_decoder_out", self.ecg_decoder_out),
            ("rr_decoder_out", self.rr_decoder_out),
            ("fused_fc", self.fused_fc),
            ("classes", self.classes),
            ("ecg_input_len", self.ecg_input_len),
            ("rr_features", self.rr_features),
        ] {
            if v == 0 {
                return Err(ModelError::Config(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if self.ecg_input_len < 4 {
            return Err(ModelError::Config("ecg_input_len too short".into()));
        }
        if self.rr_features < 5 {
            return Err(ModelError::Config(
                "rr_features must be at least 5 (two k3/p0 convs)".into(),
            ));
        }
        Ok(())
    }

    /// Sequence positions entering the ECG encoder: one p0 conv then the
    /// k2/s2 pool.
    pub fn ecg_tokens(&self) -> usize {
        (self.ecg_input_len - (CONV_KERNEL - 1)) / 2
    }

    /// Sequence positions entering the RR encoder: two k3/p0 convs.
    pub fn rr_tokens(&self) -> usize {
        self.rr_features - 2 * (CONV_KERNEL - 1)
    }

    fn conv_params(ci: usize, co: usize, k: usize) -> usize {
        k * ci * co + co
    }

    fn linear_params(d_in: usize, d_out: usize) -> usize {
        d_in * d_out + d_out
    }

    /// Learnable scalars in one encoder layer: the four attention
    /// projections, two layer norms, and the two feed-forward affines.
    pub fn encoder_layer_params(&self) -> usize {
        4 * Self::linear_params(self.d_model, self.d_model)
            + 2 * (2 * self.d_model)
            + Self::linear_params(self.d_model, self.ff_dim)
            + Self::linear_params(self.ff_dim, self.d_model)
    }

    pub fn ecg_conv_params(&self) -> usize {
        let c = ECG_CONV_CHANNELS;
        Self::conv_params(1, c[0], CONV_KERNEL)
            + Self::conv_params(c[0], c[1], CONV_KERNEL)
            + Self::conv_params(c[1], c[2], CONV_KERNEL)
            + Self::conv_params(c[2], self.d_model, CONV_KERNEL)
    }

    pub fn rr_conv_params(&self) -> usize {
        Self::conv_params(1, RR_CONV_HIDDEN, CONV_KERNEL)
            + Self::conv_params(RR_CONV_HIDDEN, self.d_model, CONV_KERNEL)
    }

    /// Exact learnable-scalar count for this configuration.
    ///
    /// Closed form per block: conv = k*ch_in*ch_out + ch_out; linear =
    /// d_in*d_out + d_out; encoder layer = 4 attention projections + 2 layer
    /// norms (gain+bias) + 2 feed-forward affines; one encoder stack per
    /// active path; decoders are single affines; fusion reads the
    /// concatenated decoder widths (ECG alone under ablation).
    pub fn param_count(&self) -> usize {
        let stack = self.encoder_layers * self.encoder_layer_params();
        let mut total = self.ecg_conv_params()
            + stack
            + Self::linear_params(self.d_model, self.ecg_decoder_out);
        let mut fused_in = self.ecg_decoder_out;
        if self.use_rr_path {
            total += self.rr_conv_params()
                + stack
                + Self::linear_params(self.d_model, self.rr_decoder_out);
            fused_in += self.rr_decoder_out;
        }
        total += Self::linear_params(fused_in, self.fused_fc);
        total += Self::linear_params(self.fused_fc, self.classes);
        total
    }
}
