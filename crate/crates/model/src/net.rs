//! The dual-path network: ECG CNN backbone and RR-feature CNN path, one
//! transformer encoder stack per path, mean pooling, projection decoders,
//! concatenation, fused FC, and the class head.
//!
//! `forward` returns both the logits and the fused embedding; the embedding
//! is the alignment hook for the MMD loss (the last shared representation
//! before classification).

use ecgdk_nn::checkpoint::{self, Entry};
use ecgdk_nn::{
    add, add_broadcast_seq, concat_last, dropout, maxpool1d, mean_pool_seq, permute,
    positional_encoding, relu, Conv1d, LayerNorm, Linear, MultiHeadAttention, Rng, Tensor,
};
use std::path::Path;

use crate::config::{ModelConfig, ModelError, CONV_KERNEL, ECG_CONV_CHANNELS, RR_CONV_HIDDEN};

/// Post-norm transformer encoder layer:
/// `x = LN(x + Drop(MHA(x)))`, then `x = LN(x + Drop(FF(x)))`.
#[derive(Debug, Clone)]
struct EncoderLayer {
    mha: MultiHeadAttention,
    ln1: LayerNorm,
    ff1: Linear,
    ff2: Linear,
    ln2: LayerNorm,
}

impl EncoderLayer {
    fn new(cfg: &ModelConfig, rng: &mut Rng) -> Self {
        Self {
            mha: MultiHeadAttention::new(cfg.d_model, cfg.heads, rng),
            ln1: LayerNorm::new(cfg.d_model),
            ff1: Linear::new(cfg.d_model, cfg.ff_dim, rng),
            ff2: Linear::new(cfg.ff_dim, cfg.d_model, rng),
            ln2: LayerNorm::new(cfg.d_model),
        }
    }

    fn forward(&self, x: &Tensor, p: f64, rng: &mut Rng, training: bool) -> Tensor {
        let attn = self.mha.forward(x, x, x);
        let x = self.ln1.forward(&add(x, &dropout(&attn, p, rng, training)));
        let ff = self.ff2.forward(&relu(&self.ff1.forward(&x)));
        self.ln2.forward(&add(&x, &dropout(&ff, p, rng, training)))
    }

    fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        self.mha.collect_params(&format!("{prefix}.mha"), out);
        self.ln1.collect_params(&format!("{prefix}.ln1"), out);
        self.ff1.collect_params(&format!("{prefix}.ff1"), out);
        self.ff2.collect_params(&format!("{prefix}.ff2"), out);
        self.ln2.collect_params(&format!("{prefix}.ln2"), out);
    }
}

/// The full model with its parameters. Construction order of the blocks is
/// fixed; it defines both the seeded-init stream and the checkpoint layout.
#[derive(Debug, Clone)]
pub struct Model {
    pub cfg: ModelConfig,
    seed: u64,
    ecg_convs: Vec<Conv1d>,
    ecg_encoder: Vec<EncoderLayer>,
    ecg_pos: Tensor,
    rr_convs: Vec<Conv1d>,
    rr_encoder: Vec<EncoderLayer>,
    rr_pos: Option<Tensor>,
    ecg_decoder: Linear,
    rr_decoder: Option<Linear>,
    fused: Linear,
    classifier: Linear,
}

/// Forward output: class logits and the fused embedding.
pub struct ModelOutput {
    pub logits: Tensor,
    pub embedding: Tensor,
}

impl Model {
    pub fn new(cfg: ModelConfig, seed: u64) -> Result<Model, ModelError> {
        cfg.validate()?;
        let mut rng = Rng::new(seed, 10);
        let k = CONV_KERNEL;
        let c = ECG_CONV_CHANNELS;

        let ecg_convs = vec![
            Conv1d::new(1, c[0], k, 1, 0, &mut rng),
            Conv1d::new(c[0], c[1], k, 1, 1, &mut rng),
            Conv1d::new(c[1], c[2], k, 1, 1, &mut rng),
            Conv1d::new(c[2], cfg.d_model, k, 1, 1, &mut rng),
        ];
        let ecg_encoder = (0..cfg.encoder_layers)
            .map(|_| EncoderLayer::new(&cfg, &mut rng))
            .collect();
        let ecg_pos = positional_encoding(cfg.ecg_tokens(), cfg.d_model);

        let (rr_convs, rr_encoder, rr_pos, rr_decoder);
        if cfg.use_rr_path {
            rr_convs = vec![
                Conv1d::new(1, RR_CONV_HIDDEN, k, 1, 0, &mut rng),
                Conv1d::new(RR_CONV_HIDDEN, cfg.d_model, k, 1, 0, &mut rng),
            ];
            rr_encoder = (0..cfg.encoder_layers)
                .map(|_| EncoderLayer::new(&cfg, &mut rng))
                .collect();
            rr_pos = Some(positional_encoding(cfg.rr_tokens(), cfg.d_model));
            rr_decoder = Some(Linear::new(cfg.d_model, cfg.rr_decoder_out, &mut rng));
        } else {
            rr_convs = Vec::new();
            rr_encoder = Vec::new();
            rr_pos = None;
            rr_decoder = None;
        }

        let ecg_decoder = Linear::new(cfg.d_model, cfg.ecg_decoder_out, &mut rng);
        let fused_in = if cfg.use_rr_path {
            cfg.ecg_decoder_out + cfg.rr_decoder_out
        } else {
            cfg.ecg_decoder_out
        };
        let fused = Linear::new(fused_in, cfg.fused_fc, &mut rng);
        let classifier = Linear::new(cfg.fused_fc, cfg.classes, &mut rng);

        Ok(Model {
            cfg,
            seed,
            ecg_convs,
            ecg_encoder,
            ecg_pos,
            rr_convs,
            rr_encoder,
            rr_pos,
            ecg_decoder,
            rr_decoder,
            fused,
            classifier,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// ECG backbone: four convolutions with ReLU, max pool, transpose to
    /// sequence-major, positional encoding. `[batch, 1, len]` to
    /// `[batch, tokens, d_model]`.
    pub fn ecg_backbone(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        let s = x.shape();
        if s.len() != 3 || s[1] != 1 || s[2] != self.cfg.ecg_input_len {
            return Err(ModelError::Contract(format!(
                "ecg input must be [batch, 1, {}], got {s:?}",
                self.cfg.ecg_input_len
            )));
        }
        let mut h = x.clone();
        for conv in &self.ecg_convs {
            h = relu(&conv.forward(&h));
        }
        let h = maxpool1d(&h, 2, 2);
        let h = permute(&h, &[0, 2, 1]);
        Ok(add_broadcast_seq(&h, &self.ecg_pos))
    }

    /// RR feature path: two p0 convolutions with ReLU, transpose, positional
    /// encoding. `[batch, 1, rr_features]` to `[batch, rr_tokens, d_model]`.
    pub fn rr_path(&self, f: &Tensor) -> Result<Tensor, ModelError> {
        if !self.cfg.use_rr_path {
            return Err(ModelError::Contract(
                "rr_path invoked on an ablated model".into(),
            ));
        }
        let s = f.shape();
        if s.len() != 3 || s[1] != 1 || s[2] != self.cfg.rr_features {
            return Err(ModelError::Contract(format!(
                "rr input must be [batch, 1, {}], got {s:?}",
                self.cfg.rr_features
            )));
        }
        let mut h = f.clone();
        for conv in &self.rr_convs {
            h = relu(&conv.forward(&h));
        }
        let h = permute(&h, &[0, 2, 1]);
        Ok(add_broadcast_seq(&h, self.rr_pos.as_ref().unwrap()))
    }

    fn run_encoder(
        &self,
        layers: &[EncoderLayer],
        mut x: Tensor,
        rng: &mut Rng,
        training: bool,
    ) -> Tensor {
        let p = self.cfg.dropout;
        x = dropout(&x, p, rng, training);
        for layer in layers {
            x = layer.forward(&x, p, rng, training);
        }
        x
    }

    /// Full forward pass. `feats` must be present exactly when the RR path
    /// is active. `rng` drives dropout and is only consumed when training.
    pub fn forward(
        &self,
        ecg: &Tensor,
        feats: Option<&Tensor>,
        training: bool,
        rng: &mut Rng,
    ) -> Result<ModelOutput, ModelError> {
        let ecg_tokens = self.ecg_backbone(ecg)?;
        let ecg_enc = self.run_encoder(&self.ecg_encoder, ecg_tokens, rng, training);
        let ecg_vec = relu(&self.ecg_decoder.forward(&mean_pool_seq(&ecg_enc)));

        let fused_in = if self.cfg.use_rr_path {
            let feats = feats.ok_or_else(|| {
                ModelError::Contract("rr features required when use_rr_path is set".into())
            })?;
            let rr_tokens = self.rr_path(feats)?;
            let rr_enc = self.run_encoder(&self.rr_encoder, rr_tokens, rng, training);
            let rr_vec = relu(
                &self
                    .rr_decoder
                    .as_ref()
                    .unwrap()
                    .forward(&mean_pool_seq(&rr_enc)),
            );
            concat_last(&ecg_vec, &rr_vec)
        } else {
            ecg_vec
        };

        let embedding = relu(&self.fused.forward(&fused_in));
        let logits = self.classifier.forward(&embedding);
        Ok(ModelOutput { logits, embedding })
    }

    /// All learnable tensors in fixed declaration order.
    pub fn params(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        for (i, c) in self.ecg_convs.iter().enumerate() {
            c.collect_params(&format!("ecg.conv{}", i + 1), &mut out);
        }
        for (i, l) in self.ecg_encoder.iter().enumerate() {
            l.collect_params(&format!("ecg.enc{i}"), &mut out);
        }
        for (i, c) in self.rr_convs.iter().enumerate() {
            c.collect_params(&format!("rr.conv{}", i + 1), &mut out);
        }
        for (i, l) in self.rr_encoder.iter().enumerate() {
            l.collect_params(&format!("rr.enc{i}"), &mut out);
        }
        self.ecg_decoder.collect_params("ecg.decoder", &mut out);
        if let Some(d) = &self.rr_decoder {
            d.collect_params("rr.decoder", &mut out);
        }
        self.fused.collect_params("fused", &mut out);
        self.classifier.collect_params("classifier", &mut out);
        out
    }

    pub fn param_count_runtime(&self) -> usize {
        self.params().iter().map(|(_, t)| t.numel()).sum()
    }

    pub fn zero_grads(&self) {
        for (_, t) in self.params() {
            t.zero_grad();
        }
    }

    /// Rounds every parameter onto the f32 grid, the checkpoint precision.
    /// Models handed to evaluation after training are quantized so a
    /// save/load round trip reproduces outputs bit-exactly.
    pub fn quantize_params(&self) {
        for (_, t) in self.params() {
            let mut v = t.to_vec();
            checkpoint::quantize_to_f32(&mut v);
            t.set_data(&v);
        }
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<(), ModelError> {
        let entries: Vec<Entry> = self
            .params()
            .into_iter()
            .map(|(name, t)| Entry {
                name,
                shape: t.shape().to_vec(),
                data: t.to_vec(),
            })
            .collect();
        let manifest = serde_json::json!({
            "format": "ecgdk-checkpoint",
            "model_config": self.cfg,
            "seed": self.seed,
        });
        checkpoint::save(path, &manifest, &entries)
            .map_err(|e| ModelError::Checkpoint(e.to_string()))
    }

    pub fn load_checkpoint(path: &Path) -> Result<Model, ModelError> {
        let (manifest, entries) =
            checkpoint::load(path).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        let cfg: ModelConfig = serde_json::from_value(manifest["model_config"].clone())
            .map_err(|e| ModelError::Checkpoint(format!("model_config: {e}")))?;
        let seed = manifest["seed"].as_u64().unwrap_or(0);
        let model = Model::new(cfg, seed)?;
        let params = model.params();
        if params.len() != entries.len() {
            return Err(ModelError::Checkpoint(format!(
                "expected {} parameter entries, found {}",
                params.len(),
                entries.len()
            )));
        }
        for ((name, tensor), entry) in params.iter().zip(&entries) {
            if *name != entry.name || tensor.shape() != entry.shape.as_slice() {
                return Err(ModelError::Checkpoint(format!(
                    "entry mismatch: expected {name} {:?}, found {} {:?}",
                    tensor.shape(),
                    entry.name,
                    entry.shape
                )));
            }
            tensor.set_data(&entry.data);
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> ModelConfig {
        ModelConfig {
            d_model: 8,
            encoder_layers: 1,
            heads: 4,
            ff_dim: 16,
            ecg_input_len: 32,
            ..ModelConfig::default()
        }
    }

    fn batch_input(b: usize, len: usize, seed: u64) -> Tensor {
        let mut rng = Rng::new(seed, 0);
        let data = (0..b * len).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        Tensor::from_vec(&[b, 1, len], data, false)
    }

    #[test]
    fn full_size_shapes() {
        let model = Model::new(ModelConfig::default(), 1).unwrap();
        let ecg = batch_input(4, 1000, 2);
        let tokens = model.ecg_backbone(&ecg).unwrap();
        assert_eq!(tokens.shape(), &[4, 499, 32]);

        let feats = batch_input(4, 7, 3);
        let rr = model.rr_path(&feats).unwrap();
        assert_eq!(rr.shape(), &[4, 3, 32]);

        let mut rng = Rng::new(9, 0);
        let out = model.forward(&ecg, Some(&feats), false, &mut rng).unwrap();
        assert_eq!(out.logits.shape(), &[4, 3]);
        assert_eq!(out.embedding.shape(), &[4, 32]);
    }

    #[test]
    fn param_count_formula_matches_runtime() {
        for cfg in [
            ModelConfig::default(),
            ModelConfig {
                use_rr_path: false,
                ..ModelConfig::default()
            },
            tiny_cfg(),
        ] {
            let model = Model::new(cfg.clone(), 0).unwrap();
            assert_eq!(model.param_count_runtime(), cfg.param_count(), "{cfg:?}");
        }
    }

    #[test]
    fn eval_forward_is_pure() {
        let model = Model::new(tiny_cfg(), 7).unwrap();
        let ecg = batch_input(2, 32, 4);
        let feats = batch_input(2, 7, 5);
        let mut rng = Rng::new(0, 0);
        let a = model.forward(&ecg, Some(&feats), false, &mut rng).unwrap();
        let b = model.forward(&ecg, Some(&feats), false, &mut rng).unwrap();
        assert_eq!(a.logits.to_vec(), b.logits.to_vec());
        assert_eq!(a.embedding.to_vec(), b.embedding.to_vec());
    }

    #[test]
    fn identical_rows_produce_identical_outputs() {
        let model = Model::new(tiny_cfg(), 7).unwrap();
        let mut rng = Rng::new(1, 0);
        let row: Vec<f64> = (0..32).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let mut data = row.clone();
        data.extend_from_slice(&row);
        let ecg = Tensor::from_vec(&[2, 1, 32], data, false);
        let fr: Vec<f64> = (0..7).map(|_| rng.uniform_in(0.0, 1.0)).collect();
        let mut fdata = fr.clone();
        fdata.extend_from_slice(&fr);
        let feats = Tensor::from_vec(&[2, 1, 7], fdata, false);
        let out = model.forward(&ecg, Some(&feats), false, &mut rng).unwrap();
        let logits = out.logits.to_vec();
        assert_eq!(&logits[..3], &logits[3..]);
    }

    #[test]
    fn zero_input_deterministic() {
        let model = Model::new(tiny_cfg(), 3).unwrap();
        let ecg = Tensor::from_vec(&[1, 1, 32], vec![0.0; 32], false);
        let feats = Tensor::from_vec(&[1, 1, 7], vec![0.0; 7], false);
        let mut rng = Rng::new(0, 0);
        let a = model.forward(&ecg, Some(&feats), false, &mut rng).unwrap();
        let b = model.forward(&ecg, Some(&feats), false, &mut rng).unwrap();
        assert_eq!(a.logits.to_vec(), b.logits.to_vec());
        assert!(a.logits.to_vec().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn missing_features_is_contract_error() {
        let model = Model::new(tiny_cfg(), 0).unwrap();
        let ecg = batch_input(1, 32, 0);
        let mut rng = Rng::new(0, 0);
        assert!(model.forward(&ecg, None, false, &mut rng).is_err());
    }

    #[test]
    fn ablated_model_ignores_features_and_rr_path_errors() {
        let cfg = ModelConfig {
            use_rr_path: false,
            ..tiny_cfg()
        };
        let model = Model::new(cfg, 0).unwrap();
        let ecg = batch_input(1, 32, 0);
        let mut rng = Rng::new(0, 0);
        let out = model.forward(&ecg, None, false, &mut rng).unwrap();
        assert_eq!(out.logits.shape(), &[1, 3]);
        let feats = batch_input(1, 7, 1);
        assert!(model.rr_path(&feats).is_err());
    }

    #[test]
    fn wrong_input_length_rejected() {
        let model = Model::new(ModelConfig::default(), 0).unwrap();
        let ecg = batch_input(1, 999, 0);
        assert!(model.ecg_backbone(&ecg).is_err());
    }

    #[test]
    fn checkpoint_roundtrip_bit_exact() {
        let dir = std::env::temp_dir().join(format!("ecgdk-model-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.ckpt");

        let model = Model::new(tiny_cfg(), 5).unwrap();
        model.quantize_params();
        let ecg = batch_input(2, 32, 8);
        let feats = batch_input(2, 7, 9);
        let mut rng = Rng::new(0, 0);
        let before = model.forward(&ecg, Some(&feats), false, &mut rng).unwrap();

        model.save_checkpoint(&path).unwrap();
        let loaded = Model::load_checkpoint(&path).unwrap();
        let after = loaded.forward(&ecg, Some(&feats), false, &mut rng).unwrap();
        assert_eq!(before.logits.to_vec(), after.logits.to_vec());
        assert_eq!(before.embedding.to_vec(), after.embedding.to_vec());
    }
}
