//! The dual-path CNN + transformer arrhythmia classifier and the
//! MMD-regularized training objective.

pub mod config;
pub mod mmd;
pub mod net;

pub use config::{ModelConfig, ModelError};
pub use mmd::{
    median_heuristic_beta, mmd2, mmd2_value, rbf_kernel, resolve_beta, total_loss, BetaMode,
    MmdConfig, MmdError,
};
pub use net::{Model, ModelOutput};
