//! Training and evaluation: Adam + Noam schedule with early stopping, the
//! seen/unseen/ablation evaluation scenarios, classification metrics, the
//! noise-robustness sweep, and feature-distribution exports.

pub mod data;
pub mod dataset;
pub mod error;
pub mod export;
pub mod metrics;
pub mod noise;
pub mod optim;
pub mod split;
pub mod train;

pub use data::{attach_features, batch_tensors, join_segments_features};
pub use dataset::{build_domain_dataset, DomainProfile};
pub use error::{Result, TrainError};
pub use export::distribution_export;
pub use metrics::{compute_metrics, evaluate, macro_ovr_auc, model_scores, MetricsReport};
pub use noise::{noise_sweep, write_sweep_csv, NoiseSweepReport};
pub use optim::{adam_step, noam_lr, AdamState};
pub use split::{scenario_split, ScenarioMode, SplitSets};
pub use train::{train, write_log_csv, LogRow, TrainConfig, TrainOutcome};
