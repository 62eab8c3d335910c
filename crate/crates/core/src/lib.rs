//! ECG signal toolkit: record types, synthetic waveform generation,
//! preprocessing, Pan-Tompkins R-peak detection, and RR-interval features.

pub mod dsp;
pub mod error;
pub mod filter;
pub mod hrv;
pub mod io;
pub mod record;
pub mod rpeak;
pub mod synth;

pub use error::{CoreError, Result};
pub use filter::FilterSpec;
pub use hrv::{features_for_segment, hrv_features, HrvFeatures, SegmentFeatures};
pub use record::{Class, EcgRecord, RawWindow, Segment, SEGMENT_LEN, TARGET_FS};
pub use rpeak::{detect_r_peaks, RPeakTrain};
pub use synth::{generate_synthetic, make_domain_variant, SyntheticSpec};
