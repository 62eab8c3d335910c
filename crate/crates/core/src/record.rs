//! Core record and segment types shared across the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Number of samples in one model-ready segment (10 s at 100 Hz).
pub const SEGMENT_LEN: usize = 1000;

/// Target sampling rate every record is resampled to before segmentation.
pub const TARGET_FS: f64 = 100.0;

/// Rhythm class assigned to a record or segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    Normal,
    #[serde(rename = "AF")]
    Af,
    #[serde(rename = "PVC")]
    Pvc,
}

impl Class {
    pub const ALL: [Class; 3] = [Class::Normal, Class::Af, Class::Pvc];

    /// Stable index used for class vectors and confusion matrices.
    pub fn index(self) -> usize {
        match self {
            Class::Normal => 0,
            Class::Af => 1,
            Class::Pvc => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Class> {
        Class::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Class::Normal => "Normal",
            Class::Af => "AF",
            Class::Pvc => "PVC",
        }
    }

    /// Parses the textual form used in file headers; `-` means unlabeled.
    pub fn parse_opt(s: &str) -> std::result::Result<Option<Class>, String> {
        match s {
            "Normal" => Ok(Some(Class::Normal)),
            "AF" => Ok(Some(Class::Af)),
            "PVC" => Ok(Some(Class::Pvc)),
            "-" => Ok(None),
            other => Err(format!("unknown class label {other:?}")),
        }
    }
}

impl std::fmt::Display for Class {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A raw single-lead ECG recording with its sampling rate and provenance tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcgRecord {
    pub samples: Vec<f64>,
    /// Sampling rate in Hz.
    pub fs: f64,
    pub label: Option<Class>,
    /// Source dataset / device tag.
    pub domain_id: String,
    pub record_id: String,
}

impl EcgRecord {
    /// Checks the type invariants: non-empty, positive rate, finite samples.
    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(CoreError::Config(format!(
                "record {}: samples must be non-empty",
                self.record_id
            )));
        }
        if !(self.fs > 0.0) {
            return Err(CoreError::Config(format!(
                "record {}: fs must be > 0, got {}",
                self.record_id, self.fs
            )));
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(CoreError::Config(format!(
                "record {}: non-finite sample at index {i}",
                self.record_id
            )));
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }
}

/// A raw (not yet normalized) window cut from a resampled record.
#[derive(Debug, Clone)]
pub struct RawWindow {
    pub samples: Vec<f64>,
    /// Offset of the first sample in the resampled source signal.
    pub start_index: usize,
}

/// One normalized 1000-sample, 10-second window ready for the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub samples: Vec<f64>,
    pub label: Option<Class>,
    pub domain_id: String,
    pub source_record: String,
    pub start_index: usize,
}

impl Segment {
    /// Checks length, the [-1, 1] range, and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.samples.len() != SEGMENT_LEN {
            return Err(CoreError::Config(format!(
                "segment {}@{}: length {} != {SEGMENT_LEN}",
                self.source_record,
                self.start_index,
                self.samples.len()
            )));
        }
        for (i, &s) in self.samples.iter().enumerate() {
            if !s.is_finite() || !(-1.0..=1.0).contains(&s) {
                return Err(CoreError::Config(format!(
                    "segment {}@{}: sample {i} = {s} outside [-1, 1]",
                    self.source_record, self.start_index
                )));
            }
        }
        Ok(())
    }
}
