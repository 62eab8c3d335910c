//! On-disk formats: record CSV/JSONL, segment JSONL, feature JSONL.
//!
//! Record CSV: a header line `# fs=<Hz> label=<Normal|AF|PVC|-> domain=<id>
//! record=<id>` followed by one sample per line in decimal text. A file may
//! hold several records; each `#` line starts a new one. Floats are written
//! with the shortest representation that parses back to the same value, so
//! write-then-read round-trips bit-exactly.
//!
//! Record JSONL: one object per line with keys `fs`, `label`, `domain`,
//! `record`, `samples`. Segment JSONL: keys `label`, `domain`, `record`,
//! `start`, `samples`. Feature JSONL appends `features` (the 7-vector in
//! mean, std, entropy, rmssd, nrmssd, mean_ad, median_ad order) and `usable`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::hrv::HrvFeatures;
use crate::record::{Class, EcgRecord, Segment};

/// Supported record container formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    Jsonl,
}

impl RecordFormat {
    /// Picks the format from a file extension (`.csv` vs `.jsonl`/`.json`).
    pub fn from_path(path: &Path) -> Result<RecordFormat> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(RecordFormat::Csv),
            Some("jsonl") | Some("json") => Ok(RecordFormat::Jsonl),
            other => Err(CoreError::Config(format!(
                "cannot infer record format from extension {other:?}; use .csv or .jsonl"
            ))),
        }
    }
}

fn open_reader(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CoreError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn create_writer(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CoreError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn parse_err(path: &Path, line: usize, field: &str, message: impl Into<String>) -> CoreError {
    CoreError::Parse {
        file: path.display().to_string(),
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

/// Loads every record in the file under the declared format.
pub fn load_records(path: &Path, format: RecordFormat) -> Result<Vec<EcgRecord>> {
    let records = match format {
        RecordFormat::Csv => load_records_csv(path)?,
        RecordFormat::Jsonl => load_records_jsonl(path)?,
    };
    if records.is_empty() {
        return Err(CoreError::NoRecords(path.display().to_string()));
    }
    for r in &records {
        r.validate()?;
    }
    Ok(records)
}

fn parse_csv_header(path: &Path, line_no: usize, line: &str) -> Result<EcgRecord> {
    let body = line.trim_start_matches('#').trim();
    let mut fs = None;
    let mut label = None;
    let mut domain = None;
    let mut record = None;
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| parse_err(path, line_no, "header", format!("bad token {token:?}")))?;
        match key {
            "fs" => {
                let v: f64 = value
                    .parse()
                    .map_err(|e| parse_err(path, line_no, "fs", format!("{e}")))?;
                if !(v > 0.0) {
                    return Err(parse_err(path, line_no, "fs", format!("fs must be > 0, got {v}")));
                }
                fs = Some(v);
            }
            "label" => {
                label = Some(
                    Class::parse_opt(value).map_err(|e| parse_err(path, line_no, "label", e))?,
                );
            }
            "domain" => domain = Some(value.to_string()),
            "record" => record = Some(value.to_string()),
            other => {
                return Err(parse_err(
                    path,
                    line_no,
                    "header",
                    format!("unknown key {other:?}"),
                ))
            }
        }
    }
    Ok(EcgRecord {
        samples: Vec::new(),
        fs: fs.ok_or_else(|| parse_err(path, line_no, "fs", "missing fs"))?,
        label: label.unwrap_or(None),
        domain_id: domain.unwrap_or_else(|| "unknown".into()),
        record_id: record.unwrap_or_else(|| "unknown".into()),
    })
}

fn load_records_csv(path: &Path) -> Result<Vec<EcgRecord>> {
    let reader = open_reader(path)?;
    let mut records: Vec<EcgRecord> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            records.push(parse_csv_header(path, line_no, trimmed)?);
            continue;
        }
        let current = records
            .last_mut()
            .ok_or_else(|| parse_err(path, line_no, "sample", "sample before any '#' header"))?;
        let v: f64 = trimmed
            .parse()
            .map_err(|e| parse_err(path, line_no, "sample", format!("{e}")))?;
        current.samples.push(v);
    }
    Ok(records)
}

pub fn write_records_csv(path: &Path, records: &[EcgRecord]) -> Result<()> {
    let mut w = create_writer(path)?;
    let io_err = |source| CoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    for r in records {
        let label = r.label.map_or("-", |c| c.name());
        writeln!(
            w,
            "# fs={} label={} domain={} record={}",
            r.fs, label, r.domain_id, r.record_id
        )
        .map_err(io_err)?;
        for s in &r.samples {
            writeln!(w, "{s}").map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// Wire form of one JSONL record line.
#[derive(Serialize, Deserialize)]
struct RecordLine {
    fs: f64,
    label: Option<Class>,
    domain: String,
    record: String,
    samples: Vec<f64>,
}

fn load_records_jsonl(path: &Path) -> Result<Vec<EcgRecord>> {
    let reader = open_reader(path)?;
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RecordLine = serde_json::from_str(&line)
            .map_err(|e| parse_err(path, i + 1, "record", format!("{e}")))?;
        if !(parsed.fs > 0.0) {
            return Err(parse_err(path, i + 1, "fs", format!("fs must be > 0, got {}", parsed.fs)));
        }
        records.push(EcgRecord {
            samples: parsed.samples,
            fs: parsed.fs,
            label: parsed.label,
            domain_id: parsed.domain,
            record_id: parsed.record,
        });
    }
    Ok(records)
}

pub fn write_records_jsonl(path: &Path, records: &[EcgRecord]) -> Result<()> {
    let mut w = create_writer(path)?;
    let io_err = |source| CoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    for r in records {
        let line = serde_json::to_string(&RecordLine {
            fs: r.fs,
            label: r.label,
            domain: r.domain_id.clone(),
            record: r.record_id.clone(),
            samples: r.samples.clone(),
        })
        .expect("record serialization cannot fail");
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Wire form of one segment line; also the base of the feature line.
#[derive(Serialize, Deserialize)]
struct SegmentLine {
    label: Option<Class>,
    domain: String,
    record: String,
    start: usize,
    samples: Vec<f64>,
}

impl SegmentLine {
    fn from_segment(s: &Segment) -> Self {
        Self {
            label: s.label,
            domain: s.domain_id.clone(),
            record: s.source_record.clone(),
            start: s.start_index,
            samples: s.samples.clone(),
        }
    }

    fn into_segment(self) -> Segment {
        Segment {
            samples: self.samples,
            label: self.label,
            domain_id: self.domain,
            source_record: self.record,
            start_index: self.start,
        }
    }
}

pub fn write_segments_jsonl(path: &Path, segments: &[Segment]) -> Result<()> {
    let mut w = create_writer(path)?;
    let io_err = |source| CoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    for s in segments {
        let line = serde_json::to_string(&SegmentLine::from_segment(s))
            .expect("segment serialization cannot fail");
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn load_segments_jsonl(path: &Path) -> Result<Vec<Segment>> {
    let reader = open_reader(path)?;
    let mut segments = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: SegmentLine = serde_json::from_str(&line)
            .map_err(|e| parse_err(path, i + 1, "segment", format!("{e}")))?;
        let seg = parsed.into_segment();
        seg.validate()?;
        segments.push(seg);
    }
    if segments.is_empty() {
        return Err(CoreError::NoRecords(path.display().to_string()));
    }
    Ok(segments)
}

/// One segment together with its extracted feature vector, as stored in
/// feature JSONL files and consumed by training.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturedSegment {
    pub segment: Segment,
    pub features: Option<HrvFeatures>,
}

impl FeaturedSegment {
    pub fn usable(&self) -> bool {
        self.features.is_some()
    }
}

#[derive(Serialize, Deserialize)]
struct FeatureLine {
    label: Option<Class>,
    domain: String,
    record: String,
    start: usize,
    samples: Vec<f64>,
    features: Option<[f64; 7]>,
    usable: bool,
}

pub fn write_features_jsonl(path: &Path, items: &[FeaturedSegment]) -> Result<()> {
    let mut w = create_writer(path)?;
    let io_err = |source| CoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    for item in items {
        let s = &item.segment;
        let line = serde_json::to_string(&FeatureLine {
            label: s.label,
            domain: s.domain_id.clone(),
            record: s.source_record.clone(),
            start: s.start_index,
            samples: s.samples.clone(),
            features: item.features.map(HrvFeatures::to_vector),
            usable: item.features.is_some(),
        })
        .expect("feature serialization cannot fail");
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn load_features_jsonl(path: &Path) -> Result<Vec<FeaturedSegment>> {
    let reader = open_reader(path)?;
    let mut items = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: FeatureLine = serde_json::from_str(&line)
            .map_err(|e| parse_err(path, i + 1, "features", format!("{e}")))?;
        let segment = Segment {
            samples: parsed.samples,
            label: parsed.label,
            domain_id: parsed.domain,
            source_record: parsed.record,
            start_index: parsed.start,
        };
        segment.validate()?;
        items.push(FeaturedSegment {
            segment,
            features: parsed.features.map(HrvFeatures::from_vector),
        });
    }
    if items.is_empty() {
        return Err(CoreError::NoRecords(path.display().to_string()));
    }
    Ok(items)
}
