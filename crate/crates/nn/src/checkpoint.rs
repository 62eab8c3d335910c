//! Single-file parameter checkpoint.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   b"ECGK"
//! version u32                  (currently 1)
//! m_len   u64                  length of the JSON manifest in bytes
//! json    m_len bytes          manifest: hyperparameters, seed, notes
//! count   u32                  number of parameter entries
//! entry*  name_len u16, name utf-8,
//!         ndim u8, dims u64 x ndim,
//!         data f32 x prod(dims)   raw little-endian
//! ```
//!
//! Values are stored as 32-bit floats. Loading widens back to f64 exactly, so
//! a model whose in-memory parameters already sit on the f32 grid (as the
//! trainer guarantees for returned checkpoints) reproduces its outputs
//! bit-exactly after a save/load round trip.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"ECGK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad checkpoint {path}: {reason}")]
    Format { path: String, reason: String },
}

/// One named parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> CheckpointError {
    CheckpointError::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Writes the manifest and entries; f64 values are quantized to f32.
pub fn save(
    path: &Path,
    manifest: &serde_json::Value,
    entries: &[Entry],
) -> Result<(), CheckpointError> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(&CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let manifest_bytes = serde_json::to_vec(manifest).expect("manifest serialization");
    buf.extend_from_slice(&(manifest_bytes.len() as u64).to_le_bytes());
    buf.extend_from_slice(&manifest_bytes);
    buf.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for e in entries {
        let name = e.name.as_bytes();
        assert!(name.len() <= u16::MAX as usize, "parameter name too long");
        assert_eq!(e.shape.iter().product::<usize>(), e.data.len());
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name);
        buf.push(e.shape.len() as u8);
        for &d in &e.shape {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in &e.data {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&buf).map_err(io_err(path))?;
    Ok(())
}

/// Reads a checkpoint back; f32 values widen exactly to f64.
pub fn load(path: &Path) -> Result<(serde_json::Value, Vec<Entry>), CheckpointError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(io_err(path))?
        .read_to_end(&mut bytes)
        .map_err(io_err(path))?;
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8], CheckpointError> {
        if *pos + n > bytes.len() {
            return Err(format_err(path, "truncated file"));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };

    if take(&mut pos, 4)? != CHECKPOINT_MAGIC {
        return Err(format_err(path, "bad magic"));
    }
    let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(format_err(path, format!("unsupported version {version}")));
    }
    let m_len = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
    let manifest: serde_json::Value = serde_json::from_slice(take(&mut pos, m_len)?)
        .map_err(|e| format_err(path, format!("manifest: {e}")))?;
    let count = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());

    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let name_len = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(take(&mut pos, name_len)?.to_vec())
            .map_err(|e| format_err(path, format!("entry name: {e}")))?;
        let ndim = take(&mut pos, 1)?[0] as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize);
        }
        let numel: usize = shape.iter().product();
        let raw = take(&mut pos, numel * 4)?;
        let data: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        entries.push(Entry { name, shape, data });
    }
    if pos != bytes.len() {
        return Err(format_err(path, "trailing bytes"));
    }
    Ok((manifest, entries))
}

/// Rounds every value onto the f32 grid (the stored precision).
pub fn quantize_to_f32(values: &mut [f64]) {
    for v in values.iter_mut() {
        *v = *v as f32 as f64;
    }
}
