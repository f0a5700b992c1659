//! Reading inputs and writing artifacts.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use taurus_core::compiler::{ProgramGraph, ProgramSpec};

use crate::error::{Error, Result};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Replaces `path` in one step: readers see the old file or the new one,
/// never a partial write.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn from_json<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize");
    out.push(b'\n');
    out
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("flat rows serialize");
    }
    w.into_inner().expect("writing to memory")
}

/// Parses and validates a program file.
pub fn parse_program(text: &str, path: &Path) -> Result<ProgramGraph> {
    let spec: ProgramSpec = from_json(text, path)?;
    Ok(ProgramGraph::from_spec(&spec)?)
}

pub fn load_program(path: &Path) -> Result<ProgramGraph> {
    parse_program(&read_text(path)?, path)
}

/// Cleartext program inputs: `{"x": [1, 2], ...}`.
pub fn load_inputs(path: &Path) -> Result<BTreeMap<String, Vec<u64>>> {
    from_json(&read_text(path)?, path)
}
