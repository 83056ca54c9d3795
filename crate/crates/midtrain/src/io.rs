//! JSONL and report I/O with atomic writes.
//!
//! Output files are written to a temporary sibling and renamed into place,
//! so a crash mid-write never leaves a truncated artifact. None of the
//! writers embed timestamps; identical inputs produce byte-identical files.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Error;
use crate::Result;

/// Writes `bytes` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let err = |e| Error::io(path.display().to_string(), e);
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(err)?;
    }
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.flush().map_err(err)?;
    tmp.persist(path)
        .map_err(|e| Error::io(path.display().to_string(), e.error))?;
    Ok(())
}

/// Reads a JSONL file into a vector, one deserialized value per non-empty
/// line. Parse failures report the 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| {
            Error::InvalidInput(format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Reads a single JSON document from `path`.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&body)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Serializes `items` as JSONL (one compact JSON object per line).
pub fn to_jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut buf = String::new();
    for item in items {
        let line = serde_json::to_string(item)
            .map_err(|e| Error::InvalidInput(format!("serialize: {e}")))?;
        buf.push_str(&line);
        buf.push('\n');
    }
    Ok(buf)
}

/// Writes `items` to `path` as JSONL, atomically.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_atomic(path, to_jsonl(items)?.as_bytes())
}

/// Writes a pretty-printed JSON value to `path`, atomically, with a
/// trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidInput(format!("serialize: {e}")))?;
    body.push('\n');
    write_atomic(path, body.as_bytes())
}

/// Minimal CSV row formatter. Fields containing commas, quotes, or
/// newlines are quoted; floats use Rust's shortest round-trip formatting,
/// which is stable across runs.
pub fn csv_row(fields: &[String]) -> String {
    let mut out = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        if f.contains([',', '"', '\n']) {
            out.push('"');
            out.push_str(&f.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(f);
        }
    }
    out.push('\n');
    out
}
