//! Append-only response cache.
//!
//! One JSON object per line: `{"key", "model_name", "response",
//! "created_at"}`. The key is `claimcheck_core::digest::cache_key(model,
//! prompt)`; the prompt itself is not stored. Later lines win over earlier
//! ones for the same key. Raw responses are cached, not parsed labels, so a
//! parse-mode change never needs a re-query.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil::write_atomic;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cache {path} is corrupt at line {line}: {reason}")]
    Corruption { path: PathBuf, line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub model_name: String,
    pub response: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Default)]
struct Inner {
    map: HashMap<String, CacheRecord>,
    file: Option<File>,
}

/// Thread-safe cache; every `put` appends one complete line under a lock.
#[derive(Debug)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    inner: Mutex<Inner>,
}

fn parse_records(path: &Path, raw: &str) -> Result<Vec<CacheRecord>, CacheError> {
    let mut out = Vec::new();
    for (i, line) in raw.split('\n').enumerate() {
        if line.is_empty() {
            continue;
        }
        let rec: CacheRecord = serde_json::from_str(line).map_err(|e| CacheError::Corruption {
            path: path.into(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        if rec.key.len() != 64 || !rec.key.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(CacheError::Corruption { path: path.into(), line: i + 1, reason: "malformed key".into() });
        }
        out.push(rec);
    }
    Ok(out)
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self { path: None, inner: Mutex::new(Inner::default()) }
    }

    /// Opens (creating if needed) a cache file and loads its records.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, CacheError> {
        let path = path.into();
        let io = |source| CacheError::Io { path: path.clone(), source };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let raw = match std::fs::read_to_string(&path) {
            Ok(s) => s,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(io(e)),
        };
        let map = parse_records(&path, &raw)?.into_iter().map(|r| (r.key.clone(), r)).collect();
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        Ok(Self { path: Some(path), inner: Mutex::new(Inner { map, file: Some(file) }) })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.inner.lock().unwrap().map.get(key).map(|r| r.response.clone())
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn put(&self, record: CacheRecord) -> Result<(), CacheError> {
        let mut line = serde_json::to_string(&record).expect("cache record serializes");
        line.push('\n');
        let mut inner = self.inner.lock().unwrap();
        if let (Some(file), Some(path)) = (inner.file.as_mut(), self.path.as_ref()) {
            file.write_all(line.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|source| CacheError::Io { path: path.clone(), source })?;
        }
        inner.map.insert(record.key.clone(), record);
        Ok(())
    }
}

/// Rewrites a cache file keeping only the last record per key, in order of
/// first appearance. Must not run while another process appends.
pub fn compact(path: &Path) -> Result<usize, CacheError> {
    let raw = std::fs::read_to_string(path).map_err(|source| CacheError::Io { path: path.into(), source })?;
    let records = parse_records(path, &raw)?;
    let mut order: Vec<String> = Vec::new();
    let mut last: HashMap<String, CacheRecord> = HashMap::new();
    for r in records {
        if !last.contains_key(&r.key) {
            order.push(r.key.clone());
        }
        last.insert(r.key.clone(), r);
    }
    let mut out = String::new();
    for key in &order {
        out.push_str(&serde_json::to_string(&last[key]).expect("cache record serializes"));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes()).map_err(|source| CacheError::Io { path: path.into(), source })?;
    Ok(order.len())
}
