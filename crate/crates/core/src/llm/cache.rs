//! Append-only JSON-lines response cache.
//!
//! Each line is `{key_hash, model, prompt, response, timestamp}`. The key is
//! a content hash of the model name and prompt, recomputed on load, so the
//! cache survives hand edits to the stored hash field and doubles as the
//! offline fixture store.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmError;

/// Content hash for a cache lookup: SHA-256 over model and prompt.
pub fn cache_key(model: &str, prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model.as_bytes());
    hasher.update([0u8]);
    hasher.update(prompt.as_bytes());
    format!("{:x}", hasher.finalize())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key_hash: String,
    pub model: String,
    pub prompt: String,
    pub response: String,
    /// Seconds since the Unix epoch at append time. Kept out of all data
    /// outputs; recorded here for cache audits only.
    pub timestamp: u64,
}

/// Thread-safe cache over one JSON-lines file. Reads come from memory;
/// writes append a line and update memory under the same lock.
#[derive(Debug)]
pub struct ResponseCache {
    path: PathBuf,
    entries: Mutex<HashMap<String, String>>,
}

impl ResponseCache {
    /// Open a cache file, creating an empty cache if the file is missing.
    pub fn open(path: &Path) -> Result<Self, LlmError> {
        let mut entries = HashMap::new();
        match std::fs::read_to_string(path) {
            Ok(content) => {
                for (i, line) in content.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let entry: CacheEntry =
                        serde_json::from_str(line).map_err(|e| LlmError::CacheParse {
                            path: path.display().to_string(),
                            line: i + 1,
                            detail: e.to_string(),
                        })?;
                    entries.insert(cache_key(&entry.model, &entry.prompt), entry.response);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(source) => {
                return Err(LlmError::CacheIo {
                    path: path.display().to_string(),
                    source,
                })
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries: Mutex::new(entries),
        })
    }

    pub fn get(&self, model: &str, prompt: &str) -> Option<String> {
        self.entries
            .lock()
            .expect("cache lock")
            .get(&cache_key(model, prompt))
            .cloned()
    }

    /// Append a response to the file and the in-memory index.
    pub fn put(&self, model: &str, prompt: &str, response: &str) -> Result<(), LlmError> {
        let entry = CacheEntry {
            key_hash: cache_key(model, prompt),
            model: model.to_string(),
            prompt: prompt.to_string(),
            response: response.to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let line = serde_json::to_string(&entry).expect("cache entry serializes");

        let mut entries = self.entries.lock().expect("cache lock");
        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|source| LlmError::CacheIo {
                    path: self.path.display().to_string(),
                    source,
                })?;
            }
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|source| LlmError::CacheIo {
                path: self.path.display().to_string(),
                source,
            })?;
        writeln!(file, "{line}").map_err(|source| LlmError::CacheIo {
            path: self.path.display().to_string(),
            source,
        })?;
        entries.insert(entry.key_hash, entry.response);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
