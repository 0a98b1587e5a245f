//! Content-addressed, append-only response cache.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub value: String,
    pub stored_at: String,
}

/// SHA-256 over length-prefixed parts, hex encoded.
pub fn cache_key(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Cache shared by concurrent workers.
///
/// Entries are never overwritten. Readers go straight to disk (or memory);
/// writers serialize on a per-key lock which callers also hold across the
/// miss-then-fetch sequence so each key is fetched at most once.
#[derive(Debug, Default)]
pub struct ResponseCache {
    dir: Option<PathBuf>,
    memory: RwLock<HashMap<String, CacheEntry>>,
    inflight: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir: Some(dir), ..Self::default() })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path_for(&self, key: &str) -> Option<PathBuf> {
        let shard = key.get(..2).unwrap_or("__");
        self.dir.as_ref().map(|d| d.join(shard).join(format!("{key}.json")))
    }

    /// Lock guarding the fetch of `key`.
    pub fn key_lock(&self, key: &str) -> Arc<Mutex<()>> {
        let mut map = self.inflight.lock().expect("cache lock poisoned");
        map.entry(key.to_string()).or_default().clone()
    }

    pub fn get(&self, key: &str) -> std::io::Result<Option<CacheEntry>> {
        if let Some(entry) = self.memory.read().expect("cache lock poisoned").get(key) {
            return Ok(Some(entry.clone()));
        }
        let Some(path) = self.path_for(key) else {
            return Ok(None);
        };
        match fs::read_to_string(&path) {
            Ok(raw) => {
                let entry: CacheEntry =
                    serde_json::from_str(&raw).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
                self.memory.write().expect("cache lock poisoned").insert(key.to_string(), entry.clone());
                Ok(Some(entry))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Stores `entry` unless the key already exists; returns the entry that
    /// is now authoritative.
    pub fn put(&self, entry: CacheEntry) -> std::io::Result<CacheEntry> {
        if let Some(existing) = self.get(&entry.key)? {
            return Ok(existing);
        }
        if let Some(path) = self.path_for(&entry.key) {
            let parent = path.parent().expect("sharded path has parent");
            fs::create_dir_all(parent)?;
            let tmp = parent.join(format!(".{}.{}.tmp", entry.key, std::process::id()));
            {
                let mut f = fs::File::create(&tmp)?;
                f.write_all(serde_json::to_string(&entry)?.as_bytes())?;
                f.sync_all()?;
            }
            fs::rename(&tmp, &path)?;
        }
        self.memory.write().expect("cache lock poisoned").insert(entry.key.clone(), entry.clone());
        Ok(entry)
    }

    pub fn len(&self) -> usize {
        self.memory.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
