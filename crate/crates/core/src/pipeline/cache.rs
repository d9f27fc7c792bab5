//! On-disk cache of per-ξ transform results, keyed by sha256 and checksummed.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// sha256 of the JSON form of `parts`.
pub fn cache_key<T: Serialize>(parts: &T) -> String {
    sha256_hex(&serde_json::to_vec(parts).expect("key parts serialize"))
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    /// sha256 of `payload`.
    checksum: String,
    payload: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup {
    Hit,
    Miss,
    /// The entry exists but its checksum or key does not match; it is ignored.
    Corrupt,
}

#[derive(Debug, Clone)]
pub struct KernelCache {
    dir: PathBuf,
}

impl KernelCache {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn load<T: DeserializeOwned>(&self, key: &str) -> (Option<T>, Lookup) {
        let Ok(text) = std::fs::read_to_string(self.path(key)) else { return (None, Lookup::Miss) };
        let Ok(entry) = serde_json::from_str::<Entry>(&text) else { return (None, Lookup::Corrupt) };
        if entry.key != key || sha256_hex(entry.payload.as_bytes()) != entry.checksum {
            return (None, Lookup::Corrupt);
        }
        match serde_json::from_str(&entry.payload) {
            Ok(v) => (Some(v), Lookup::Hit),
            Err(_) => (None, Lookup::Corrupt),
        }
    }

    pub fn store<T: Serialize>(&self, key: &str, value: &T) -> Result<()> {
        let payload = serde_json::to_string(value)?;
        let entry = Entry { key: key.to_string(), checksum: sha256_hex(payload.as_bytes()), payload };
        std::fs::write(self.path(key), serde_json::to_string(&entry)?)?;
        Ok(())
    }
}
