//! On-disk cache of F* keyed by (dataset hash, partition seed, μ).

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use anyhow::{Context, Result};
use d2dsgd_core::learner::{Dataset, FStar};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::hex;

/// Bump when the loss, the data pipeline or the F* solver changes; cached
/// entries from other versions are ignored.
pub const LEARNER_VERSION: u32 = 1;

pub fn dataset_hash(data: &Dataset) -> String {
    let mut h = Sha256::new();
    h.update((data.feature_dim() as u64).to_le_bytes());
    h.update((data.classes() as u64).to_le_bytes());
    for v in data.features() {
        h.update(v.to_bits().to_le_bytes());
    }
    for &y in data.labels() {
        h.update((y as u64).to_le_bytes());
    }
    hex(&h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    pub dataset_hash: String,
    pub partition_seed: u64,
    pub mu: f64,
    pub learner_version: u32,
}

impl CacheKey {
    pub fn new(dataset_hash: String, partition_seed: u64, mu: f64) -> Self {
        Self { dataset_hash, partition_seed, mu, learner_version: LEARNER_VERSION }
    }

    fn file_name(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.dataset_hash.as_bytes());
        h.update(self.partition_seed.to_le_bytes());
        h.update(self.mu.to_bits().to_le_bytes());
        h.update(self.learner_version.to_le_bytes());
        format!("fstar-{}.json", &hex(&h.finalize())[..16])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Entry {
    key: CacheKey,
    value: f64,
    iterations: usize,
}

pub struct FStarCache {
    dir: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl FStarCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn lookup(&self, key: &CacheKey) -> Option<f64> {
        let text = std::fs::read_to_string(self.dir.join(key.file_name())).ok()?;
        let entry: Entry = serde_json::from_str(&text).ok()?;
        (entry.key == *key && entry.value.is_finite()).then_some(entry.value)
    }

    pub fn store(&self, key: &CacheKey, fstar: &FStar) -> Result<()> {
        std::fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let entry = Entry { key: key.clone(), value: fstar.value, iterations: fstar.iterations };
        let path = self.dir.join(key.file_name());
        // write-then-rename so concurrent sweep cells never read a torn file
        let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        let tmp = path.with_extension(format!("{}.{n}.tmp", std::process::id()));
        std::fs::write(&tmp, serde_json::to_string_pretty(&entry)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// Cached value, or `compute` stored for next time. The flag tells
    /// whether the value came from disk.
    pub fn get_or_compute(&self, key: &CacheKey, compute: impl FnOnce() -> Result<FStar>) -> Result<(f64, bool)> {
        if let Some(v) = self.lookup(key) {
            return Ok((v, true));
        }
        let fs = compute()?;
        self.store(key, &fs)?;
        Ok((fs.value, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fstar(v: f64) -> FStar {
        FStar { value: v, theta: vec![], iterations: 3 }
    }

    #[test]
    fn hit_after_store_and_miss_on_other_keys() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FStarCache::new(dir.path());
        let key = CacheKey::new("abc".into(), 3, 0.002);
        let (v, hit) = cache.get_or_compute(&key, || Ok(fstar(0.5))).unwrap();
        assert_eq!((v, hit), (0.5, false));
        let (v, hit) = cache.get_or_compute(&key, || panic!("recomputed")).unwrap();
        assert_eq!((v, hit), (0.5, true));
        for other in [
            CacheKey::new("abd".into(), 3, 0.002),
            CacheKey::new("abc".into(), 4, 0.002),
            CacheKey::new("abc".into(), 3, 0.001),
            CacheKey { learner_version: LEARNER_VERSION + 1, ..key.clone() },
        ] {
            assert_eq!(cache.lookup(&other), None);
        }
    }

    #[test]
    fn corrupt_entries_are_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FStarCache::new(dir.path());
        let key = CacheKey::new("x".into(), 0, 0.1);
        std::fs::write(dir.path().join(key.file_name()), "{not json").unwrap();
        assert_eq!(cache.get_or_compute(&key, || Ok(fstar(1.5))).unwrap(), (1.5, false));
    }

    #[test]
    fn dataset_hash_sees_labels() {
        let a = Dataset::new(vec![0.0, 1.0], vec![0, 1], 1, 2).unwrap();
        let b = Dataset::new(vec![0.0, 1.0], vec![1, 0], 1, 2).unwrap();
        assert_ne!(dataset_hash(&a), dataset_hash(&b));
        assert_eq!(dataset_hash(&a), dataset_hash(&a.clone()));
    }
}
