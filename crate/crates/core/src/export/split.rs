//! Train/validation/test splits and the dataset manifest.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::kfrg::read_kfrg;
use super::record::{Arch, DatasetRecord};
use crate::error::{Error, Result};
use crate::pipeline::{check_fractions, hex};
use crate::rng::rng_from_seed;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl SplitManifest {
    pub fn split_of(&self, id: &str) -> Option<Split> {
        if self.train.iter().any(|v| v == id) {
            Some(Split::Train)
        } else if self.validation.iter().any(|v| v == id) {
            Some(Split::Validation)
        } else if self.test.iter().any(|v| v == id) {
            Some(Split::Test)
        } else {
            None
        }
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.validation.len(), self.test.len())
    }
}

/// Shuffle `ids` with `seed` and cut them into train/validation/test by
/// `fractions` (rounded; the test split takes the remainder).
pub fn make_split(ids: &[String], fractions: [f64; 3], seed: u64) -> Result<SplitManifest> {
    if ids.is_empty() {
        return Err(Error::invalid("cannot split an empty id list"));
    }
    check_fractions(fractions)?;
    let mut shuffled = ids.to_vec();
    shuffled.sort();
    shuffled.dedup();
    if shuffled.len() != ids.len() {
        return Err(Error::invalid("video ids must be unique"));
    }
    shuffled.shuffle(&mut rng_from_seed(seed));
    let n = shuffled.len();
    let n_train = ((fractions[0] * n as f64).round() as usize).min(n);
    let n_val = ((fractions[1] * n as f64).round() as usize).min(n - n_train);
    let mut test = shuffled.split_off(n_train + n_val);
    let mut validation = shuffled.split_off(n_train);
    let mut train = shuffled;
    train.sort();
    validation.sort();
    test.sort();
    Ok(SplitManifest {
        train,
        validation,
        test,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    pub video_id: String,
    pub arch: Arch,
    pub window_index: usize,
    pub split: Split,
    /// SHA-256 of the file bytes.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub split: SplitManifest,
    pub records: Vec<ManifestEntry>,
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Missing(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    Ok(hex(&Sha256::digest(&bytes)))
}

pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Missing(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    let m: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if m.version != MANIFEST_VERSION {
        return Err(Error::Version {
            found: m.version,
            expected: MANIFEST_VERSION,
        });
    }
    Ok(m)
}

/// Load the records of a manifest, optionally restricted to one split and
/// architecture. File hashes and payload checksums are verified.
pub fn load_kfrg_dataset(manifest_path: &Path, split: Option<Split>, arch: Option<Arch>) -> Result<Vec<DatasetRecord>> {
    let m = read_manifest(manifest_path)?;
    let root = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let mut out = Vec::new();
    for e in &m.records {
        if split.is_some_and(|s| s != e.split) || arch.is_some_and(|a| a != e.arch) {
            continue;
        }
        let path = root.join(&e.path);
        let digest = file_sha256(&path)?;
        if digest != e.sha256 {
            return Err(Error::Format(format!(
                "{} does not match its manifest hash",
                path.display()
            )));
        }
        let rec = DatasetRecord::from_kfrg(&read_kfrg(&path)?)?;
        if rec.meta.config_hash != m.config_hash {
            return Err(Error::Format(format!(
                "{} was built with a different config",
                path.display()
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("video_{i:04}")).collect()
    }

    #[test]
    fn default_fractions_on_692_videos() {
        let s = make_split(&ids(692), [0.75, 0.10, 0.15], 0).unwrap();
        assert_eq!(s.sizes(), (519, 69, 104));
    }

    #[test]
    fn degenerate_and_invalid_splits() {
        let s = make_split(&ids(7), [1.0, 0.0, 0.0], 3).unwrap();
        assert_eq!(s.sizes(), (7, 0, 0));
        assert!(make_split(&[], [1.0, 0.0, 0.0], 0).is_err());
        assert!(make_split(&ids(5), [0.5, 0.5, 0.5], 0).is_err());
        let dup = vec!["a".to_string(), "a".to_string()];
        assert!(make_split(&dup, [1.0, 0.0, 0.0], 0).is_err());
    }

    #[test]
    fn seeded_and_disjoint() {
        let all = ids(50);
        let a = make_split(&all, [0.6, 0.2, 0.2], 11).unwrap();
        assert_eq!(a, make_split(&all, [0.6, 0.2, 0.2], 11).unwrap());
        assert_ne!(a, make_split(&all, [0.6, 0.2, 0.2], 12).unwrap());
        let mut union: Vec<String> = a.train.iter().chain(&a.validation).chain(&a.test).cloned().collect();
        union.sort();
        assert_eq!(union, all);
    }
}
