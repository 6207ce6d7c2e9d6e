//! On-disk cache of similarity matrices, keyed by content.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::preprocess::PreprocSetup;
use crate::similarity::{PairFlag, SimilarityFunctionId, SimilarityMatrix};

use super::config::Params;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Key over everything a similarity matrix depends on.
pub fn cache_key(
    input_digest: &str,
    setup: PreprocSetup,
    function: SimilarityFunctionId,
    params: &Params,
    tool_version: &str,
) -> String {
    let descriptor = serde_json::json!({
        "input": input_digest,
        "pp": setup.pp,
        "ms": setup.ms.index(),
        "function": function.slug(),
        "preproc": params.preproc(),
        "similarity": params.similarity(),
        "version": tool_version,
    });
    sha256_hex(descriptor.to_string().as_bytes())
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    function: SimilarityFunctionId,
    size: usize,
    /// Raw values as IEEE-754 bit patterns, row-major.
    raw_bits: Vec<u64>,
    flags: Vec<PairFlag>,
}

#[derive(Debug, Clone)]
pub struct MatrixCache {
    dir: PathBuf,
}

impl MatrixCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Unreadable or mismatching entries count as misses.
    pub fn load(&self, key: &str) -> Option<SimilarityMatrix> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        let entry: Entry = serde_json::from_str(&text).ok()?;
        if entry.key != key || entry.raw_bits.len() != entry.size * entry.size {
            return None;
        }
        let raw = Array2::from_shape_vec(
            (entry.size, entry.size),
            entry.raw_bits.into_iter().map(f64::from_bits).collect(),
        )
        .ok()?;
        Some(SimilarityMatrix::from_raw(entry.function, raw, entry.flags))
    }

    pub fn store(&self, key: &str, m: &SimilarityMatrix) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let entry = Entry {
            key: key.to_string(),
            function: m.function,
            size: m.size(),
            raw_bits: m.raw.iter().map(|v| v.to_bits()).collect(),
            flags: m.flags.clone(),
        };
        let tmp = self.dir.join(format!("{key}.tmp"));
        fs::write(&tmp, serde_json::to_vec(&entry).map_err(std::io::Error::other)?)?;
        fs::rename(tmp, self.path(key))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::MsLevel;

    const SETUP: PreprocSetup = PreprocSetup {
        pp: true,
        ms: MsLevel::Ms1,
    };

    #[test]
    fn key_sensitivity() {
        let p = Params::default();
        let k = cache_key("abc", SETUP, SimilarityFunctionId::Pearson, &p, "1.0");
        assert_eq!(k, cache_key("abc", SETUP, SimilarityFunctionId::Pearson, &p, "1.0"));
        let q = Params {
            sigma_ms: 1.5,
            ..p
        };
        assert_ne!(k, cache_key("abc", SETUP, SimilarityFunctionId::Pearson, &q, "1.0"));
        assert_ne!(k, cache_key("abc", SETUP, SimilarityFunctionId::Pearson, &p, "1.1"));
        assert_ne!(k, cache_key("abd", SETUP, SimilarityFunctionId::Pearson, &p, "1.0"));
        assert_ne!(k, cache_key("abc", SETUP, SimilarityFunctionId::Cosine, &p, "1.0"));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = MatrixCache::new(dir.path().join("c"));
        let raw = ndarray::array![[1.0, 0.1 + 0.2, f64::NAN], [0.1 + 0.2, 1.0, -1e-300], [f64::NAN, -1e-300, 1.0]];
        let flags = vec![PairFlag {
            i: 0,
            j: 2,
            reason: "x".into(),
        }];
        let m = SimilarityMatrix::from_raw(SimilarityFunctionId::Mssim, raw, flags);
        cache.store("k", &m).unwrap();
        let back = cache.load("k").unwrap();
        assert!(back.raw.iter().zip(&m.raw).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back.normalized, m.normalized);
        assert_eq!(back.flags, m.flags);
        assert!(cache.load("missing").is_none());
    }
}
