//! Clustering of channels from a similarity matrix.

mod affinity;
mod community;
mod hierarchical;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::similarity::SimilarityMatrix;

pub use affinity::{affinity_propagation, AffinityState};
pub use community::{community_detection, edge_threshold, greedy_modularity, modularity};
pub use hierarchical::{cut_merges, cut_threshold, hierarchical_average_linkage, upgma, Merge};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusteringMethod {
    AffinityPropagation,
    Hierarchical,
    Community,
}

impl ClusteringMethod {
    pub const ALL: [ClusteringMethod; 3] = [Self::AffinityPropagation, Self::Hierarchical, Self::Community];

    pub fn slug(self) -> &'static str {
        match self {
            Self::AffinityPropagation => "affinity_propagation",
            Self::Hierarchical => "hierarchical",
            Self::Community => "community",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Self::AffinityPropagation => "Affinity Propagation",
            Self::Hierarchical => "Hierarchical",
            Self::Community => "Community Detection",
        }
    }
}

impl fmt::Display for ClusteringMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for ClusteringMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "affinity_propagation" | "ap" => Ok(Self::AffinityPropagation),
            "hierarchical" => Ok(Self::Hierarchical),
            "community" => Ok(Self::Community),
            _ => Err(format!("unknown clustering method {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringParams {
    /// Multiple of the standard deviation added to the mean cut distance.
    pub hierarchical_c: f64,
    pub ap_convergence: usize,
    pub ap_max_iter: usize,
    pub ap_damping: f64,
}

impl Default for ClusteringParams {
    fn default() -> Self {
        Self {
            hierarchical_c: 1.0,
            ap_convergence: 15,
            ap_max_iter: 200,
            ap_damping: 0.5,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusteringError {
    #[error("need at least two channels, got {0}")]
    TooFewChannels(usize),
    #[error("distance matrix is {0}")]
    InvalidDistance(&'static str),
    #[error("{len} labels for {expected} channels")]
    LabelCount { len: usize, expected: usize },
}

/// `d = 1 - s` over the normalized similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(Array2<f64>);

impl DistanceMatrix {
    pub fn new(d: Array2<f64>) -> Result<Self, ClusteringError> {
        let (r, c) = d.dim();
        if r != c {
            return Err(ClusteringError::InvalidDistance("not square"));
        }
        for i in 0..r {
            if d[(i, i)] != 0.0 {
                return Err(ClusteringError::InvalidDistance("nonzero on the diagonal"));
            }
            for j in 0..r {
                let v = d[(i, j)];
                if !(v >= 0.0) {
                    return Err(ClusteringError::InvalidDistance("negative or NaN"));
                }
                if v != d[(j, i)] {
                    return Err(ClusteringError::InvalidDistance("asymmetric"));
                }
            }
        }
        Ok(Self(d))
    }

    pub fn from_similarity(s: &SimilarityMatrix) -> Self {
        let n = s.normalized.nrows();
        Self(Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                0.0
            } else {
                (1.0 - s.normalized[(i, j)]).max(0.0)
            }
        }))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }
}

/// Cluster assignment before renumbering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLabels {
    pub labels: Vec<usize>,
    /// Channels that belong to no cluster.
    pub noise: Vec<bool>,
}

impl RawLabels {
    pub fn clean(labels: Vec<usize>) -> Self {
        let noise = vec![false; labels.len()];
        Self { labels, noise }
    }
}

/// Renumbers clusters to `1..=K` by first occurrence; each noise channel
/// then gets its own label `K+1, K+2, ...` in channel order.
pub fn normalize_labels(raw: &RawLabels) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    let mut out = vec![0; raw.labels.len()];
    for (k, (&l, &noise)) in raw.labels.iter().zip(&raw.noise).enumerate() {
        if !noise {
            let next = map.len() + 1;
            out[k] = *map.entry(l).or_insert(next);
        }
    }
    let mut next = map.len();
    for (k, &noise) in raw.noise.iter().enumerate() {
        if noise {
            next += 1;
            out[k] = next;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringResult {
    pub method: String,
    /// Cluster ids starting at 1.
    pub labels: Vec<usize>,
    pub noise: Vec<bool>,
    pub params: serde_json::Value,
    /// Merge trace; only filled by hierarchical clustering.
    pub merges: Vec<Merge>,
    /// Non-fatal conditions such as non-convergence.
    pub flags: Vec<String>,
}

impl ClusteringResult {
    pub fn from_raw(method: impl Into<String>, raw: RawLabels, params: serde_json::Value) -> Self {
        Self {
            method: method.into(),
            labels: normalize_labels(&raw),
            noise: raw.noise,
            params,
            merges: Vec::new(),
            flags: Vec::new(),
        }
    }

    /// Number of non-noise clusters.
    pub fn cluster_count(&self) -> usize {
        let mut ids: Vec<usize> = self
            .labels
            .iter()
            .zip(&self.noise)
            .filter(|(_, &n)| !n)
            .map(|(&l, _)| l)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }
}

/// Extension point for additional clustering algorithms.
pub trait Clusterer: Send + Sync {
    fn name(&self) -> String;
    fn cluster(&self, s: &SimilarityMatrix) -> Result<RawLabels, ClusteringError>;

    fn run(&self, s: &SimilarityMatrix) -> Result<ClusteringResult, ClusteringError> {
        let raw = self.cluster(s)?;
        if raw.labels.len() != s.size() || raw.noise.len() != s.size() {
            return Err(ClusteringError::LabelCount {
                len: raw.labels.len(),
                expected: s.size(),
            });
        }
        Ok(ClusteringResult::from_raw(self.name(), raw, serde_json::Value::Null))
    }
}

/// Runs one of the built-in methods.
pub fn run_clustering(
    method: ClusteringMethod,
    s: &SimilarityMatrix,
    params: &ClusteringParams,
) -> Result<ClusteringResult, ClusteringError> {
    match method {
        ClusteringMethod::AffinityPropagation => affinity_propagation(s, params),
        ClusteringMethod::Hierarchical => hierarchical_average_linkage(&DistanceMatrix::from_similarity(s), params),
        ClusteringMethod::Community => community_detection(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noisy(labels: Vec<usize>, noise: Vec<bool>) -> RawLabels {
        RawLabels { labels, noise }
    }

    #[test]
    fn label_normalization() {
        assert_eq!(normalize_labels(&RawLabels::clean(vec![0, 0, 1, 1])), vec![1, 1, 2, 2]);
        assert_eq!(normalize_labels(&RawLabels::clean(vec![5, 5, 2])), vec![1, 1, 2]);
        assert_eq!(
            normalize_labels(&noisy(vec![0, 9, 0, 9], vec![false, true, false, true])),
            vec![1, 2, 1, 3]
        );
    }

    #[test]
    fn distance_validation() {
        assert!(DistanceMatrix::new(ndarray::array![[0.0, 1.0], [1.0, 0.0]]).is_ok());
        assert!(DistanceMatrix::new(ndarray::array![[0.0, 1.0], [0.5, 0.0]]).is_err());
        assert!(DistanceMatrix::new(ndarray::array![[0.1, 1.0], [1.0, 0.0]]).is_err());
        assert!(DistanceMatrix::new(ndarray::array![[0.0, -1.0], [-1.0, 0.0]]).is_err());
    }

    struct Halves;

    impl Clusterer for Halves {
        fn name(&self) -> String {
            "halves".into()
        }

        fn cluster(&self, s: &SimilarityMatrix) -> Result<RawLabels, ClusteringError> {
            let n = s.size();
            Ok(RawLabels::clean((0..n).map(|i| 7 * (i * 2 / n)).collect()))
        }
    }

    #[test]
    fn plug_in_results_are_normalized() {
        let s = SimilarityMatrix::from_raw(
            crate::similarity::SimilarityFunctionId::Pearson,
            Array2::eye(4),
            vec![],
        );
        let r = Halves.run(&s).unwrap();
        assert_eq!(r.labels, vec![1, 1, 2, 2]);
        assert_eq!(r.method, "halves");
    }
}
