//! Cluster-validity indices and their rank fusion into the SoRC score.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{ClusteringMethod, DistanceMatrix};
use crate::preprocess::{MsLevel, PreprocSetup};
use crate::similarity::SimilarityFunctionId;

/// Silhouette assigned to degenerate partitions before ranking.
pub const DEGENERATE_SCS: f64 = -1.0;
/// Calinski-Harabasz value assigned to degenerate partitions before ranking.
pub const DEGENERATE_CHI: f64 = 0.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("partition with {clusters} clusters over {points} points is degenerate")]
    DegeneratePartition { clusters: usize, points: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// One point of the evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PipelineSetup {
    pub pp: bool,
    pub ms: MsLevel,
    pub function: SimilarityFunctionId,
    pub clustering: ClusteringMethod,
}

impl PipelineSetup {
    pub fn preproc(&self) -> PreprocSetup {
        PreprocSetup { pp: self.pp, ms: self.ms }
    }

    /// Report label `[PP -- ]kMS -- Function`.
    pub fn label(&self) -> String {
        format!("{} -- {}", self.preproc(), self.function.display_name())
    }
}

impl fmt::Display for PipelineSetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.label(), self.clustering.display_name())
    }
}

fn distinct(labels: &[usize]) -> Vec<usize> {
    let mut ids = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    ids
}

fn check_partition(labels: &[usize]) -> Result<Vec<usize>, ScoringError> {
    let ids = distinct(labels);
    if ids.len() < 2 || ids.len() >= labels.len() {
        return Err(ScoringError::DegeneratePartition {
            clusters: ids.len(),
            points: labels.len(),
        });
    }
    Ok(ids)
}

/// Mean silhouette coefficient. Members of singleton clusters contribute 0.
pub fn silhouette(d: &DistanceMatrix, labels: &[usize]) -> Result<f64, ScoringError> {
    let n = labels.len();
    if d.size() != n {
        return Err(ScoringError::LengthMismatch(d.size(), n));
    }
    let ids = check_partition(labels)?;
    let mut total = 0.0;
    for i in 0..n {
        let mut own = (0.0, 0usize);
        let mut other = vec![(0.0, 0usize); ids.len()];
        for j in 0..n {
            if j == i {
                continue;
            }
            if labels[j] == labels[i] {
                own.0 += d.get(i, j);
                own.1 += 1;
            } else {
                let c = ids.binary_search(&labels[j]).unwrap();
                other[c].0 += d.get(i, j);
                other[c].1 += 1;
            }
        }
        if own.1 == 0 {
            continue;
        }
        let a = own.0 / own.1 as f64;
        let b = other
            .iter()
            .filter(|(_, count)| *count > 0)
            .map(|(sum, count)| sum / *count as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiValue {
    pub value: f64,
    /// Within-cluster dispersion is zero; `value` is `f64::MAX`.
    pub exact_fit: bool,
}

fn centroid<'a>(points: impl Iterator<Item = &'a Vec<f64>>, dim: usize) -> Vec<f64> {
    let mut sum = vec![0.0; dim];
    let mut count = 0usize;
    for p in points {
        sum.iter_mut().zip(p).for_each(|(s, x)| *s += x);
        count += 1;
    }
    sum.iter_mut().for_each(|s| *s /= count as f64);
    sum
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Calinski-Harabasz index of `points` under `labels`.
pub fn calinski_harabasz(points: &[Vec<f64>], labels: &[usize]) -> Result<ChiValue, ScoringError> {
    let n = labels.len();
    if points.len() != n {
        return Err(ScoringError::LengthMismatch(points.len(), n));
    }
    let ids = check_partition(labels)?;
    let dim = points[0].len();
    let overall = centroid(points.iter(), dim);
    let mut between = 0.0;
    let mut within = 0.0;
    for &id in &ids {
        let members: Vec<&Vec<f64>> = points.iter().zip(labels).filter(|(_, &l)| l == id).map(|(p, _)| p).collect();
        let c = centroid(members.iter().copied(), dim);
        between += members.len() as f64 * squared_distance(&c, &overall);
        within += members.iter().map(|p| squared_distance(p, &c)).sum::<f64>();
    }
    if within == 0.0 {
        return Ok(ChiValue {
            value: f64::MAX,
            exact_fit: true,
        });
    }
    let k = ids.len() as f64;
    Ok(ChiValue {
        value: (between / (k - 1.0)) / (within / (n as f64 - k)),
        exact_fit: false,
    })
}

/// Both indices of one clustering, with sentinels for degenerate ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterIndices {
    pub scs: f64,
    pub chi: f64,
    pub degenerate: bool,
    pub exact_fit: bool,
}

impl ClusterIndices {
    pub fn degenerate() -> Self {
        Self {
            scs: DEGENERATE_SCS,
            chi: DEGENERATE_CHI,
            degenerate: true,
            exact_fit: false,
        }
    }
}

/// Silhouette on distances and CHI on the vectorized channels.
pub fn cluster_indices(d: &DistanceMatrix, points: &[Vec<f64>], labels: &[usize]) -> ClusterIndices {
    match (silhouette(d, labels), calinski_harabasz(points, labels)) {
        (Ok(scs), Ok(chi)) if scs.is_finite() && chi.value.is_finite() => ClusterIndices {
            scs,
            chi: chi.value,
            degenerate: false,
            exact_fit: chi.exact_fit,
        },
        _ => ClusterIndices::degenerate(),
    }
}

/// Ascending mean ranks starting at 1; tied values share their mean rank.
pub fn mean_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let mean = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = mean;
        }
        start = end;
    }
    ranks
}

/// Mean ranks divided by `n`, so the best value maps to 1.
pub fn normalized_mean_ranks(values: &[f64], higher_is_better: bool) -> Vec<f64> {
    let keyed: Vec<f64> = if higher_is_better {
        values.to_vec()
    } else {
        values.iter().map(|v| -v).collect()
    };
    let n = values.len() as f64;
    mean_ranks(&keyed).into_iter().map(|r| r / n).collect()
}

pub fn sorc_score(scs_ranks: &[f64], chi_ranks: &[f64]) -> Result<Vec<f64>, ScoringError> {
    if scs_ranks.len() != chi_ranks.len() {
        return Err(ScoringError::LengthMismatch(scs_ranks.len(), chi_ranks.len()));
    }
    Ok(scs_ranks.iter().zip(chi_ranks).map(|(a, b)| (a + b) / 2.0).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedIndices {
    pub scs_rank: f64,
    pub chi_rank: f64,
    pub sorc: f64,
}

/// Ranks a group of clusterings against each other. Degenerate entries are
/// keyed below every finite value, so they always rank last.
pub fn rank_group(indices: &[ClusterIndices]) -> Vec<RankedIndices> {
    let key = |v: f64, degenerate: bool| if degenerate || v.is_nan() { f64::NEG_INFINITY } else { v };
    let scs: Vec<f64> = indices.iter().map(|x| key(x.scs, x.degenerate)).collect();
    let chi: Vec<f64> = indices.iter().map(|x| key(x.chi, x.degenerate)).collect();
    let scs_ranks = normalized_mean_ranks(&scs, true);
    let chi_ranks = normalized_mean_ranks(&chi, true);
    let sorc = sorc_score(&scs_ranks, &chi_ranks).expect("equal lengths");
    (0..indices.len())
        .map(|k| RankedIndices {
            scs_rank: scs_ranks[k],
            chi_rank: chi_ranks[k],
            sorc: sorc[k],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub setup: PipelineSetup,
    pub scs_val: f64,
    pub chi_val: f64,
    pub scs_rank: f64,
    pub chi_rank: f64,
    pub sorc: f64,
    pub degenerate: bool,
}

/// Scores setups that share one clustering method.
pub fn score_setups(setups: &[PipelineSetup], indices: &[ClusterIndices]) -> Result<Vec<ScoreRecord>, ScoringError> {
    if setups.len() != indices.len() {
        return Err(ScoringError::LengthMismatch(setups.len(), indices.len()));
    }
    Ok(setups
        .iter()
        .zip(indices)
        .zip(rank_group(indices))
        .map(|((&setup, x), r)| ScoreRecord {
            setup,
            scs_val: x.scs,
            chi_val: x.chi,
            scs_rank: r.scs_rank,
            chi_rank: r.chi_rank,
            sorc: r.sorc,
            degenerate: x.degenerate,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn paper_tie_example() {
        let v = [1.0, 0.7, 0.7, 0.7, 0.4];
        assert_eq!(mean_ranks(&v), vec![5.0, 3.0, 3.0, 3.0, 1.0]);
        assert_eq!(normalized_mean_ranks(&v, true), vec![1.0, 0.6, 0.6, 0.6, 0.2]);
    }

    #[test]
    fn rank_cases() {
        assert_eq!(normalized_mean_ranks(&[0.1, 0.2, 0.3], true), vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
        assert_eq!(normalized_mean_ranks(&[0.5; 4], true), vec![2.5 / 4.0; 4]);
        assert_eq!(normalized_mean_ranks(&[0.1, 0.2], false), vec![1.0, 0.5]);
    }

    #[test]
    fn sorc_cases() {
        assert_eq!(sorc_score(&[1.0], &[1.0]).unwrap(), vec![1.0]);
        assert_eq!(sorc_score(&[1.0], &[0.2]).unwrap(), vec![0.6]);
        assert!(sorc_score(&[1.0], &[]).is_err());
    }

    #[test]
    fn separated_blocks_have_unit_silhouette() {
        let d = DistanceMatrix::new(Array2::from_shape_fn((4, 4), |(i, j)| if (i < 2) == (j < 2) { 0.0 } else { 1.0 }))
            .unwrap();
        assert_eq!(silhouette(&d, &[1, 1, 2, 2]).unwrap(), 1.0);
        assert!(matches!(silhouette(&d, &[1; 4]), Err(ScoringError::DegeneratePartition { .. })));
        assert!(matches!(silhouette(&d, &[1, 2, 3, 4]), Err(ScoringError::DegeneratePartition { .. })));
    }

    #[test]
    fn chi_one_dimensional_hand_case() {
        let points = vec![vec![0.0], vec![0.1], vec![1.0], vec![1.1]];
        // centroids 0.05 and 1.05 around 0.55: B = 4 * 0.25 = 1, W = 4 * 0.0025
        let expected = (1.0 / 1.0) / (0.01 / 2.0);
        let got = calinski_harabasz(&points, &[1, 1, 2, 2]).unwrap();
        assert!((got.value - expected).abs() < 1e-9 * expected);
        let exact = calinski_harabasz(&[vec![0.0], vec![0.0], vec![1.0]], &[1, 1, 2]).unwrap();
        assert!(exact.exact_fit && exact.value == f64::MAX);
    }

    #[test]
    fn degenerate_rows_rank_last() {
        let mut xs = vec![
            ClusterIndices {
                scs: -0.9,
                chi: 0.0,
                degenerate: false,
                exact_fit: false,
            };
            2
        ];
        xs.push(ClusterIndices::degenerate());
        let r = rank_group(&xs);
        assert!(r[2].scs_rank < r[0].scs_rank && r[2].chi_rank < r[0].chi_rank);
    }

    #[test]
    fn labels_format() {
        let s = PipelineSetup {
            pp: true,
            ms: MsLevel::Ms1,
            function: SimilarityFunctionId::Pearson,
            clustering: ClusteringMethod::Hierarchical,
        };
        assert_eq!(s.label(), "PP -- 1MS -- Pearson");
        let s = PipelineSetup { pp: false, ..s };
        assert_eq!(s.label(), "1MS -- Pearson");
    }
}
