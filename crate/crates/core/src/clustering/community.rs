//! Community detection on a thresholded similarity graph by greedy
//! modularity maximization.

use ndarray::Array2;

use super::{ClusteringError, ClusteringResult, RawLabels};
use crate::similarity::SimilarityMatrix;

/// `mean + std` (population) of the off-diagonal similarities.
pub fn edge_threshold(s: &Array2<f64>) -> f64 {
    let n = s.nrows();
    let values: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|p| s[p]).collect();
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
    mean + var.sqrt()
}

fn degrees(adj: &Array2<bool>) -> Vec<usize> {
    adj.rows().into_iter().map(|r| r.iter().filter(|&&e| e).count()).collect()
}

/// Newman modularity of an unweighted graph partition.
pub fn modularity(adj: &Array2<bool>, labels: &[usize]) -> f64 {
    let deg = degrees(adj);
    let m2 = deg.iter().sum::<usize>() as f64;
    if m2 == 0.0 {
        return 0.0;
    }
    let n = labels.len();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                let a = if adj[(i, j)] { 1.0 } else { 0.0 };
                q += a - (deg[i] * deg[j]) as f64 / m2;
            }
        }
    }
    q / m2
}

/// Greedy agglomeration of the non-isolated vertices: repeatedly merges the
/// connected pair of communities with the largest positive modularity gain,
/// ties going to the lowest pair. Returns one community id per vertex, or
/// `None` for isolated vertices.
pub fn greedy_modularity(adj: &Array2<bool>) -> Vec<Option<usize>> {
    let n = adj.nrows();
    let deg = degrees(adj);
    let m = deg.iter().sum::<usize>() as f64 / 2.0;
    let mut communities: Vec<Vec<usize>> = (0..n).filter(|&v| deg[v] > 0).map(|v| vec![v]).collect();
    loop {
        let k = communities.len();
        let mut best: Option<(f64, usize, usize)> = None;
        for x in 0..k {
            for y in x + 1..k {
                let between = communities[x]
                    .iter()
                    .flat_map(|&u| communities[y].iter().map(move |&v| (u, v)))
                    .filter(|&p| adj[p])
                    .count();
                if between == 0 {
                    continue;
                }
                let ax: usize = communities[x].iter().map(|&v| deg[v]).sum();
                let ay: usize = communities[y].iter().map(|&v| deg[v]).sum();
                let gain = between as f64 / m - (ax * ay) as f64 / (2.0 * m * m);
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, x, y));
                }
            }
        }
        match best {
            Some((gain, x, y)) if gain > 0.0 => {
                let moved = communities.remove(y);
                communities[x].extend(moved);
            }
            _ => break,
        }
    }
    let mut labels = vec![None; n];
    for (c, members) in communities.iter().enumerate() {
        for &v in members {
            labels[v] = Some(c);
        }
    }
    labels
}

pub fn community_detection(s: &SimilarityMatrix) -> Result<ClusteringResult, ClusteringError> {
    let n = s.size();
    if n < 2 {
        return Err(ClusteringError::TooFewChannels(n));
    }
    let threshold = edge_threshold(&s.normalized);
    let adj = Array2::from_shape_fn((n, n), |(i, j)| i != j && s.normalized[(i, j)] > threshold);
    let communities = greedy_modularity(&adj);
    let raw = RawLabels {
        labels: communities.iter().enumerate().map(|(v, c)| c.unwrap_or(n + v)).collect(),
        noise: communities.iter().map(Option::is_none).collect(),
    };
    let edges = adj.iter().filter(|&&e| e).count() / 2;
    let mut result = ClusteringResult::from_raw(
        "community",
        raw,
        serde_json::json!({ "threshold": threshold, "edges": edges }),
    );
    if edges == 0 {
        result.flags.push("empty graph; all channels labelled noise".into());
    }
    Ok(result)
}
