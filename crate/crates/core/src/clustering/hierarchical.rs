//! Agglomerative average-linkage (UPGMA) clustering with a statistical cut.

use serde::Serialize;

use super::{ClusteringError, ClusteringParams, ClusteringResult, DistanceMatrix, RawLabels};

/// One agglomeration step. Leaves are `0..n`; the cluster formed by merge
/// `k` gets id `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub size: usize,
}

/// Full UPGMA merge trace. Ties go to the pair with the lowest ids.
pub fn upgma(d: &DistanceMatrix) -> Vec<Merge> {
    let n = d.size();
    let total = 2 * n - 1;
    let mut dist = vec![vec![f64::INFINITY; total]; total];
    for (i, row) in dist.iter_mut().enumerate().take(n) {
        for (j, cell) in row.iter_mut().enumerate().take(n) {
            *cell = d.get(i, j);
        }
    }
    let mut size = vec![1usize; total];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for step in 0..n.saturating_sub(1) {
        let mut best = (f64::INFINITY, 0, 0);
        for (x, &a) in active.iter().enumerate() {
            for &b in &active[x + 1..] {
                if dist[a][b] < best.0 {
                    best = (dist[a][b], a, b);
                }
            }
        }
        let (distance, a, b) = best;
        let new = n + step;
        size[new] = size[a] + size[b];
        active.retain(|&k| k != a && k != b);
        let (wa, wb) = (size[a] as f64, size[b] as f64);
        for &k in &active {
            let v = (wa * dist[a][k] + wb * dist[b][k]) / (wa + wb);
            dist[new][k] = v;
            dist[k][new] = v;
        }
        active.push(new);
        merges.push(Merge {
            a,
            b,
            distance,
            size: size[new],
        });
    }
    merges
}

/// `mean + c * std` of the merge distances (population deviation), or
/// `None` when all merge distances coincide.
pub fn cut_threshold(merges: &[Merge], c: f64) -> Option<f64> {
    if merges.is_empty() {
        return None;
    }
    let n = merges.len() as f64;
    let mean = merges.iter().map(|m| m.distance).sum::<f64>() / n;
    let var = merges.iter().map(|m| (m.distance - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std <= 1e-12 * mean.abs().max(1.0) {
        return None;
    }
    Some(mean + c * std)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Leaves grouped by all merges with distance strictly below `threshold`.
pub fn cut_merges(merges: &[Merge], n: usize, threshold: f64) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n + merges.len()).collect();
    for (k, m) in merges.iter().enumerate() {
        if m.distance < threshold {
            let new = n + k;
            let ra = find(&mut parent, m.a);
            let rb = find(&mut parent, m.b);
            parent[ra] = new;
            parent[rb] = new;
        }
    }
    (0..n).map(|i| find(&mut parent, i)).collect()
}

pub fn hierarchical_average_linkage(
    d: &DistanceMatrix,
    params: &ClusteringParams,
) -> Result<ClusteringResult, ClusteringError> {
    let n = d.size();
    if n < 2 {
        return Err(ClusteringError::TooFewChannels(n));
    }
    let merges = upgma(d);
    let threshold = cut_threshold(&merges, params.hierarchical_c);
    let labels = match threshold {
        Some(t) => cut_merges(&merges, n, t),
        None => vec![0; n],
    };
    let mut result = ClusteringResult::from_raw(
        "hierarchical",
        RawLabels::clean(labels),
        serde_json::json!({ "c": params.hierarchical_c, "threshold": threshold }),
    );
    result.merges = merges;
    if threshold.is_none() {
        result.flags.push("all merge distances equal; single cluster".into());
    }
    Ok(result)
}
