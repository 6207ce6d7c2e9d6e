//! Affinity propagation by damped responsibility/availability messages.

use ndarray::Array2;

use super::{ClusteringError, ClusteringParams, ClusteringResult, RawLabels};
use crate::similarity::SimilarityMatrix;

/// Offset per candidate index that breaks exact ties between exemplars in
/// favour of lower indices.
const TIE_BREAK: f64 = 1e-12;

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Message-passing state over an input similarity matrix whose diagonal
/// holds the preferences.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityState {
    pub s: Array2<f64>,
    pub r: Array2<f64>,
    pub a: Array2<f64>,
    pub damping: f64,
}

impl AffinityState {
    /// Preference is the median of the off-diagonal similarities.
    pub fn new(normalized: &Array2<f64>, damping: f64) -> Self {
        let n = normalized.nrows();
        let off: Vec<f64> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|p| normalized[p])
            .collect();
        let preference = median(off);
        let s = Array2::from_shape_fn((n, n), |(i, k)| {
            let v = if i == k { preference } else { normalized[(i, k)] };
            v - TIE_BREAK * k as f64
        });
        Self {
            s,
            r: Array2::zeros((n, n)),
            a: Array2::zeros((n, n)),
            damping,
        }
    }

    /// Undamped responsibilities from the current availabilities.
    pub fn computed_responsibility(&self) -> Array2<f64> {
        let n = self.s.nrows();
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            let (mut first, mut second, mut arg) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0);
            for k in 0..n {
                let v = self.a[(i, k)] + self.s[(i, k)];
                if v > first {
                    second = first;
                    first = v;
                    arg = k;
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..n {
                let max_other = if k == arg { second } else { first };
                out[(i, k)] = self.s[(i, k)] - max_other;
            }
        }
        out
    }

    /// Undamped availabilities from the current responsibilities.
    pub fn computed_availability(&self) -> Array2<f64> {
        let n = self.s.nrows();
        let mut out = Array2::zeros((n, n));
        for k in 0..n {
            let positive = |i: usize| if i == k { self.r[(k, k)] } else { self.r[(i, k)].max(0.0) };
            let column: f64 = (0..n).map(positive).sum();
            for i in 0..n {
                let v = column - positive(i);
                out[(i, k)] = if i == k { v } else { v.min(0.0) };
            }
        }
        out
    }

    /// One damped round: responsibilities first, then availabilities.
    pub fn step(&mut self) {
        let r = self.computed_responsibility();
        self.r.zip_mut_with(&r, |old, &new| *old = self.damping * *old + (1.0 - self.damping) * new);
        let a = self.computed_availability();
        self.a.zip_mut_with(&a, |old, &new| *old = self.damping * *old + (1.0 - self.damping) * new);
    }

    pub fn exemplars(&self) -> Vec<bool> {
        (0..self.s.nrows()).map(|k| self.a[(k, k)] + self.r[(k, k)] > 0.0).collect()
    }

    /// Assigns each point to its most similar exemplar, re-centres each
    /// cluster on its best internal point and assigns again.
    fn assign(&self, exemplars: &[usize]) -> Vec<usize> {
        let n = self.s.nrows();
        let closest = |centres: &[usize]| -> Vec<usize> {
            (0..n)
                .map(|i| match centres.iter().position(|&c| c == i) {
                    Some(pos) => pos,
                    None => {
                        let mut best = 0;
                        for (pos, &c) in centres.iter().enumerate() {
                            if self.s[(i, c)] > self.s[(i, centres[best])] {
                                best = pos;
                            }
                        }
                        best
                    }
                })
                .collect()
        };
        let first = closest(exemplars);
        let mut centres = exemplars.to_vec();
        for (pos, centre) in centres.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| first[i] == pos).collect();
            let mut best = (f64::NEG_INFINITY, *centre);
            for &j in &members {
                let total: f64 = members.iter().map(|&i| self.s[(i, j)]).sum();
                if total > best.0 {
                    best = (total, j);
                }
            }
            *centre = best.1;
        }
        let second = closest(&centres);
        second.into_iter().map(|pos| centres[pos]).collect()
    }
}

pub fn affinity_propagation(
    s: &SimilarityMatrix,
    params: &ClusteringParams,
) -> Result<ClusteringResult, ClusteringError> {
    let n = s.size();
    if n < 2 {
        return Err(ClusteringError::TooFewChannels(n));
    }
    let mut state = AffinityState::new(&s.normalized, params.ap_damping);
    let window = params.ap_convergence.max(1);
    let mut history: Vec<Vec<bool>> = Vec::with_capacity(window);
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..params.ap_max_iter {
        state.step();
        iterations = it + 1;
        let e = state.exemplars();
        if history.len() == window {
            history.remove(0);
        }
        history.push(e.clone());
        if history.len() == window && e.iter().any(|&x| x) && history.iter().all(|h| *h == e) {
            converged = true;
            break;
        }
    }
    let exemplars: Vec<usize> = state.exemplars().iter().enumerate().filter(|(_, &x)| x).map(|(k, _)| k).collect();
    let raw = if exemplars.is_empty() {
        RawLabels {
            labels: (0..n).collect(),
            noise: vec![true; n],
        }
    } else {
        RawLabels::clean(state.assign(&exemplars))
    };
    let mut result = ClusteringResult::from_raw(
        "affinity_propagation",
        raw,
        serde_json::json!({
            "damping": params.ap_damping,
            "convergence_iter": params.ap_convergence,
            "max_iter": params.ap_max_iter,
            "iterations": iterations,
        }),
    );
    if !converged {
        result.flags.push(format!("did not converge within {} iterations", params.ap_max_iter));
    }
    if exemplars.is_empty() {
        result.flags.push("no exemplars; all channels labelled noise".into());
    }
    Ok(result)
}
