use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::preprocess::{PreprocSetup, ScaleSpaceStack};

use super::{compare, prepare, SimilarityError, SimilarityFunctionId, SimilarityParams};

/// A channel pair whose similarity could not be computed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairFlag {
    pub i: usize,
    pub j: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub function: SimilarityFunctionId,
    pub setup: Option<PreprocSetup>,
    /// Function values; the diagonal holds self-similarities and failed
    /// pairs are NaN.
    pub raw: Array2<f64>,
    /// Off-diagonal min-max rescaling of `raw` to `[0, 1]`, diagonal 1,
    /// failed pairs 0.
    pub normalized: Array2<f64>,
    pub flags: Vec<PairFlag>,
}

impl SimilarityMatrix {
    /// Builds the normalized view from raw values. Flagged pairs are
    /// excluded from the rescaling range. If all valid off-diagonal values
    /// are equal, every valid pair maps to 1.
    pub fn from_raw(function: SimilarityFunctionId, raw: Array2<f64>, flags: Vec<PairFlag>) -> Self {
        let z = raw.nrows();
        let mut failed = Array2::from_elem((z, z), false);
        for f in &flags {
            failed[(f.i, f.j)] = true;
            failed[(f.j, f.i)] = true;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..z {
            for j in i + 1..z {
                let v = raw[(i, j)];
                if !failed[(i, j)] && v.is_finite() {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        let range = hi - lo;
        let normalized = Array2::from_shape_fn((z, z), |(i, j)| {
            let v = raw[(i, j)];
            if i == j {
                1.0
            } else if failed[(i, j)] || !v.is_finite() {
                0.0
            } else if range > 0.0 {
                ((v - lo) / range).clamp(0.0, 1.0)
            } else {
                1.0
            }
        });
        Self {
            function,
            setup: None,
            raw,
            normalized,
            flags,
        }
    }

    pub fn with_setup(mut self, setup: PreprocSetup) -> Self {
        self.setup = Some(setup);
        self
    }

    pub fn size(&self) -> usize {
        self.raw.nrows()
    }

    pub fn is_flagged(&self, i: usize, j: usize) -> bool {
        let (i, j) = (i.min(j), i.max(j));
        self.flags.iter().any(|f| f.i == i && f.j == j)
    }
}

/// Evaluates every pair `i <= j` once and mirrors it. Per-pair failures are
/// recorded as flags rather than aborting.
pub fn build_similarity_matrix(
    channels: &[ScaleSpaceStack],
    function: SimilarityFunctionId,
    params: &SimilarityParams,
) -> Result<SimilarityMatrix, SimilarityError> {
    let z = channels.len();
    if z < 2 {
        return Err(SimilarityError::TooFewChannels(z));
    }
    let prepared: Vec<_> = channels
        .par_iter()
        .map(|stack| prepare(function, stack, params))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..z).flat_map(|i| (i..z).map(move |j| (i, j))).collect();
    let values: Vec<Result<f64, SimilarityError>> = pairs
        .par_iter()
        .map(|&(i, j)| match (&prepared[i], &prepared[j]) {
            (Ok(a), Ok(b)) => compare(a, b, params),
            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
        })
        .collect();

    let mut raw = Array2::from_elem((z, z), f64::NAN);
    let mut flags = Vec::new();
    for (&(i, j), value) in pairs.iter().zip(values) {
        match value {
            Ok(v) => {
                raw[(i, j)] = v;
                raw[(j, i)] = v;
            }
            Err(e) if i != j => flags.push(PairFlag {
                i,
                j,
                reason: e.to_string(),
            }),
            Err(_) => {}
        }
    }
    Ok(SimilarityMatrix::from_raw(function, raw, flags))
}
