//! Functions of the spectral vectors alone, without spatial context.

use std::f64::consts::PI;

use super::SimilarityError;

/// Mean-centred values of one level with their population deviation.
#[derive(Debug, Clone, PartialEq)]
pub(super) struct Centered {
    values: Vec<f64>,
    sigma: f64,
}

impl Centered {
    pub(super) fn new(mut values: Vec<f64>, level: usize) -> Result<Self, SimilarityError> {
        // the rounded mean of a constant vector need not equal its entries
        if values.iter().all(|&v| v == values[0]) {
            return Err(SimilarityError::ConstantInput { level });
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        values.iter_mut().for_each(|v| *v -= mean);
        let sigma = (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        if sigma == 0.0 {
            return Err(SimilarityError::ConstantInput { level });
        }
        Ok(Self { values, sigma })
    }
}

pub(super) fn pearson_level(a: &Centered, b: &Centered) -> f64 {
    let n = a.values.len() as f64;
    let cov = dot(&a.values, &b.values) / n;
    cov / (a.sigma * b.sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub(super) struct Normed {
    values: Vec<f64>,
    norm: f64,
    signed: bool,
}

impl Normed {
    pub(super) fn new(values: Vec<f64>, level: usize) -> Result<Self, SimilarityError> {
        let norm = dot(&values, &values).sqrt();
        if norm == 0.0 {
            return Err(SimilarityError::ZeroVector { level });
        }
        let signed = values.iter().any(|&v| v < 0.0);
        Ok(Self {
            values,
            norm,
            signed,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(super) fn cosine_level(a: &Normed, b: &Normed) -> f64 {
    dot(&a.values, &b.values) / (a.norm * b.norm)
}

pub(super) fn angular_level(a: &Normed, b: &Normed) -> f64 {
    let factor = if a.signed || b.signed { 1.0 / PI } else { 2.0 / PI };
    1.0 - factor * cosine_level(a, b).clamp(-1.0, 1.0).acos()
}

#[derive(Debug, Clone, PartialEq)]
pub(super) struct Summed {
    values: Vec<f64>,
    total: f64,
}

impl Summed {
    pub(super) fn new(values: Vec<f64>) -> Self {
        let total = values.iter().sum();
        Self { values, total }
    }
}

pub(super) fn shared_pixel(a: &Summed, b: &Summed) -> Result<f64, SimilarityError> {
    let denom = a.total + b.total;
    if denom == 0.0 {
        return Err(SimilarityError::BothZero);
    }
    let diff: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum();
    Ok(1.0 - diff / denom)
}

/// Codes 0, 1, 2 for the low, middle and high band. Values equal to a cut
/// point fall into the middle band.
pub(super) fn tri_level_codes(values: &[f64]) -> Result<Vec<u8>, SimilarityError> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(SimilarityError::ZeroImage);
    }
    let (lower, upper) = (0.2 * max, 0.8 * max);
    Ok(values
        .iter()
        .map(|&v| {
            if v < lower {
                0
            } else if v > upper {
                2
            } else {
                1
            }
        })
        .collect())
}

pub(super) fn contingency(a: &[u8], b: &[u8]) -> f64 {
    let mut table = [[0u64; 3]; 3];
    for (&x, &y) in a.iter().zip(b) {
        table[x as usize][y as usize] += 1;
    }
    let v = |i: usize, j: usize| table[i][j] as f64;
    let diagonal = v(0, 0) + v(1, 1) + v(2, 2);
    let adjacent = (v(0, 1) + v(1, 0)) + (v(1, 2) + v(2, 1));
    let far = v(0, 2) + v(2, 0);
    (diagonal - adjacent - far) / a.len() as f64
}

/// Binarized foreground (`x > 0`) with its size.
#[derive(Debug, Clone, PartialEq)]
pub(super) struct Foreground {
    bits: Vec<bool>,
    count: usize,
}

impl Foreground {
    pub(super) fn new(values: &[f64]) -> Result<Self, SimilarityError> {
        let bits: Vec<bool> = values.iter().map(|&v| v > 0.0).collect();
        let count = bits.iter().filter(|&&b| b).count();
        if count == 0 {
            return Err(SimilarityError::EmptyForeground);
        }
        Ok(Self { bits, count })
    }
}

fn hat(beta: f64, alpha: f64) -> f64 {
    let lo = beta + alpha;
    let hi = 1.0 - beta - alpha;
    if hi > 0.0 && lo > 0.0 {
        ((beta / lo).powf(lo) * ((1.0 - beta) / hi).powf(hi)).powi(2)
    } else {
        f64::INFINITY
    }
}

/// One-sided score. Both estimates diverge together, exactly when `a` lies
/// fully inside `b` (score 1) or misses it entirely (score -1).
pub(super) fn hypergeometric_one_sided(n: usize, a: usize, b: usize, ab: usize) -> f64 {
    let (n, a, b, ab) = (n as f64, a as f64, b as f64, ab as f64);
    let beta1 = (n - b) / n;
    let alpha1 = (a - ab) / a - beta1;
    let beta2 = b / n;
    let alpha2 = ab / a - beta2;
    let (ha, hb) = (hat(beta1, alpha1), hat(beta2, alpha2));
    if ha.is_infinite() || hb.is_infinite() {
        if ab >= a {
            1.0
        } else {
            -1.0
        }
    } else {
        ha - hb
    }
}

pub(super) fn hypergeometric(a: &Foreground, b: &Foreground) -> f64 {
    let n = a.bits.len();
    let ab = a.bits.iter().zip(&b.bits).filter(|(&x, &y)| x && y).count();
    let forward = hypergeometric_one_sided(n, a.count, b.count, ab);
    let backward = hypergeometric_one_sided(n, b.count, a.count, ab);
    0.5 * (forward + backward)
}
