//! Intensity distribution functions: Hellinger histogram similarity and
//! mutual information.

use crate::features::{histogram, spectral_bins, FeatureError};
use crate::stack::ChannelImage;

/// Square roots of the histogram mass.
pub(super) fn sqrt_mass(img: &ChannelImage, bins: usize) -> Result<Vec<f64>, FeatureError> {
    Ok(histogram(img, bins)?.mass.into_iter().map(f64::sqrt).collect())
}

pub(super) fn hellinger_similarity(a: &[f64], b: &[f64]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (1.0 - sum.sqrt() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Per-pixel bin indices and the marginal entropy.
#[derive(Debug, Clone, PartialEq)]
pub(super) struct Binned {
    bins: Vec<u16>,
    entropy: f64,
}

fn plogp(count: u64, n: f64) -> f64 {
    if count == 0 {
        return 0.0;
    }
    let p = count as f64 / n;
    -p * p.ln()
}

impl Binned {
    pub(super) fn new(img: &ChannelImage, bins: usize) -> Result<Self, FeatureError> {
        let indices = spectral_bins(img, bins)?;
        let mut counts = vec![0u64; bins];
        for &b in &indices {
            counts[b] += 1;
        }
        let n = indices.len() as f64;
        Ok(Self {
            bins: indices.into_iter().map(|b| b as u16).collect(),
            entropy: counts.iter().map(|&c| plogp(c, n)).sum(),
        })
    }

    pub(super) fn entropy(&self) -> f64 {
        self.entropy
    }
}

/// Joint entropy is accumulated over unordered bin pairs so that swapping
/// the arguments, which transposes the joint table, gives the same sum.
pub(super) fn mutual_information(a: &Binned, b: &Binned, bins: usize) -> f64 {
    let mut joint = vec![0u64; bins * bins];
    for (&x, &y) in a.bins.iter().zip(&b.bins) {
        joint[x as usize * bins + y as usize] += 1;
    }
    let n = a.bins.len() as f64;
    let mut h_joint = 0.0;
    for i in 0..bins {
        h_joint += plogp(joint[i * bins + i], n);
        for j in i + 1..bins {
            h_joint += plogp(joint[i * bins + j], n) + plogp(joint[j * bins + i], n);
        }
    }
    (a.entropy() + b.entropy() - h_joint).max(0.0)
}
