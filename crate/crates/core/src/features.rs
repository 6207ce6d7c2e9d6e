//! Per-channel derived representations: gradient field, magnitude and
//! orientation images, spectral vectorization and intensity histograms.

use thiserror::Error;

use crate::stack::{ChannelImage, Plane};

/// Default number of histogram bins over `[0, 1]`.
pub const DEFAULT_BINS: usize = 64;

/// Values this far outside `[0, 1]` are rounding noise, not data errors.
const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("image of {height}x{width} pixels is too small (need at least {min}x{min})")]
    TooSmallImage {
        height: usize,
        width: usize,
        min: usize,
    },
    #[error("value {value} at ({i}, {j}) lies outside [0, 1]")]
    OutOfRangeValue { i: usize, j: usize, value: f64 },
    #[error("histogram needs at least one bin")]
    ZeroBins,
}

/// Partial derivatives along rows (`di`) and columns (`dj`).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub di: Plane,
    pub dj: Plane,
}

/// Central differences in the interior, one-sided differences on the border.
pub fn gradient(img: &ChannelImage) -> Result<GradientField, FeatureError> {
    gradient_of(&img.plane)
}

pub fn gradient_of(plane: &Plane) -> Result<GradientField, FeatureError> {
    let (h, w) = plane.dim();
    if h < 2 || w < 2 {
        return Err(FeatureError::TooSmallImage {
            height: h,
            width: w,
            min: 2,
        });
    }
    let mut di = Plane::zeros((h, w));
    let mut dj = Plane::zeros((h, w));
    for i in 0..h {
        for j in 0..w {
            di[(i, j)] = if i == 0 {
                plane[(1, j)] - plane[(0, j)]
            } else if i == h - 1 {
                plane[(h - 1, j)] - plane[(h - 2, j)]
            } else {
                (plane[(i + 1, j)] - plane[(i - 1, j)]) / 2.0
            };
            dj[(i, j)] = if j == 0 {
                plane[(i, 1)] - plane[(i, 0)]
            } else if j == w - 1 {
                plane[(i, w - 1)] - plane[(i, w - 2)]
            } else {
                (plane[(i, j + 1)] - plane[(i, j - 1)]) / 2.0
            };
        }
    }
    Ok(GradientField { di, dj })
}

pub fn magnitude(g: &GradientField) -> Plane {
    ndarray::Zip::from(&g.di)
        .and(&g.dj)
        .map_collect(|&a, &b| a.hypot(b))
}

/// Gradient direction in degrees within `[0, 360)`; zero gradients map to 0.
pub fn orientation(g: &GradientField) -> Plane {
    ndarray::Zip::from(&g.di)
        .and(&g.dj)
        .map_collect(|&di, &dj| orientation_deg(di, dj))
}

pub fn orientation_deg(di: f64, dj: f64) -> f64 {
    if di == 0.0 && dj == 0.0 {
        return 0.0;
    }
    let deg = di.atan2(dj).to_degrees() + 180.0;
    if deg >= 360.0 {
        deg - 360.0
    } else {
        deg
    }
}

/// Row-major stacking of the spectral pixels.
pub fn vectorize(img: &ChannelImage) -> Vec<f64> {
    img.spectral_values()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityHistogram {
    pub edges: Vec<f64>,
    pub mass: Vec<f64>,
}

impl IntensityHistogram {
    pub fn bin_count(&self) -> usize {
        self.mass.len()
    }
}

/// Bin of a `[0, 1]` value among `bins` equal bins; the last bin is closed.
pub fn bin_index(value: f64, bins: usize) -> usize {
    ((value * bins as f64) as usize).min(bins - 1)
}

pub(crate) fn checked_unit(value: f64, i: usize, j: usize) -> Result<f64, FeatureError> {
    if (-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&value) {
        Ok(value.clamp(0.0, 1.0))
    } else {
        Err(FeatureError::OutOfRangeValue { i, j, value })
    }
}

/// Bin index of every spectral pixel, in row-major order.
pub fn spectral_bins(img: &ChannelImage, bins: usize) -> Result<Vec<usize>, FeatureError> {
    if bins == 0 {
        return Err(FeatureError::ZeroBins);
    }
    img.mask
        .positions()
        .iter()
        .map(|&(i, j)| checked_unit(img.plane[(i, j)], i, j).map(|v| bin_index(v, bins)))
        .collect()
}

/// Probability mass of intensities over the spectral positions.
pub fn histogram(img: &ChannelImage, bins: usize) -> Result<IntensityHistogram, FeatureError> {
    let indices = spectral_bins(img, bins)?;
    let mut counts = vec![0usize; bins];
    for b in indices {
        counts[b] += 1;
    }
    let n = img.mask.count() as f64;
    Ok(IntensityHistogram {
        edges: (0..=bins).map(|k| k as f64 / bins as f64).collect(),
        mass: counts.into_iter().map(|c| c as f64 / n).collect(),
    })
}
