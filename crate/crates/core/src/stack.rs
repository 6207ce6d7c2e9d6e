//! Multivariate mass channel image stacks.
//!
//! A [`MassChannelStack`] holds `Z` intensity planes of size `H x W` that share
//! one [`SpectralMask`]. Pixels outside the mask carry no spectrum and are
//! always zero in every channel.

use std::sync::Arc;

use ndarray::Array2;
use thiserror::Error;

/// A single `H x W` intensity plane.
pub type Plane = Array2<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StackError {
    #[error("stack has zero {0}")]
    EmptyDimension(&'static str),
    #[error("mask has no spectral position")]
    EmptyMask,
    #[error("channel {channel}: plane shape {found:?} differs from mask shape {expected:?}")]
    ShapeMismatch {
        channel: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("expected {expected} m/z values, found {found}")]
    MzCount { expected: usize, found: usize },
    #[error("channel {channel}: pixel ({i}, {j}) is outside the spectral mask but holds {value}")]
    MaskedNonZero {
        channel: usize,
        i: usize,
        j: usize,
        value: f64,
    },
    #[error("channel {channel}: pixel ({i}, {j}) holds invalid intensity {value}")]
    InvalidIntensity {
        channel: usize,
        i: usize,
        j: usize,
        value: f64,
    },
}

/// The set of spectral positions of an image, with its row-major position list.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMask {
    bits: Array2<bool>,
    positions: Vec<(usize, usize)>,
}

impl SpectralMask {
    pub fn new(bits: Array2<bool>) -> Result<Self, StackError> {
        let (h, w) = bits.dim();
        if h == 0 {
            return Err(StackError::EmptyDimension("height"));
        }
        if w == 0 {
            return Err(StackError::EmptyDimension("width"));
        }
        let positions: Vec<(usize, usize)> = bits
            .indexed_iter()
            .filter_map(|(p, &b)| b.then_some(p))
            .collect();
        if positions.is_empty() {
            return Err(StackError::EmptyMask);
        }
        Ok(Self { bits, positions })
    }

    /// Mask where every pixel is a spectral position.
    pub fn full(height: usize, width: usize) -> Result<Self, StackError> {
        Self::new(Array2::from_elem((height, width), true))
    }

    pub fn height(&self) -> usize {
        self.bits.nrows()
    }

    pub fn width(&self) -> usize {
        self.bits.ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.bits.dim()
    }

    /// Number of spectral positions, `|rho|`.
    pub fn count(&self) -> usize {
        self.positions.len()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.bits.get((i, j)).copied().unwrap_or(false)
    }

    /// Spectral positions in row-major order.
    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    pub fn bits(&self) -> &Array2<bool> {
        &self.bits
    }

    /// The same mask embedded in a frame of `width` non-spectral pixels.
    pub fn padded(&self, width: usize) -> Self {
        let (h, w) = self.dim();
        let mut bits = Array2::from_elem((h + 2 * width, w + 2 * width), false);
        for &(i, j) in &self.positions {
            bits[(i + width, j + width)] = true;
        }
        let positions = self
            .positions
            .iter()
            .map(|&(i, j)| (i + width, j + width))
            .collect();
        Self { bits, positions }
    }
}

/// One mass channel image together with the mask it is defined on.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelImage {
    pub plane: Plane,
    pub mask: Arc<SpectralMask>,
    pub channel: usize,
}

impl ChannelImage {
    pub fn new(plane: Plane, mask: Arc<SpectralMask>, channel: usize) -> Self {
        debug_assert_eq!(plane.dim(), mask.dim());
        Self {
            plane,
            mask,
            channel,
        }
    }

    /// Image on a fully spectral mask of the plane's size.
    pub fn unmasked(plane: Plane) -> Self {
        let (h, w) = plane.dim();
        let mask = SpectralMask::full(h, w).expect("plane must be non-empty");
        Self::new(plane, Arc::new(mask), 0)
    }

    pub fn dim(&self) -> (usize, usize) {
        self.plane.dim()
    }

    /// Intensities at the spectral positions, row-major.
    pub fn spectral_values(&self) -> Vec<f64> {
        self.mask
            .positions()
            .iter()
            .map(|&p| self.plane[p])
            .collect()
    }

    /// Replace a plane's values outside the mask with zero.
    pub fn with_plane(&self, plane: Plane) -> Self {
        let mut plane = plane;
        clear_outside(&mut plane, &self.mask);
        Self::new(plane, Arc::clone(&self.mask), self.channel)
    }
}

pub(crate) fn clear_outside(plane: &mut Plane, mask: &SpectralMask) {
    for ((i, j), v) in plane.indexed_iter_mut() {
        if !mask.contains(i, j) {
            *v = 0.0;
        }
    }
}

/// An `H x W x Z` intensity volume with m/z labels and a spectral mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MassChannelStack {
    mz_values: Vec<f64>,
    mask: Arc<SpectralMask>,
    planes: Vec<Plane>,
}

impl MassChannelStack {
    /// Validates every stack invariant: matching shapes, finite non-negative
    /// intensities and exact zeros outside the mask.
    pub fn new(
        mz_values: Vec<f64>,
        mask: SpectralMask,
        planes: Vec<Plane>,
    ) -> Result<Self, StackError> {
        if planes.is_empty() {
            return Err(StackError::EmptyDimension("channel count"));
        }
        if mz_values.len() != planes.len() {
            return Err(StackError::MzCount {
                expected: planes.len(),
                found: mz_values.len(),
            });
        }
        for (channel, plane) in planes.iter().enumerate() {
            if plane.dim() != mask.dim() {
                return Err(StackError::ShapeMismatch {
                    channel,
                    expected: mask.dim(),
                    found: plane.dim(),
                });
            }
            for ((i, j), &value) in plane.indexed_iter() {
                if !value.is_finite() || value < 0.0 {
                    return Err(StackError::InvalidIntensity {
                        channel,
                        i,
                        j,
                        value,
                    });
                }
                if value != 0.0 && !mask.contains(i, j) {
                    return Err(StackError::MaskedNonZero {
                        channel,
                        i,
                        j,
                        value,
                    });
                }
            }
        }
        Ok(Self {
            mz_values,
            mask: Arc::new(mask),
            planes,
        })
    }

    pub fn height(&self) -> usize {
        self.mask.height()
    }

    pub fn width(&self) -> usize {
        self.mask.width()
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn mz_values(&self) -> &[f64] {
        &self.mz_values
    }

    pub fn mask(&self) -> &Arc<SpectralMask> {
        &self.mask
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn plane(&self, z: usize) -> &Plane {
        &self.planes[z]
    }

    pub fn channel(&self, z: usize) -> ChannelImage {
        ChannelImage::new(self.planes[z].clone(), Arc::clone(&self.mask), z)
    }

    pub fn channel_images(&self) -> Vec<ChannelImage> {
        (0..self.channels()).map(|z| self.channel(z)).collect()
    }

    /// Linearly rescales every channel so its values over the spectral
    /// positions span `[0, 1]`. Constant channels become all zero.
    pub fn normalize_channels(&self) -> Self {
        let planes = self
            .planes
            .iter()
            .map(|plane| normalize_plane(plane, &self.mask))
            .collect();
        Self {
            mz_values: self.mz_values.clone(),
            mask: Arc::clone(&self.mask),
            planes,
        }
    }
}

fn normalize_plane(plane: &Plane, mask: &SpectralMask) -> Plane {
    let (lo, hi) = mask
        .positions()
        .iter()
        .map(|&p| plane[p])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    let mut out = Plane::zeros(plane.dim());
    let range = hi - lo;
    if range > 0.0 {
        for &p in mask.positions() {
            out[p] = ((plane[p] - lo) / range).clamp(0.0, 1.0);
        }
    }
    out
}
