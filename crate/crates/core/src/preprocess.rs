//! Pre-processing procedures: zero padding, Otsu thresholding, Gaussian
//! smoothing and Gaussian scale-space stacks, plus the six pre-processing
//! setups built from them.

use std::fmt;
use std::sync::Arc;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stack::{clear_outside, ChannelImage, MassChannelStack, Plane, SpectralMask};

pub const PAD_WIDTH: usize = 13;
pub const SIGMA_PP: f64 = 0.8;
pub const SIGMA_MS: f64 = 1.0;
pub const OTSU_BINS: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("gaussian sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("otsu needs at least 2 histogram bins, got {0}")]
    InvalidBins(usize),
}

/// Scale-space level set: `{0}`, `{0, 1, 2}` or `{0, 2, 4}` smoothing steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MsLevel {
    #[serde(rename = "0")]
    Ms0,
    #[serde(rename = "1")]
    Ms1,
    #[serde(rename = "2")]
    Ms2,
}

impl MsLevel {
    pub const ALL: [MsLevel; 3] = [MsLevel::Ms0, MsLevel::Ms1, MsLevel::Ms2];

    pub fn steps(self) -> &'static [u32] {
        match self {
            MsLevel::Ms0 => &[0],
            MsLevel::Ms1 => &[0, 1, 2],
            MsLevel::Ms2 => &[0, 2, 4],
        }
    }

    pub fn index(self) -> u8 {
        match self {
            MsLevel::Ms0 => 0,
            MsLevel::Ms1 => 1,
            MsLevel::Ms2 => 2,
        }
    }

    pub fn from_index(k: u8) -> Option<Self> {
        Self::ALL.get(k as usize).copied()
    }
}

impl fmt::Display for MsLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}MS", self.index())
    }
}

/// One of the six pre-processing setups: optional threshold-and-smooth
/// followed by a scale-space level set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PreprocSetup {
    pub pp: bool,
    pub ms: MsLevel,
}

impl PreprocSetup {
    pub fn all() -> Vec<PreprocSetup> {
        [false, true]
            .into_iter()
            .flat_map(|pp| MsLevel::ALL.into_iter().map(move |ms| PreprocSetup { pp, ms }))
            .collect()
    }
}

impl fmt::Display for PreprocSetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pp {
            write!(f, "PP -- {}", self.ms)
        } else {
            write!(f, "{}", self.ms)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocParams {
    pub pad_width: usize,
    pub sigma_pp: f64,
    pub sigma_ms: f64,
    pub otsu_bins: usize,
}

impl Default for PreprocParams {
    fn default() -> Self {
        Self {
            pad_width: PAD_WIDTH,
            sigma_pp: SIGMA_PP,
            sigma_ms: SIGMA_MS,
            otsu_bins: OTSU_BINS,
        }
    }
}

/// Embeds the image in a frame of zero-valued, non-spectral pixels.
pub fn zero_pad(img: &ChannelImage, width: usize) -> ChannelImage {
    if width == 0 {
        return img.clone();
    }
    let (h, w) = img.dim();
    let mut plane = Plane::zeros((h + 2 * width, w + 2 * width));
    plane
        .slice_mut(ndarray::s![width..width + h, width..width + w])
        .assign(&img.plane);
    ChannelImage::new(plane, Arc::new(img.mask.padded(width)), img.channel)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OtsuOutcome {
    pub image: ChannelImage,
    /// Lower edge of the foreground class; `None` for constant images.
    pub threshold: Option<f64>,
    /// Set when the image had fewer than two distinct spectral values.
    pub degenerate: bool,
}

/// Index of the last background bin maximizing the between-class variance.
/// Ties resolve to the lowest split.
pub fn otsu_split(counts: &[usize], centres: &[f64]) -> Option<usize> {
    let total: usize = counts.iter().sum();
    let total_mass: f64 = counts
        .iter()
        .zip(centres)
        .map(|(&c, &m)| c as f64 * m)
        .sum();
    let mut best: Option<(usize, f64)> = None;
    let (mut n0, mut mass0) = (0usize, 0.0);
    for k in 0..counts.len() - 1 {
        n0 += counts[k];
        mass0 += counts[k] as f64 * centres[k];
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let w0 = n0 as f64 / total as f64;
        let w1 = n1 as f64 / total as f64;
        let mu0 = mass0 / n0 as f64;
        let mu1 = (total_mass - mass0) / n1 as f64;
        let between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if best.is_none_or(|(_, b)| between > b) {
            best = Some((k, between));
        }
    }
    best.map(|(k, _)| k)
}

/// Zeroes the spectral pixels in Otsu's background class, computed on a
/// `bins`-bin histogram spanning the spectral value range.
pub fn otsu_threshold(img: &ChannelImage, bins: usize) -> Result<OtsuOutcome, PreprocessError> {
    if bins < 2 {
        return Err(PreprocessError::InvalidBins(bins));
    }
    let values = img.spectral_values();
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        warn!("channel {}: constant image, otsu threshold skipped", img.channel);
        return Ok(OtsuOutcome {
            image: img.clone(),
            threshold: None,
            degenerate: true,
        });
    }
    let width = (hi - lo) / bins as f64;
    let bin_of = |v: f64| (((v - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1);
    let mut counts = vec![0usize; bins];
    for &v in &values {
        counts[bin_of(v)] += 1;
    }
    let centres: Vec<f64> = (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect();
    let split = otsu_split(&counts, &centres).expect("two distinct values give a valid split");
    let mut plane = img.plane.clone();
    for &p in img.mask.positions() {
        if bin_of(plane[p]) <= split {
            plane[p] = 0.0;
        }
    }
    Ok(OtsuOutcome {
        image: ChannelImage::new(plane, Arc::clone(&img.mask), img.channel),
        threshold: Some(lo + (split + 1) as f64 * width),
        degenerate: false,
    })
}

/// Sampled Gaussian truncated at radius `ceil(4 sigma)` and renormalized.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>, PreprocessError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(PreprocessError::InvalidSigma(sigma));
    }
    let radius = (4.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|x| (-((x * x) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

/// 1-D convolution along one axis with zero values beyond the border.
pub fn convolve_axis(plane: &Plane, kernel: &[f64], axis: Axis) -> Plane {
    let (h, w) = plane.dim();
    let r = (kernel.len() / 2) as isize;
    let mut out = Plane::zeros((h, w));
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for (k, &weight) in kernel.iter().enumerate() {
                let off = k as isize - r;
                let (si, sj) = match axis {
                    Axis::Rows => (i as isize + off, j as isize),
                    Axis::Cols => (i as isize, j as isize + off),
                };
                if si >= 0 && sj >= 0 && (si as usize) < h && (sj as usize) < w {
                    acc += weight * plane[(si as usize, sj as usize)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

fn smooth_plane(plane: &Plane, kernel: &[f64], mask: &SpectralMask) -> Plane {
    let mut out = convolve_axis(&convolve_axis(plane, kernel, Axis::Cols), kernel, Axis::Rows);
    clear_outside(&mut out, mask);
    out
}

/// Separable Gaussian smoothing. Pixels outside the spectral mask stay zero.
pub fn gaussian_smooth(img: &ChannelImage, sigma: f64) -> Result<ChannelImage, PreprocessError> {
    let kernel = gaussian_kernel(sigma)?;
    Ok(ChannelImage::new(
        smooth_plane(&img.plane, &kernel, &img.mask),
        Arc::clone(&img.mask),
        img.channel,
    ))
}

/// Gaussian scale-space levels of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSpaceStack {
    pub levels: Vec<Plane>,
    pub steps: Vec<u32>,
    pub sigma: f64,
    pub mask: Arc<SpectralMask>,
    pub channel: usize,
}

impl ScaleSpaceStack {
    /// A one-level stack holding the image itself.
    pub fn single(img: ChannelImage) -> Self {
        Self {
            levels: vec![img.plane],
            steps: vec![0],
            sigma: SIGMA_MS,
            mask: img.mask,
            channel: img.channel,
        }
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_image(&self, k: usize) -> ChannelImage {
        ChannelImage::new(self.levels[k].clone(), Arc::clone(&self.mask), self.channel)
    }

    pub fn dim(&self) -> (usize, usize) {
        self.mask.dim()
    }
}

/// Level for step `s` is the input smoothed `s` times with `sigma`; step 0 is
/// the untouched input.
pub fn scale_space(
    img: &ChannelImage,
    steps: &[u32],
    sigma: f64,
) -> Result<ScaleSpaceStack, PreprocessError> {
    let kernel = gaussian_kernel(sigma)?;
    let mut sorted = steps.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut levels = Vec::with_capacity(sorted.len());
    let mut current = img.plane.clone();
    let mut done = 0u32;
    for &s in &sorted {
        while done < s {
            current = smooth_plane(&current, &kernel, &img.mask);
            done += 1;
        }
        levels.push(current.clone());
    }
    Ok(ScaleSpaceStack {
        levels,
        steps: sorted,
        sigma,
        mask: Arc::clone(&img.mask),
        channel: img.channel,
    })
}

/// Channels of a stack after one pre-processing setup.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedChannels {
    pub stacks: Vec<ScaleSpaceStack>,
    /// Channels on which Otsu thresholding was skipped as constant.
    pub otsu_skipped: Vec<usize>,
}

fn prepare_channel(
    img: &ChannelImage,
    setup: PreprocSetup,
    params: &PreprocParams,
) -> Result<(ScaleSpaceStack, bool), PreprocessError> {
    let mut img = zero_pad(img, params.pad_width);
    let mut skipped = false;
    if setup.pp {
        let otsu = otsu_threshold(&img, params.otsu_bins)?;
        skipped = otsu.degenerate;
        img = gaussian_smooth(&otsu.image, params.sigma_pp)?;
    }
    Ok((scale_space(&img, setup.ms.steps(), params.sigma_ms)?, skipped))
}

/// Runs one setup over every channel: pad, then (with `pp`) Otsu threshold and
/// smooth, then build the scale-space for the setup's level set.
pub fn apply_setup(
    stack: &MassChannelStack,
    setup: PreprocSetup,
    params: &PreprocParams,
) -> Result<PreparedChannels, PreprocessError> {
    let results: Vec<(ScaleSpaceStack, bool)> = (0..stack.channels())
        .into_par_iter()
        .map(|z| prepare_channel(&stack.channel(z), setup, params))
        .collect::<Result<_, _>>()?;
    let otsu_skipped = results
        .iter()
        .enumerate()
        .filter_map(|(z, (_, skipped))| skipped.then_some(z))
        .collect();
    Ok(PreparedChannels {
        stacks: results.into_iter().map(|(s, _)| s).collect(),
        otsu_skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn six_setups() {
        let all = PreprocSetup::all();
        assert_eq!(all.len(), 6);
        let mut d = all.clone();
        d.dedup();
        assert_eq!(d.len(), 6);
        assert_eq!(all[4].to_string(), "PP -- 1MS");
        assert_eq!(all[0].to_string(), "0MS");
    }

    #[test]
    fn zero_pad_cases() {
        let img = ChannelImage::unmasked(array![[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(zero_pad(&img, 0), img);
        let p = zero_pad(&img, 13);
        assert_eq!(p.dim(), (28, 28));
        assert_eq!(p.plane[(0, 0)], 0.0);
        assert_eq!(p.plane[(27, 27)], 0.0);
        assert_eq!(p.plane[(13, 13)], 1.0);
        assert_eq!(p.plane.sum(), img.plane.sum());
        assert_eq!(p.mask.count(), 4);
        assert!(!p.mask.contains(0, 0));
    }

    #[test]
    fn otsu_bimodal() {
        let plane = Array2::from_shape_fn((4, 4), |(i, _)| if i < 2 { 0.1 } else { 0.9 });
        let out = otsu_threshold(&ChannelImage::unmasked(plane), 256).unwrap();
        assert!(!out.degenerate);
        for ((i, _), &v) in out.image.plane.indexed_iter() {
            assert_eq!(v, if i < 2 { 0.0 } else { 0.9 });
        }
        let again = otsu_threshold(&out.image, 256).unwrap();
        assert_eq!(again.image, out.image);
    }

    #[test]
    fn otsu_constant_is_noop() {
        let img = ChannelImage::unmasked(Array2::from_elem((3, 3), 0.4));
        let out = otsu_threshold(&img, 256).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.threshold, None);
        assert_eq!(out.image, img);
    }

    #[test]
    fn kernel_is_normalized_and_truncated() {
        let k = gaussian_kernel(0.8).unwrap();
        assert_eq!(k.len(), 2 * 4 + 1);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(gaussian_kernel(1.0).unwrap().len(), 9);
        assert!(gaussian_kernel(0.0).is_err());
        assert!(gaussian_kernel(f64::NAN).is_err());
    }

    #[test]
    fn smoothing_keeps_constant_interior() {
        let img = ChannelImage::unmasked(Array2::from_elem((20, 20), 0.5));
        let s = gaussian_smooth(&img, 1.0).unwrap();
        for i in 4..16 {
            for j in 4..16 {
                assert!((s.plane[(i, j)] - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn smoothing_keeps_masked_pixels_zero() {
        let img = zero_pad(&ChannelImage::unmasked(Array2::from_elem((4, 4), 1.0)), 3);
        let s = gaussian_smooth(&img, 1.0).unwrap();
        for ((i, j), &v) in s.plane.indexed_iter() {
            if !s.mask.contains(i, j) {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn scale_space_levels() {
        let img = ChannelImage::unmasked(Array2::from_shape_fn((9, 9), |(i, j)| ((i * j) % 5) as f64 / 4.0));
        let ms0 = scale_space(&img, MsLevel::Ms0.steps(), 1.0).unwrap();
        assert_eq!(ms0.level_count(), 1);
        assert_eq!(ms0.levels[0], img.plane);
        let ms2 = scale_space(&img, MsLevel::Ms2.steps(), 1.0).unwrap();
        let twice = gaussian_smooth(&gaussian_smooth(&img, 1.0).unwrap(), 1.0).unwrap();
        assert_eq!(ms2.levels[1], twice.plane);
        let four = (0..2).fold(twice, |acc, _| gaussian_smooth(&acc, 1.0).unwrap());
        assert_eq!(ms2.levels[2], four.plane);
    }

    #[test]
    fn apply_setup_without_pp_only_pads() {
        let mask = SpectralMask::full(3, 3).unwrap();
        let plane = array![[0.0, 0.5, 1.0], [0.2, 0.3, 0.4], [0.9, 0.8, 0.7]];
        let stack = MassChannelStack::new(vec![1.0], mask, vec![plane.clone()]).unwrap();
        let out = apply_setup(&stack, PreprocSetup { pp: false, ms: MsLevel::Ms0 }, &PreprocParams::default()).unwrap();
        assert_eq!(out.stacks.len(), 1);
        assert_eq!(out.stacks[0].level_count(), 1);
        assert_eq!(out.stacks[0].levels[0], zero_pad(&stack.channel(0), 13).plane);
    }

    #[test]
    fn apply_setup_with_pp_composes() {
        let mask = SpectralMask::full(5, 5).unwrap();
        let plane = Array2::from_shape_fn((5, 5), |(i, j)| if (i + j) % 3 == 0 { 0.9 } else { 0.1 });
        let stack = MassChannelStack::new(vec![1.0], mask, vec![plane]).unwrap();
        let params = PreprocParams::default();
        let out = apply_setup(&stack, PreprocSetup { pp: true, ms: MsLevel::Ms0 }, &params).unwrap();
        let manual = gaussian_smooth(
            &otsu_threshold(&zero_pad(&stack.channel(0), 13), 256).unwrap().image,
            0.8,
        )
        .unwrap();
        assert_eq!(out.stacks[0].levels[0], manual.plane);
        assert!(out.otsu_skipped.is_empty());
    }
}
