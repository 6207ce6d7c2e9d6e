//! Pairwise similarity functions between mass channel images.
//!
//! Every function compares two [`ScaleSpaceStack`]s. The five multiscale
//! functions (Pearson, Cosine, Angular, MSSIM, MMFS) average their per-level
//! value over all scale levels; the others only look at level 0. All pixel
//! sums range over the spectral positions only.
//!
//! Evaluation is split in two phases. [`prepare`] derives the per-channel
//! data a function needs (centred vectors, window statistics, gradients,
//! histograms) once per channel, and [`compare`] combines two prepared
//! channels. Each pairwise formula is written so that swapping its
//! arguments yields a bit-identical result.

mod histogram;
mod matrix;
mod pixel;
mod vector;
mod window;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureError, DEFAULT_BINS};
use crate::preprocess::ScaleSpaceStack;

pub use matrix::{build_similarity_matrix, PairFlag, SimilarityMatrix};
pub use window::{window_bounds, WindowStats};

/// Regularization constant `c`, `c1`, `c2` of the ratio-style formulas.
pub const REGULARIZATION: f64 = 1e-8;
/// Side length of the sliding windows.
pub const WINDOW: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityFunctionId {
    Pearson,
    Cosine,
    Angular,
    Mssim,
    Mmfs,
    SharedPixel,
    Contingency,
    Hypergeometric,
    LocalStd,
    ImaSim,
    GradInfo,
    Histogram,
    MutualInfo,
}

impl SimilarityFunctionId {
    pub const ALL: [SimilarityFunctionId; 13] = [
        Self::Pearson,
        Self::Cosine,
        Self::Angular,
        Self::Mssim,
        Self::Mmfs,
        Self::SharedPixel,
        Self::Contingency,
        Self::Hypergeometric,
        Self::LocalStd,
        Self::ImaSim,
        Self::GradInfo,
        Self::Histogram,
        Self::MutualInfo,
    ];

    /// Whether the function averages over scale-space levels.
    pub fn is_multiscale(self) -> bool {
        matches!(
            self,
            Self::Pearson | Self::Cosine | Self::Angular | Self::Mssim | Self::Mmfs
        )
    }

    /// Name used in report method labels.
    pub fn display_name(self) -> &'static str {
        match self {
            Self::Pearson => "Pearson",
            Self::Cosine => "Cosine",
            Self::Angular => "Angular",
            Self::Mssim => "MSSIM",
            Self::Mmfs => "MMFS",
            Self::SharedPixel => "Shared Pixel",
            Self::Contingency => "Contingency",
            Self::Hypergeometric => "Hypergeometric",
            Self::LocalStd => "Local Std",
            Self::ImaSim => "IMA Sim",
            Self::GradInfo => "Grad Info",
            Self::Histogram => "Histogram",
            Self::MutualInfo => "Mutual Info",
        }
    }

    /// Stable machine identifier, used in configs and exports.
    pub fn slug(self) -> &'static str {
        match self {
            Self::Pearson => "pearson",
            Self::Cosine => "cosine",
            Self::Angular => "angular",
            Self::Mssim => "mssim",
            Self::Mmfs => "mmfs",
            Self::SharedPixel => "shared_pixel",
            Self::Contingency => "contingency",
            Self::Hypergeometric => "hypergeometric",
            Self::LocalStd => "local_std",
            Self::ImaSim => "ima_sim",
            Self::GradInfo => "grad_info",
            Self::Histogram => "histogram",
            Self::MutualInfo => "mutual_info",
        }
    }
}

impl fmt::Display for SimilarityFunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for SimilarityFunctionId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|id| id.slug() == s || id.display_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown similarity function {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityParams {
    /// Odd sliding window side length.
    pub window: usize,
    pub regularization: f64,
    pub bins: usize,
}

impl Default for SimilarityParams {
    fn default() -> Self {
        Self {
            window: WINDOW,
            regularization: REGULARIZATION,
            bins: DEFAULT_BINS,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("channel is constant over the spectral positions at level {level}")]
    ConstantInput { level: usize },
    #[error("channel is an all-zero vector at level {level}")]
    ZeroVector { level: usize },
    #[error("both images are all zero")]
    BothZero,
    #[error("image maximum is zero")]
    ZeroImage,
    #[error("binarized image has no foreground pixel")]
    EmptyForeground,
    #[error("image of {height}x{width} pixels is smaller than the {window}x{window} window")]
    TooSmallImage {
        height: usize,
        width: usize,
        window: usize,
    },
    #[error("window side must be odd and positive, got {0}")]
    InvalidWindow(usize),
    #[error("channels differ in {0}")]
    Incompatible(&'static str),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("need at least two channels, got {0}")]
    TooFewChannels(usize),
}

/// Per-channel data derived once and reused for every pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedChannel {
    function: SimilarityFunctionId,
    dim: (usize, usize),
    spectral_count: usize,
    data: Prepared,
}

#[derive(Debug, Clone, PartialEq)]
enum Prepared {
    Pearson(Vec<vector::Centered>),
    Cosine(Vec<vector::Normed>),
    Angular(Vec<vector::Normed>),
    Mssim(Vec<WindowStats>),
    Mmfs(Vec<window::MultiFeature>),
    SharedPixel(vector::Summed),
    Contingency(Vec<u8>),
    Hypergeometric(vector::Foreground),
    LocalStd(Vec<f64>),
    Pixel(pixel::PixelFeatures),
    Histogram(Vec<f64>),
    MutualInfo(histogram::Binned),
}

impl PreparedChannel {
    pub fn function(&self) -> SimilarityFunctionId {
        self.function
    }
}

fn check_window(stack: &ScaleSpaceStack, params: &SimilarityParams) -> Result<(), SimilarityError> {
    if params.window == 0 || params.window.is_multiple_of(2) {
        return Err(SimilarityError::InvalidWindow(params.window));
    }
    let (h, w) = stack.dim();
    if h < params.window || w < params.window {
        return Err(SimilarityError::TooSmallImage {
            height: h,
            width: w,
            window: params.window,
        });
    }
    Ok(())
}

/// Derives what `function` needs from one channel.
pub fn prepare(
    function: SimilarityFunctionId,
    stack: &ScaleSpaceStack,
    params: &SimilarityParams,
) -> Result<PreparedChannel, SimilarityError> {
    use SimilarityFunctionId as F;
    let positions = stack.mask.positions();
    let level_values = |k: usize| -> Vec<f64> { positions.iter().map(|&p| stack.levels[k][p]).collect() };
    let all_levels = 0..stack.level_count();
    let data = match function {
        F::Pearson => Prepared::Pearson(
            all_levels
                .map(|k| vector::Centered::new(level_values(k), k))
                .collect::<Result<_, _>>()?,
        ),
        F::Cosine => Prepared::Cosine(
            all_levels
                .map(|k| vector::Normed::new(level_values(k), k))
                .collect::<Result<_, _>>()?,
        ),
        F::Angular => Prepared::Angular(
            all_levels
                .map(|k| vector::Normed::new(level_values(k), k))
                .collect::<Result<_, _>>()?,
        ),
        F::Mssim => {
            check_window(stack, params)?;
            Prepared::Mssim(
                stack
                    .levels
                    .iter()
                    .map(|plane| WindowStats::new(plane.clone(), positions, params.window))
                    .collect(),
            )
        }
        F::Mmfs => {
            check_window(stack, params)?;
            Prepared::Mmfs(
                stack
                    .levels
                    .iter()
                    .map(|plane| window::MultiFeature::new(plane, positions, params.window))
                    .collect::<Result<_, _>>()?,
            )
        }
        F::SharedPixel => Prepared::SharedPixel(vector::Summed::new(level_values(0))),
        F::Contingency => Prepared::Contingency(vector::tri_level_codes(&level_values(0))?),
        F::Hypergeometric => Prepared::Hypergeometric(vector::Foreground::new(&level_values(0))?),
        F::LocalStd => {
            check_window(stack, params)?;
            Prepared::LocalStd(WindowStats::new(stack.levels[0].clone(), positions, params.window).std)
        }
        F::ImaSim | F::GradInfo => Prepared::Pixel(pixel::PixelFeatures::new(&stack.levels[0], positions)?),
        F::Histogram => Prepared::Histogram(histogram::sqrt_mass(&stack.level_image(0), params.bins)?),
        F::MutualInfo => Prepared::MutualInfo(histogram::Binned::new(&stack.level_image(0), params.bins)?),
    };
    Ok(PreparedChannel {
        function,
        dim: stack.dim(),
        spectral_count: positions.len(),
        data,
    })
}

fn level_mean(values: impl Iterator<Item = Result<f64, SimilarityError>>) -> Result<f64, SimilarityError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v?;
        n += 1;
    }
    Ok(sum / n as f64)
}

fn same_levels<T>(a: &[T], b: &[T]) -> Result<(), SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::Incompatible("scale-space level count"));
    }
    Ok(())
}

/// Similarity of two prepared channels.
pub fn compare(
    a: &PreparedChannel,
    b: &PreparedChannel,
    params: &SimilarityParams,
) -> Result<f64, SimilarityError> {
    if a.function != b.function {
        return Err(SimilarityError::Incompatible("prepared function"));
    }
    if a.dim != b.dim || a.spectral_count != b.spectral_count {
        return Err(SimilarityError::Incompatible("image geometry"));
    }
    let c = params.regularization;
    match (&a.data, &b.data) {
        (Prepared::Pearson(x), Prepared::Pearson(y)) => {
            same_levels(x, y)?;
            level_mean(x.iter().zip(y).map(|(x, y)| Ok(vector::pearson_level(x, y))))
        }
        (Prepared::Cosine(x), Prepared::Cosine(y)) => {
            same_levels(x, y)?;
            level_mean(x.iter().zip(y).map(|(x, y)| Ok(vector::cosine_level(x, y))))
        }
        (Prepared::Angular(x), Prepared::Angular(y)) => {
            same_levels(x, y)?;
            level_mean(x.iter().zip(y).map(|(x, y)| Ok(vector::angular_level(x, y))))
        }
        (Prepared::Mssim(x), Prepared::Mssim(y)) => {
            same_levels(x, y)?;
            level_mean(x.iter().zip(y).map(|(x, y)| Ok(window::ssim_level(x, y, params.window, c))))
        }
        (Prepared::Mmfs(x), Prepared::Mmfs(y)) => {
            same_levels(x, y)?;
            level_mean(x.iter().zip(y).map(|(x, y)| Ok(window::mfs_level(x, y, params.window, c))))
        }
        (Prepared::SharedPixel(x), Prepared::SharedPixel(y)) => vector::shared_pixel(x, y),
        (Prepared::Contingency(x), Prepared::Contingency(y)) => Ok(vector::contingency(x, y)),
        (Prepared::Hypergeometric(x), Prepared::Hypergeometric(y)) => Ok(vector::hypergeometric(x, y)),
        (Prepared::LocalStd(x), Prepared::LocalStd(y)) => Ok(window::local_std(x, y, c)),
        (Prepared::Pixel(x), Prepared::Pixel(y)) => Ok(match a.function {
            SimilarityFunctionId::ImaSim => pixel::ima_sim(x, y, c),
            _ => pixel::grad_info(x, y),
        }),
        (Prepared::Histogram(x), Prepared::Histogram(y)) => Ok(histogram::hellinger_similarity(x, y)),
        (Prepared::MutualInfo(x), Prepared::MutualInfo(y)) => Ok(histogram::mutual_information(x, y, params.bins)),
        _ => unreachable!("prepared data always matches its function id"),
    }
}

/// Similarity of two channels under `function`.
pub fn similarity(
    function: SimilarityFunctionId,
    a: &ScaleSpaceStack,
    b: &ScaleSpaceStack,
    params: &SimilarityParams,
) -> Result<f64, SimilarityError> {
    compare(&prepare(function, a, params)?, &prepare(function, b, params)?, params)
}

macro_rules! pair_fn {
    ($(#[$doc:meta])* $name:ident, $id:ident) => {
        $(#[$doc])*
        pub fn $name(
            a: &ScaleSpaceStack,
            b: &ScaleSpaceStack,
            params: &SimilarityParams,
        ) -> Result<f64, SimilarityError> {
            similarity(SimilarityFunctionId::$id, a, b, params)
        }
    };
}

pair_fn!(
    /// Mean over levels of the Pearson correlation of the spectral vectors.
    pearson, Pearson);
pair_fn!(
    /// Mean over levels of the cosine of the spectral vectors.
    cosine, Cosine);
pair_fn!(
    /// Mean over levels of `1 - (2/pi) acos(cos)`; `1/pi` for signed data.
    angular, Angular);
pair_fn!(
    /// Mean over levels of the spectral mean of the windowed SSIM map.
    mssim, Mssim);
pair_fn!(
    /// Multifeature similarity with max pooling over intensity, orientation and magnitude.
    mmfs, Mmfs);
pair_fn!(shared_pixel, SharedPixel);
pair_fn!(contingency, Contingency);
pair_fn!(hypergeometric, Hypergeometric);
pair_fn!(local_std, LocalStd);
pair_fn!(ima_sim, ImaSim);
pair_fn!(grad_info, GradInfo);
pair_fn!(
    /// One minus the Hellinger distance of the intensity histograms.
    histogram_sim, Histogram);
pair_fn!(
    /// Mutual information in nats from the joint intensity histogram.
    mutual_info, MutualInfo);
