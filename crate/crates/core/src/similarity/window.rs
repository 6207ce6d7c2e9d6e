//! Sliding-window functions: MSSIM, MMFS and local standard deviation.
//!
//! Windows are uniform, centred on each spectral pixel and clipped at the
//! image border. Statistics use every pixel inside the window.

use crate::features::{gradient_of, magnitude, orientation};
use crate::stack::Plane;

use super::SimilarityError;

/// Half-open index range of a window of side `o` centred on `centre`.
pub fn window_bounds(centre: usize, len: usize, o: usize) -> (usize, usize) {
    let half = o / 2;
    (centre.saturating_sub(half), (centre + half + 1).min(len))
}

/// Window mean and population variance at every spectral pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub plane: Plane,
    pub centres: Vec<(usize, usize)>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub std: Vec<f64>,
}

impl WindowStats {
    pub fn new(plane: Plane, centres: &[(usize, usize)], o: usize) -> Self {
        let (h, w) = plane.dim();
        let mut mean = Vec::with_capacity(centres.len());
        let mut var = Vec::with_capacity(centres.len());
        for &(i, j) in centres {
            let (r0, r1) = window_bounds(i, h, o);
            let (c0, c1) = window_bounds(j, w, o);
            let n = ((r1 - r0) * (c1 - c0)) as f64;
            let window = plane.slice(ndarray::s![r0..r1, c0..c1]);
            let mu = window.iter().sum::<f64>() / n;
            let v = window.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
            mean.push(mu);
            var.push(v);
        }
        let std = var.iter().map(|v| v.sqrt()).collect();
        Self {
            plane,
            centres: centres.to_vec(),
            mean,
            var,
            std,
        }
    }

    fn covariance(&self, other: &Self, k: usize, o: usize) -> f64 {
        let (h, w) = self.plane.dim();
        let (i, j) = self.centres[k];
        let (r0, r1) = window_bounds(i, h, o);
        let (c0, c1) = window_bounds(j, w, o);
        let (ma, mb) = (self.mean[k], other.mean[k]);
        let mut sum = 0.0;
        for r in r0..r1 {
            for c in c0..c1 {
                sum += (self.plane[(r, c)] - ma) * (other.plane[(r, c)] - mb);
            }
        }
        sum / ((r1 - r0) * (c1 - c0)) as f64
    }
}

fn ratio(x: f64, y: f64, c: f64) -> f64 {
    (2.0 * (x * y) + c) / ((x * x + y * y) + c)
}

pub(super) fn ssim_level(a: &WindowStats, b: &WindowStats, o: usize, c: f64) -> f64 {
    let n = a.centres.len();
    let mut total = 0.0;
    for k in 0..n {
        let (ma, mb) = (a.mean[k], b.mean[k]);
        let cov = a.covariance(b, k, o);
        let luminance = (2.0 * (ma * mb) + c) / ((ma * ma + mb * mb) + c);
        let structure = (2.0 * cov + c) / ((a.var[k] + b.var[k]) + c);
        total += luminance * structure;
    }
    total / n as f64
}

/// Intensity, orientation and magnitude statistics of one level.
#[derive(Debug, Clone, PartialEq)]
pub(super) struct MultiFeature {
    features: [WindowStats; 3],
}

impl MultiFeature {
    pub(super) fn new(plane: &Plane, centres: &[(usize, usize)], o: usize) -> Result<Self, SimilarityError> {
        let g = gradient_of(plane)?;
        Ok(Self {
            features: [
                WindowStats::new(plane.clone(), centres, o),
                WindowStats::new(orientation(&g), centres, o),
                WindowStats::new(magnitude(&g), centres, o),
            ],
        })
    }
}

/// Product of the mean, deviation and covariance terms of one feature.
#[allow(clippy::too_many_arguments)]
pub fn feature_product(ma: f64, mb: f64, sa: f64, sb: f64, va: f64, vb: f64, cov: f64, c: f64) -> f64 {
    let f_mean = (2.0 * (ma * mb) + c) / ((ma * ma + mb * mb) + c);
    let f_std = (2.0 * (sa * sb) + c) / ((va + vb) + c);
    let f_cov = (cov + c) / ((sa * sb) + c);
    f_mean * f_std * f_cov
}

pub(super) fn mfs_level(a: &MultiFeature, b: &MultiFeature, o: usize, c: f64) -> f64 {
    let n = a.features[0].centres.len();
    let mut total = 0.0;
    for k in 0..n {
        let pooled = a
            .features
            .iter()
            .zip(&b.features)
            .map(|(fa, fb)| {
                let cov = fa.covariance(fb, k, o);
                feature_product(fa.mean[k], fb.mean[k], fa.std[k], fb.std[k], fa.var[k], fb.var[k], cov, c).cbrt()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        total += pooled;
    }
    total / n as f64
}

pub(super) fn local_std(a: &[f64], b: &[f64], c: f64) -> f64 {
    let total: f64 = a.iter().zip(b).map(|(&x, &y)| ratio(x, y, c)).sum();
    total / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn bounds_clip_at_borders() {
        assert_eq!(window_bounds(0, 20, 13), (0, 7));
        assert_eq!(window_bounds(10, 20, 13), (4, 17));
        assert_eq!(window_bounds(19, 20, 13), (13, 20));
        assert_eq!(window_bounds(0, 1, 1), (0, 1));
    }

    #[test]
    fn constant_plane_stats() {
        let s = WindowStats::new(Array2::from_elem((5, 5), 0.25), &[(0, 0), (2, 2)], 3);
        assert_eq!(s.mean, vec![0.25, 0.25]);
        assert_eq!(s.var, vec![0.0, 0.0]);
    }

    #[test]
    fn negative_covariance_keeps_sign() {
        // one window where b mirrors a around their common mean
        let xi = feature_product(0.5, 0.5, 0.2, 0.2, 0.04, 0.04, -0.04, 1e-8);
        assert!(xi < 0.0);
        assert!((xi.cbrt() + 1.0).abs() < 1e-6);
        assert_eq!(xi.cbrt().signum(), -1.0);
    }

    #[test]
    fn local_std_ratio_bounds() {
        assert!((local_std(&[0.3, 0.0], &[0.3, 0.0], 1e-8) - 1.0).abs() < 1e-12);
        let v = local_std(&[0.3], &[0.0], 1e-8);
        assert!(v > 0.0 && v < 1e-6);
    }
}
