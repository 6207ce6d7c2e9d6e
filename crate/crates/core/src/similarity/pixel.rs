//! Pixelwise gradient functions: IMA Sim and Grad Info.

use crate::features::gradient_of;
use crate::stack::Plane;

use super::SimilarityError;

/// Intensity and gradient of one level, sampled at the spectral pixels.
#[derive(Debug, Clone, PartialEq)]
pub(super) struct PixelFeatures {
    intensity: Vec<f64>,
    di: Vec<f64>,
    dj: Vec<f64>,
    mag: Vec<f64>,
}

impl PixelFeatures {
    pub(super) fn new(plane: &Plane, positions: &[(usize, usize)]) -> Result<Self, SimilarityError> {
        let g = gradient_of(plane)?;
        let pick = |p: &Plane| positions.iter().map(|&q| p[q]).collect::<Vec<_>>();
        let di = pick(&g.di);
        let dj = pick(&g.dj);
        let mag = di.iter().zip(&dj).map(|(x, y)| x.hypot(*y)).collect();
        Ok(Self {
            intensity: pick(plane),
            di,
            dj,
            mag,
        })
    }
}

fn unit_cosine(a: &PixelFeatures, b: &PixelFeatures, k: usize) -> f64 {
    let dot = a.di[k] * b.di[k] + a.dj[k] * b.dj[k];
    (dot / (a.mag[k] * b.mag[k])).clamp(-1.0, 1.0)
}

fn ratio(x: f64, y: f64, c: f64) -> f64 {
    (2.0 * (x * y) + c) / ((x * x + y * y) + c)
}

pub(super) fn ima_sim(a: &PixelFeatures, b: &PixelFeatures, c: f64) -> f64 {
    let n = a.intensity.len();
    let mut total = 0.0;
    for k in 0..n {
        let d_int = ratio(a.intensity[k], b.intensity[k], c);
        let d_mag = ratio(a.mag[k], b.mag[k], c);
        let d_ang = match (a.mag[k] == 0.0, b.mag[k] == 0.0) {
            (true, true) => 1.0,
            (false, false) => unit_cosine(a, b, k),
            _ => 0.0,
        };
        total += (d_int + d_mag + (d_ang + 1.0) / 2.0) / 3.0;
    }
    total / n as f64
}

pub(super) fn grad_info(a: &PixelFeatures, b: &PixelFeatures) -> f64 {
    let n = a.intensity.len();
    let mut total = 0.0;
    for k in 0..n {
        if a.mag[k] == 0.0 || b.mag[k] == 0.0 {
            continue;
        }
        total += 0.5 * (unit_cosine(a, b, k) + 1.0) * a.mag[k].min(b.mag[k]);
    }
    total / n as f64
}
