//! Synthetic stacks with known cluster structure.
//!
//! Every cluster owns one cell of a regular grid laid over the image and a
//! base pattern drawn around that cell. Channels of a cluster are the base
//! pattern with independent multiplicative pixel noise. Three pattern styles
//! model decreasing regularity:
//!
//! * `High`: filled blobs strictly inside the cluster's cell, so clusters have
//!   disjoint support.
//! * `Medium`: thin rings and strokes that reach into neighbouring cells and
//!   partially overlap other clusters.
//! * `Low`: filigree random-walk traces and speckle around the cell centre.
//!
//! All randomness comes from a `Xoshiro256PlusPlus` generator seeded with the
//! spec's seed, so output is identical on every platform.

use ndarray::Array2;
use rand::{RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stack::{MassChannelStack, Plane, SpectralMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularity {
    High,
    Medium,
    Low,
}

impl std::str::FromStr for Regularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "high" => Ok(Self::High),
            "medium" => Ok(Self::Medium),
            "low" => Ok(Self::Low),
            other => Err(format!("unknown regularity {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub regularity: Regularity,
    pub images_per_cluster: usize,
    pub cluster_count: usize,
    pub noise_level: f64,
    pub seed: u64,
    pub height: usize,
    pub width: usize,
}

impl SyntheticSpec {
    pub const DEFAULT_SIZE: usize = 32;

    pub fn new(
        regularity: Regularity,
        images_per_cluster: usize,
        cluster_count: usize,
        noise_level: f64,
        seed: u64,
    ) -> Self {
        Self {
            regularity,
            images_per_cluster,
            cluster_count,
            noise_level,
            seed,
            height: Self::DEFAULT_SIZE,
            width: Self::DEFAULT_SIZE,
        }
    }

    pub fn with_size(mut self, height: usize, width: usize) -> Self {
        self.height = height;
        self.width = width;
        self
    }

    fn grid(&self) -> (usize, usize) {
        let cols = (self.cluster_count as f64).sqrt().ceil() as usize;
        let rows = self.cluster_count.div_ceil(cols);
        (rows, cols)
    }

    pub fn validate(&self) -> Result<(), SyntheticError> {
        let bad = |reason: String| Err(SyntheticError::InvalidSpec(reason));
        if self.cluster_count < 2 {
            return bad(format!("cluster_count must be >= 2, got {}", self.cluster_count));
        }
        if self.images_per_cluster == 0 {
            return bad("images_per_cluster must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.noise_level) {
            return bad(format!("noise_level must lie in [0, 1], got {}", self.noise_level));
        }
        let (rows, cols) = self.grid();
        if self.height < 4 * rows || self.width < 4 * cols {
            return bad(format!(
                "a {}x{} image cannot hold {} clusters (cells need >= 4x4 pixels)",
                self.height, self.width, self.cluster_count
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SyntheticError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

/// A generated stack plus the 1-based ground-truth cluster of every channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub stack: MassChannelStack,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    top: f64,
    left: f64,
    height: f64,
    width: f64,
}

impl Cell {
    fn centre(&self) -> (f64, f64) {
        (self.top + self.height / 2.0, self.left + self.width / 2.0)
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticDataset, SyntheticError> {
    spec.validate()?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);
    let (h, w) = (spec.height, spec.width);
    let (rows, cols) = spec.grid();
    let cell_h = h as f64 / rows as f64;
    let cell_w = w as f64 / cols as f64;

    let mask = corner_cut_mask(h, w);
    let mut bases = Vec::with_capacity(spec.cluster_count);
    for k in 0..spec.cluster_count {
        let cell = Cell {
            top: (k / cols) as f64 * cell_h,
            left: (k % cols) as f64 * cell_w,
            height: cell_h,
            width: cell_w,
        };
        let mut base = match spec.regularity {
            Regularity::High => blobs(&mut rng, cell, h, w),
            Regularity::Medium => strokes(&mut rng, cell, h, w),
            Regularity::Low => filigree(&mut rng, cell, h, w),
        };
        for ((i, j), v) in base.indexed_iter_mut() {
            if !mask[(i, j)] {
                *v = 0.0;
            }
        }
        bases.push(base);
    }

    let channels = spec.cluster_count * spec.images_per_cluster;
    let mut planes = Vec::with_capacity(channels);
    let mut labels = Vec::with_capacity(channels);
    for (k, base) in bases.iter().enumerate() {
        for _ in 0..spec.images_per_cluster {
            let mut plane = base.clone();
            for v in plane.iter_mut() {
                // Draw for every pixel so the stream position is independent of the data.
                let u: f64 = rng.random();
                *v = (*v * (1.0 + spec.noise_level * (2.0 * u - 1.0))).max(0.0);
            }
            planes.push(plane);
            labels.push(k + 1);
        }
    }
    let mz = (0..channels).map(|z| 100.0 + 1.5 * z as f64).collect();
    let mask = SpectralMask::new(mask).expect("corner-cut mask keeps the centre");
    let stack = MassChannelStack::new(mz, mask, planes)
        .expect("generator output satisfies stack invariants")
        .normalize_channels();
    Ok(SyntheticDataset { stack, labels })
}

/// Full frame except for small triangles at the four corners.
fn corner_cut_mask(h: usize, w: usize) -> Array2<bool> {
    let t = h.min(w) / 6;
    Array2::from_shape_fn((h, w), |(i, j)| {
        let (ri, rj) = (h - 1 - i, w - 1 - j);
        !(i + j < t || i + rj < t || ri + j < t || ri + rj < t)
    })
}

fn stamp(plane: &mut Plane, i: f64, j: f64, value: f64) {
    let (h, w) = plane.dim();
    if i >= 0.0 && j >= 0.0 {
        let (i, j) = (i as usize, j as usize);
        if i < h && j < w && plane[(i, j)] < value {
            plane[(i, j)] = value;
        }
    }
}

fn blobs(rng: &mut Xoshiro256PlusPlus, cell: Cell, h: usize, w: usize) -> Plane {
    let mut plane = Plane::zeros((h, w));
    let count = 1 + rng.random_range(0..2usize);
    for b in 0..count {
        let (ci, cj) = cell.centre();
        // The first blob sits on the centre so every cluster has support.
        let (ci, cj) = if b == 0 {
            (ci, cj)
        } else {
            (
                ci + (rng.random::<f64>() - 0.5) * cell.height * 0.3,
                cj + (rng.random::<f64>() - 0.5) * cell.width * 0.3,
            )
        };
        let ri = (cell.height * (0.18 + 0.12 * rng.random::<f64>())).max(1.2);
        let rj = (cell.width * (0.18 + 0.12 * rng.random::<f64>())).max(1.2);
        let level = 0.6 + 0.4 * rng.random::<f64>();
        for i in 0..h {
            for j in 0..w {
                let (y, x) = (i as f64 + 0.5, j as f64 + 0.5);
                let inside_cell = y >= cell.top + 0.5
                    && y < cell.top + cell.height - 0.5
                    && x >= cell.left + 0.5
                    && x < cell.left + cell.width - 0.5;
                let r2 = ((y - ci) / ri).powi(2) + ((x - cj) / rj).powi(2);
                if inside_cell && r2 <= 1.0 {
                    let v = level * (1.0 - 0.3 * r2);
                    if plane[(i, j)] < v {
                        plane[(i, j)] = v;
                    }
                }
            }
        }
    }
    plane
}

fn strokes(rng: &mut Xoshiro256PlusPlus, cell: Cell, h: usize, w: usize) -> Plane {
    let mut plane = Plane::zeros((h, w));
    let (ci, cj) = cell.centre();
    let extent = cell.height.min(cell.width);
    let level = 0.6 + 0.4 * rng.random::<f64>();

    // Thin ring around the cell centre, reaching the neighbouring cells.
    let radius = extent * (0.35 + 0.15 * rng.random::<f64>());
    let thickness = 0.8 + 0.4 * rng.random::<f64>();
    for i in 0..h {
        for j in 0..w {
            let d = ((i as f64 + 0.5 - ci).powi(2) + (j as f64 + 0.5 - cj).powi(2)).sqrt();
            if (d - radius).abs() <= thickness / 2.0 + 0.25 {
                plane[(i, j)] = level;
            }
        }
    }

    // One straight stroke through the centre with a random direction.
    let angle = rng.random::<f64>() * std::f64::consts::PI;
    let half = extent * (0.6 + 0.3 * rng.random::<f64>());
    let steps = (4.0 * half).ceil() as usize;
    for s in 0..=steps {
        let t = -half + 2.0 * half * s as f64 / steps as f64;
        stamp(&mut plane, ci + t * angle.sin(), cj + t * angle.cos(), level * 0.8);
    }
    plane
}

fn filigree(rng: &mut Xoshiro256PlusPlus, cell: Cell, h: usize, w: usize) -> Plane {
    const MOVES: [(f64, f64); 8] = [
        (-1.0, -1.0),
        (-1.0, 0.0),
        (-1.0, 1.0),
        (0.0, -1.0),
        (0.0, 1.0),
        (1.0, -1.0),
        (1.0, 0.0),
        (1.0, 1.0),
    ];
    let mut plane = Plane::zeros((h, w));
    let (ci, cj) = cell.centre();
    let extent = cell.height.min(cell.width);
    for _ in 0..3 {
        let (mut y, mut x) = (ci, cj);
        let steps = (3.0 * extent) as usize;
        for _ in 0..steps {
            stamp(&mut plane, y, x, 0.3 + 0.7 * rng.random::<f64>());
            let (dy, dx) = MOVES[rng.random_range(0..MOVES.len())];
            let (ny, nx) = (y + dy, x + dx);
            // Pull walkers that drift too far back towards the centre.
            if ((ny - ci).powi(2) + (nx - cj).powi(2)).sqrt() > 0.6 * extent {
                y += (ci - y).signum();
                x += (cj - x).signum();
            } else {
                y = ny;
                x = nx;
            }
        }
    }
    let speckles = (cell.height * cell.width * 0.05).ceil() as usize;
    for _ in 0..speckles {
        let y = cell.top + rng.random::<f64>() * cell.height;
        let x = cell.left + rng.random::<f64>() * cell.width;
        stamp(&mut plane, y, x, 0.2 + 0.6 * rng.random::<f64>());
    }
    plane
}
