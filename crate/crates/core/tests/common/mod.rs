//! Naive reference implementations shared by the integration tests.
//!
//! Everything here is written as plain loops over pixels and windows,
//! independent of the library's prepared-channel machinery.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use rand::{RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use sorc::preprocess::{zero_pad, ScaleSpaceStack};
use sorc::stack::{ChannelImage, Plane, SpectralMask};

pub const C: f64 = 1e-8;
pub const O: usize = 13;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn random_plane(rng: &mut Xoshiro256PlusPlus, h: usize, w: usize) -> Plane {
    Array2::from_shape_fn((h, w), |_| rng.random::<f64>())
}

/// Mask with roughly `keep` of the pixels spectral; never empty.
pub fn random_mask(rng: &mut Xoshiro256PlusPlus, h: usize, w: usize, keep: f64) -> Arc<SpectralMask> {
    let mut bits = Array2::from_shape_fn((h, w), |_| rng.random::<f64>() < keep);
    bits[(h / 2, w / 2)] = true;
    Arc::new(SpectralMask::new(bits).unwrap())
}

/// Random image on `mask`, zero outside it.
pub fn random_image(rng: &mut Xoshiro256PlusPlus, mask: &Arc<SpectralMask>) -> ChannelImage {
    let (h, w) = mask.dim();
    let plane = Array2::from_shape_fn((h, w), |(i, j)| {
        let v = rng.random::<f64>();
        if mask.contains(i, j) {
            v
        } else {
            0.0
        }
    });
    ChannelImage::new(plane, Arc::clone(mask), 0)
}

pub fn single(img: &ChannelImage) -> ScaleSpaceStack {
    ScaleSpaceStack::single(img.clone())
}

pub fn padded(img: &ChannelImage) -> ScaleSpaceStack {
    ScaleSpaceStack::single(zero_pad(img, O))
}

fn values(p: &Plane, pos: &[(usize, usize)]) -> Vec<f64> {
    pos.iter().map(|&q| p[q]).collect()
}

fn mean(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in v {
        s += x;
    }
    s / v.len() as f64
}

fn level_mean(a: &[Plane], b: &[Plane], f: impl Fn(&Plane, &Plane) -> f64) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += f(&a[k], &b[k]);
    }
    s / a.len() as f64
}

pub fn pearson_level(a: &Plane, b: &Plane, pos: &[(usize, usize)]) -> f64 {
    let (x, y) = (values(a, pos), values(b, pos));
    let (mx, my) = (mean(&x), mean(&y));
    let n = x.len() as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for k in 0..x.len() {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
    }
    (sxy / n) / ((sxx / n).sqrt() * (syy / n).sqrt())
}

pub fn cosine_level(a: &Plane, b: &Plane, pos: &[(usize, usize)]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for &q in pos {
        ab += a[q] * b[q];
        aa += a[q] * a[q];
        bb += b[q] * b[q];
    }
    ab / (aa.sqrt() * bb.sqrt())
}

pub fn angular_level(a: &Plane, b: &Plane, pos: &[(usize, usize)]) -> f64 {
    let signed = pos.iter().any(|&q| a[q] < 0.0 || b[q] < 0.0);
    let factor = if signed { 1.0 / PI } else { 2.0 / PI };
    1.0 - factor * cosine_level(a, b, pos).clamp(-1.0, 1.0).acos()
}

pub fn pearson(a: &[Plane], b: &[Plane], pos: &[(usize, usize)]) -> f64 {
    level_mean(a, b, |x, y| pearson_level(x, y, pos))
}

pub fn cosine(a: &[Plane], b: &[Plane], pos: &[(usize, usize)]) -> f64 {
    level_mean(a, b, |x, y| cosine_level(x, y, pos))
}

pub fn angular(a: &[Plane], b: &[Plane], pos: &[(usize, usize)]) -> f64 {
    level_mean(a, b, |x, y| angular_level(x, y, pos))
}

/// Mean, population variance and covariance over the clipped window.
fn window_moments(a: &Plane, b: &Plane, ci: usize, cj: usize) -> (f64, f64, f64, f64, f64) {
    let (h, w) = a.dim();
    let half = (O / 2) as isize;
    let mut cells = Vec::new();
    for di in -half..=half {
        for dj in -half..=half {
            let (i, j) = (ci as isize + di, cj as isize + dj);
            if i >= 0 && j >= 0 && (i as usize) < h && (j as usize) < w {
                cells.push((i as usize, j as usize));
            }
        }
    }
    let n = cells.len() as f64;
    let ma = cells.iter().map(|&q| a[q]).sum::<f64>() / n;
    let mb = cells.iter().map(|&q| b[q]).sum::<f64>() / n;
    let mut va = 0.0;
    let mut vb = 0.0;
    let mut cov = 0.0;
    for &q in &cells {
        va += (a[q] - ma).powi(2);
        vb += (b[q] - mb).powi(2);
        cov += (a[q] - ma) * (b[q] - mb);
    }
    (ma, mb, va / n, vb / n, cov / n)
}

pub fn ssim_level(a: &Plane, b: &Plane, pos: &[(usize, usize)]) -> f64 {
    let mut total = 0.0;
    for &(i, j) in pos {
        let (ma, mb, va, vb, cov) = window_moments(a, b, i, j);
        total += (2.0 * ma * mb + C) * (2.0 * cov + C) / ((ma * ma + mb * mb + C) * (va + vb + C));
    }
    total / pos.len() as f64
}

pub fn mssim(a: &[Plane], b: &[Plane], pos: &[(usize, usize)]) -> f64 {
    level_mean(a, b, |x, y| ssim_level(x, y, pos))
}

/// Central differences inside, one-sided differences on the border.
pub fn gradient(p: &Plane) -> (Plane, Plane) {
    let (h, w) = p.dim();
    let f = |i: isize, j: isize| p[(i.clamp(0, h as isize - 1) as usize, j.clamp(0, w as isize - 1) as usize)];
    let mut di = Plane::zeros((h, w));
    let mut dj = Plane::zeros((h, w));
    for i in 0..h as isize {
        for j in 0..w as isize {
            let (up, down) = (f(i - 1, j), f(i + 1, j));
            let (left, right) = (f(i, j - 1), f(i, j + 1));
            let si = if i == 0 || i == h as isize - 1 { 1.0 } else { 2.0 };
            let sj = if j == 0 || j == w as isize - 1 { 1.0 } else { 2.0 };
            di[(i as usize, j as usize)] = (down - up) / si;
            dj[(i as usize, j as usize)] = (right - left) / sj;
        }
    }
    (di, dj)
}

fn feature_planes(p: &Plane) -> [Plane; 3] {
    let (di, dj) = gradient(p);
    let mut orient = Plane::zeros(p.dim());
    let mut mag = Plane::zeros(p.dim());
    for ((i, j), v) in orient.indexed_iter_mut() {
        let (y, x) = (di[(i, j)], dj[(i, j)]);
        mag[(i, j)] = (y * y + x * x).sqrt();
        if y != 0.0 || x != 0.0 {
            let mut deg = y.atan2(x) * 180.0 / PI + 180.0;
            if deg >= 360.0 {
                deg -= 360.0;
            }
            *v = deg;
        }
    }
    [p.clone(), orient, mag]
}

pub fn mfs_level(a: &Plane, b: &Plane, pos: &[(usize, usize)]) -> f64 {
    let (fa, fb) = (feature_planes(a), feature_planes(b));
    let mut total = 0.0;
    for &(i, j) in pos {
        let mut best = f64::NEG_INFINITY;
        for k in 0..3 {
            let (ma, mb, va, vb, cov) = window_moments(&fa[k], &fb[k], i, j);
            let (sa, sb) = (va.sqrt(), vb.sqrt());
            let xi = (2.0 * ma * mb + C) / (ma * ma + mb * mb + C)
                * ((2.0 * sa * sb + C) / (va + vb + C))
                * ((cov + C) / (sa * sb + C));
            best = best.max(xi.signum() * xi.abs().powf(1.0 / 3.0));
        }
        total += best;
    }
    total / pos.len() as f64
}

pub fn mmfs(a: &[Plane], b: &[Plane], pos: &[(usize, usize)]) -> f64 {
    level_mean(a, b, |x, y| mfs_level(x, y, pos))
}

pub fn shared_pixel(a: &Plane, b: &Plane, pos: &[(usize, usize)]) -> f64 {
    let (mut diff, mut sa, mut sb) = (0.0, 0.0, 0.0);
    for &q in pos {
        diff += (a[q] - b[q]).abs();
        sa += a[q];
        sb += b[q];
    }
    1.0 - diff / (sa + sb)
}

fn band(v: f64, max: f64) -> usize {
    if v < 0.2 * max {
        0
    } else if v <= 0.8 * max {
        1
    } else {
        2
    }
}

pub fn contingency(a: &Plane, b: &Plane, pos: &[(usize, usize)]) -> f64 {
    let max_a = pos.iter().map(|&q| a[q]).fold(f64::MIN, f64::max);
    let max_b = pos.iter().map(|&q| b[q]).fold(f64::MIN, f64::max);
    let mut score = 0i64;
    for &q in pos {
        let (x, y) = (band(a[q], max_a), band(b[q], max_b));
        score += if x == y { 1 } else { -1 };
    }
    score as f64 / pos.len() as f64
}

fn log_hat(beta: f64, alpha: f64) -> Option<f64> {
    let lo = beta + alpha;
    let hi = 1.0 - beta - alpha;
    if lo <= 0.0 || hi <= 0.0 {
        return None;
    }
    Some(2.0 * (lo * (beta / lo).ln() + hi * ((1.0 - beta) / hi).ln()))
}

fn hyper_one_sided(n: f64, a: f64, b: f64, ab: f64) -> f64 {
    let beta1 = (n - b) / n;
    let beta2 = b / n;
    let h1 = log_hat(beta1, (a - ab) / a - beta1);
    let h2 = log_hat(beta2, ab / a - beta2);
    match (h1, h2) {
        (Some(x), Some(y)) => x.exp() - y.exp(),
        _ if ab == a => 1.0,
        _ => -1.0,
    }
}

pub fn hypergeometric(a: &Plane, b: &Plane, pos: &[(usize, usize)]) -> f64 {
    let (mut na, mut nb, mut nab) = (0.0, 0.0, 0.0);
    for &q in pos {
        let (x, y) = (a[q] > 0.0, b[q] > 0.0);
        na += f64::from(u8::from(x));
        nb += f64::from(u8::from(y));
        nab += f64::from(u8::from(x && y));
    }
    let n = pos.len() as f64;
    0.5 * (hyper_one_sided(n, na, nb, nab) + hyper_one_sided(n, nb, na, nab))
}

pub fn local_std(a: &Plane, b: &Plane, pos: &[(usize, usize)]) -> f64 {
    let mut total = 0.0;
    for &(i, j) in pos {
        let (_, _, va, vb, _) = window_moments(a, b, i, j);
        let (sa, sb) = (va.sqrt(), vb.sqrt());
        total += (2.0 * sa * sb + C) / (sa * sa + sb * sb + C);
    }
    total / pos.len() as f64
}

pub fn ima_sim(a: &Plane, b: &Plane, pos: &[(usize, usize)]) -> f64 {
    let (ai, aj) = gradient(a);
    let (bi, bj) = gradient(b);
    let mut total = 0.0;
    for &q in pos {
        let ma = ai[q].hypot(aj[q]);
        let mb = bi[q].hypot(bj[q]);
        let d_int = (2.0 * a[q] * b[q] + C) / (a[q] * a[q] + b[q] * b[q] + C);
        let d_mag = (2.0 * ma * mb + C) / (ma * ma + mb * mb + C);
        let d_ang = if ma == 0.0 && mb == 0.0 {
            1.0
        } else if ma == 0.0 || mb == 0.0 {
            0.0
        } else {
            ((ai[q] / ma) * (bi[q] / mb) + (aj[q] / ma) * (bj[q] / mb)).clamp(-1.0, 1.0)
        };
        total += (d_int + d_mag + (d_ang + 1.0) / 2.0) / 3.0;
    }
    total / pos.len() as f64
}

pub fn grad_info(a: &Plane, b: &Plane, pos: &[(usize, usize)]) -> f64 {
    let (ai, aj) = gradient(a);
    let (bi, bj) = gradient(b);
    let mut total = 0.0;
    for &q in pos {
        let ma = ai[q].hypot(aj[q]);
        let mb = bi[q].hypot(bj[q]);
        if ma > 0.0 && mb > 0.0 {
            let cos = ((ai[q] * bi[q] + aj[q] * bj[q]) / (ma * mb)).clamp(-1.0, 1.0);
            total += 0.5 * (cos + 1.0) * ma.min(mb);
        }
    }
    total / pos.len() as f64
}

fn bin(v: f64, bins: usize) -> usize {
    let mut k = 0;
    while k + 1 < bins && v >= (k + 1) as f64 / bins as f64 {
        k += 1;
    }
    k
}

fn counts(p: &Plane, pos: &[(usize, usize)], bins: usize) -> Vec<f64> {
    let mut c = vec![0.0; bins];
    for &q in pos {
        c[bin(p[q], bins)] += 1.0;
    }
    c
}

pub fn histogram(a: &Plane, b: &Plane, pos: &[(usize, usize)], bins: usize) -> f64 {
    let n = pos.len() as f64;
    let (ca, cb) = (counts(a, pos, bins), counts(b, pos, bins));
    let mut s = 0.0;
    for k in 0..bins {
        s += ((ca[k] / n).sqrt() - (cb[k] / n).sqrt()).powi(2);
    }
    1.0 - (s / 2.0).sqrt()
}

fn entropy(counts: impl Iterator<Item = f64>, n: f64) -> f64 {
    let mut h = 0.0;
    for c in counts {
        if c > 0.0 {
            h -= c / n * (c / n).ln();
        }
    }
    h
}

pub fn self_entropy(a: &Plane, pos: &[(usize, usize)], bins: usize) -> f64 {
    entropy(counts(a, pos, bins).into_iter(), pos.len() as f64)
}

pub fn mutual_info(a: &Plane, b: &Plane, pos: &[(usize, usize)], bins: usize) -> f64 {
    let n = pos.len() as f64;
    let mut joint = vec![vec![0.0; bins]; bins];
    for &q in pos {
        joint[bin(a[q], bins)][bin(b[q], bins)] += 1.0;
    }
    let ha = entropy(counts(a, pos, bins).into_iter(), n);
    let hb = entropy(counts(b, pos, bins).into_iter(), n);
    let hab = entropy(joint.into_iter().flatten(), n);
    (ha + hb - hab).max(0.0)
}

/// Adjusted Rand index from the pair-counting contingency table.
pub fn adjusted_rand_index(x: &[usize], y: &[usize]) -> f64 {
    let comb2 = |k: f64| k * (k - 1.0) / 2.0;
    let n = x.len();
    let mut sum_cells = 0.0;
    let mut ids_x: Vec<usize> = x.to_vec();
    ids_x.sort_unstable();
    ids_x.dedup();
    let mut ids_y: Vec<usize> = y.to_vec();
    ids_y.sort_unstable();
    ids_y.dedup();
    for &u in &ids_x {
        for &v in &ids_y {
            let c = (0..n).filter(|&k| x[k] == u && y[k] == v).count();
            sum_cells += comb2(c as f64);
        }
    }
    let rows: f64 = ids_x.iter().map(|&u| comb2(x.iter().filter(|&&l| l == u).count() as f64)).sum();
    let cols: f64 = ids_y.iter().map(|&v| comb2(y.iter().filter(|&&l| l == v).count() as f64)).sum();
    let expected = rows * cols / comb2(n as f64);
    let max = (rows + cols) / 2.0;
    if max == expected {
        return 1.0;
    }
    (sum_cells - expected) / (max - expected)
}

/// Silhouette straight from its per-point definition.
pub fn silhouette(d: &Array2<f64>, labels: &[usize]) -> f64 {
    let n = labels.len();
    let mut s = 0.0;
    for i in 0..n {
        let same: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == labels[i]).collect();
        if same.is_empty() {
            continue;
        }
        let a = same.iter().map(|&j| d[(i, j)]).sum::<f64>() / same.len() as f64;
        let mut b = f64::INFINITY;
        for &other in labels {
            if other == labels[i] {
                continue;
            }
            let members: Vec<usize> = (0..n).filter(|&j| labels[j] == other).collect();
            b = b.min(members.iter().map(|&j| d[(i, j)]).sum::<f64>() / members.len() as f64);
        }
        s += (b - a) / a.max(b);
    }
    s / n as f64
}

/// Calinski-Harabasz from between and within scatter sums.
pub fn calinski_harabasz(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    let dim = points[0].len();
    let mut ids = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let k = ids.len();
    let centre = |members: &[usize]| -> Vec<f64> {
        (0..dim)
            .map(|t| members.iter().map(|&m| points[m][t]).sum::<f64>() / members.len() as f64)
            .collect()
    };
    let all: Vec<usize> = (0..n).collect();
    let g = centre(&all);
    let (mut bss, mut wss) = (0.0, 0.0);
    for &id in &ids {
        let members: Vec<usize> = all.iter().copied().filter(|&m| labels[m] == id).collect();
        let c = centre(&members);
        for t in 0..dim {
            bss += members.len() as f64 * (c[t] - g[t]).powi(2);
        }
        for &m in &members {
            for t in 0..dim {
                wss += (points[m][t] - c[t]).powi(2);
            }
        }
    }
    (bss / (k as f64 - 1.0)) / (wss / (n - k) as f64)
}

/// Oracle value of `f` for two stacks of levels over `pos`. Single-scale
/// functions look at the first level only.
pub fn oracle(f: sorc::similarity::SimilarityFunctionId, a: &[Plane], b: &[Plane], pos: &[(usize, usize)], bins: usize) -> f64 {
    use sorc::similarity::SimilarityFunctionId as F;
    let (x, y) = (&a[0], &b[0]);
    match f {
        F::Pearson => pearson(a, b, pos),
        F::Cosine => cosine(a, b, pos),
        F::Angular => angular(a, b, pos),
        F::Mssim => mssim(a, b, pos),
        F::Mmfs => mmfs(a, b, pos),
        F::SharedPixel => shared_pixel(x, y, pos),
        F::Contingency => contingency(x, y, pos),
        F::Hypergeometric => hypergeometric(x, y, pos),
        F::LocalStd => local_std(x, y, pos),
        F::ImaSim => ima_sim(x, y, pos),
        F::GradInfo => grad_info(x, y, pos),
        F::Histogram => histogram(x, y, pos, bins),
        F::MutualInfo => mutual_info(x, y, pos, bins),
    }
}

/// Agreement tolerance of each function against its oracle.
pub fn tolerance(f: sorc::similarity::SimilarityFunctionId) -> f64 {
    use sorc::similarity::SimilarityFunctionId as F;
    match f {
        F::Mmfs => 1e-6,
        F::Mssim | F::LocalStd | F::ImaSim | F::GradInfo => 1e-9,
        _ => 1e-12,
    }
}

/// Whether `f` needs a frame of at least one window around small inputs.
pub fn windowed(f: sorc::similarity::SimilarityFunctionId) -> bool {
    use sorc::similarity::SimilarityFunctionId as F;
    matches!(f, F::Mssim | F::Mmfs | F::LocalStd)
}
