//! Gray-level co-occurrence matrices over 256 levels and the 13 Haralick
//! statistics.
//!
//! An 8x8 window holds at most 64 distinct levels, so a matrix is kept as a
//! sorted list of its nonzero cells. All entropies are in bits.

use super::window::QuantizedWindow;
use super::WINDOW_SIZE;

pub const HARALICK_NAMES: [&str; 13] = [
    "asm",
    "contrast",
    "correlation",
    "sum_squares",
    "idm",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "entropy",
    "difference_variance",
    "difference_entropy",
    "imc1",
    "imc2",
];

pub const DISTANCES: [usize; 2] = [1, 3];

/// Unit (row, col) steps for 0, 45, 90 and 135 degrees.
pub const DIRECTIONS: [(isize, isize); 4] = [(0, 1), (-1, 1), (-1, 0), (-1, -1)];

pub const LEVELS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct GlcmMatrix {
    distance: usize,
    direction: (isize, isize),
    entries: Vec<((u8, u8), f64)>,
}

impl GlcmMatrix {
    /// Symmetric, normalized co-occurrence of pixel pairs offset by
    /// `distance * direction`.
    pub fn new(q: &QuantizedWindow, distance: usize, direction: (isize, isize)) -> Self {
        let (dr, dc) = (direction.0 * distance as isize, direction.1 * distance as isize);
        let n = WINDOW_SIZE as isize;
        let mut keys: Vec<u16> = Vec::with_capacity(2 * WINDOW_SIZE * WINDOW_SIZE);
        for r in 0..n {
            for c in 0..n {
                let (r2, c2) = (r + dr, c + dc);
                if r2 < 0 || r2 >= n || c2 < 0 || c2 >= n {
                    continue;
                }
                let a = q.get(r as usize, c as usize) as u16;
                let b = q.get(r2 as usize, c2 as usize) as u16;
                keys.push(a << 8 | b);
                keys.push(b << 8 | a);
            }
        }
        keys.sort_unstable();
        let total = keys.len() as f64;
        let mut entries = Vec::new();
        let mut i = 0;
        while i < keys.len() {
            let mut j = i;
            while j < keys.len() && keys[j] == keys[i] {
                j += 1;
            }
            let k = keys[i];
            entries.push((((k >> 8) as u8, (k & 0xff) as u8), (j - i) as f64 / total));
            i = j;
        }
        Self { distance, direction, entries }
    }

    pub fn distance(&self) -> usize {
        self.distance
    }
    pub fn direction(&self) -> (isize, isize) {
        self.direction
    }

    /// Nonzero cells sorted by `(i, j)`.
    pub fn entries(&self) -> &[((u8, u8), f64)] {
        &self.entries
    }

    pub fn get(&self, i: u8, j: u8) -> f64 {
        self.entries.binary_search_by_key(&(i, j), |e| e.0).map_or(0.0, |k| self.entries[k].1)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

pub fn haralick(m: &GlcmMatrix) -> [f64; 13] {
    let e = m.entries();
    // symmetric: row and column marginals coincide
    let mut px = [0.0f64; LEVELS];
    let mut psum = [0.0f64; 2 * LEVELS - 1];
    let mut pdiff = [0.0f64; LEVELS];
    let (mut asm, mut contrast, mut idm, mut hxy, mut sij) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &((i, j), p) in e {
        let (fi, fj) = (i as f64, j as f64);
        px[i as usize] += p;
        psum[i as usize + j as usize] += p;
        pdiff[(i as isize - j as isize).unsigned_abs()] += p;
        asm += p * p;
        let d2 = (fi - fj) * (fi - fj);
        contrast += d2 * p;
        idm += p / (1.0 + d2);
        hxy -= plogp(p);
        sij += fi * fj * p;
    }
    let (mut mu, mut hx) = (0.0, 0.0);
    for (i, &p) in px.iter().enumerate() {
        mu += i as f64 * p;
        hx -= plogp(p);
    }
    let var: f64 = px.iter().enumerate().map(|(i, &p)| (i as f64 - mu).powi(2) * p).sum();
    let correlation = if var > 1e-12 { (sij - mu * mu) / var } else { 0.0 };
    let sum_squares: f64 = e.iter().map(|&((i, _), p)| (i as f64 - mu).powi(2) * p).sum();

    let sum_average: f64 = psum.iter().enumerate().map(|(k, &p)| k as f64 * p).sum();
    let sum_variance: f64 = psum.iter().enumerate().map(|(k, &p)| (k as f64 - sum_average).powi(2) * p).sum();
    let sum_entropy: f64 = -psum.iter().map(|&p| plogp(p)).sum::<f64>();
    let diff_mean: f64 = pdiff.iter().enumerate().map(|(k, &p)| k as f64 * p).sum();
    let diff_variance: f64 = pdiff.iter().enumerate().map(|(k, &p)| (k as f64 - diff_mean).powi(2) * p).sum();
    let diff_entropy: f64 = -pdiff.iter().map(|&p| plogp(p)).sum::<f64>();

    let hxy1: f64 = -e.iter().map(|&((i, j), p)| p * (px[i as usize] * px[j as usize]).log2()).sum::<f64>();
    // HXY2 = -sum px(i) px(j) log(px(i) px(j)) = HX + HY
    let hxy2 = 2.0 * hx;
    let imc1 = if hx > 0.0 { (hxy - hxy1) / hx } else { 0.0 };
    let imc2 = (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt();

    [
        asm,
        contrast,
        correlation,
        sum_squares,
        idm,
        sum_average,
        sum_variance,
        sum_entropy,
        hxy,
        diff_variance,
        diff_entropy,
        imc1,
        imc2,
    ]
}

/// Direction-averaged Haralick features for each distance (13 per distance).
pub fn glcm_features(q: &QuantizedWindow) -> [f64; 26] {
    let mut out = [0.0; 26];
    for (k, &d) in DISTANCES.iter().enumerate() {
        for &dir in &DIRECTIONS {
            let h = haralick(&GlcmMatrix::new(q, d, dir));
            for (o, v) in out[13 * k..13 * (k + 1)].iter_mut().zip(&h) {
                *o += v / DIRECTIONS.len() as f64;
            }
        }
    }
    out
}
