//! Synthetic multi-contrast stacks with planted gene-alteration fields, and
//! the biopsy / unlabeled / normal sample pickers.
//!
//! Geometry (fractions of the image size): a brain ellipse with semi-axes
//! 0.46, a tumor ellipse centred at `(0.5 h, 0.27 w)` with semi-axes
//! `(0.3 h, 0.2 w)`. Inside the tumor the scaled ellipse at 0.6 is the
//! enhancing core (CE), the one at 0.25 necrosis, the remainder the
//! non-enhancing rim (NE). The contralateral region is the tumor mirrored
//! across the vertical midline.

mod plane;
mod sampling;

pub use plane::{Mask, Plane};
pub use sampling::{sample_biopsies, sample_normal, sample_unlabeled, BiopsyOptions, Center, LabeledCenter};

use crate::features::{window_fits, HALF, WINDOW_SIZE};
use crate::rng::SeedTree;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub const MIN_SIDE: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhantomError {
    #[error("phantom must be at least {MIN_SIDE}x{MIN_SIDE}, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("invalid phantom config: {0}")]
    InvalidConfig(String),
    #[error("placed {placed} of {requested} samples within {attempts} attempts")]
    Placement { requested: usize, placed: usize, attempts: usize },
    #[error("{region} admits {available} valid windows, {needed} needed")]
    InsufficientRegion { region: &'static str, needed: usize, available: usize },
    #[error("unlabeled sample count must be even, got {0}")]
    OddCount(usize),
    #[error("no truth plane for gene {0}")]
    UnknownGene(String),
}

/// Planted alteration field and its intensity signature.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneSpec {
    pub name: String,
    /// Target altered fraction of the tumoral AOI.
    pub prevalence: f64,
    pub blob_count: usize,
    /// Blob radius range in pixels.
    pub radius: (f64, f64),
    /// Additive intensity shift on altered pixels, per channel.
    pub signature: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomConfig {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub channels: Vec<String>,
    pub genes: Vec<GeneSpec>,
    /// Standard deviation of the additive white noise.
    pub noise: f64,
    /// Amplitude of the smooth texture added to every channel.
    pub texture: f64,
}

/// Base intensity per tissue: background, normal, NE, CE, necrosis.
const TISSUE: [f64; 5] = [0.0, 1.0, 1.3, 1.7, 0.5];
const CHANNEL_FACTOR: [f64; 5] = [1.0, 0.9, 1.1, 0.8, 1.2];

impl Default for PhantomConfig {
    fn default() -> Self {
        let channels: Vec<String> = crate::features::DEFAULT_CONTRASTS.iter().map(|s| s.to_string()).collect();
        let genes = vec![
            GeneSpec {
                name: "geneA".into(),
                prevalence: 0.4,
                blob_count: 4,
                radius: (5.0, 10.0),
                signature: vec![0.0, 0.6, 0.0, 0.0, 1.0],
            },
            GeneSpec {
                name: "geneB".into(),
                prevalence: 0.3,
                blob_count: 3,
                radius: (6.0, 12.0),
                signature: vec![0.0, 0.0, 0.8, -0.6, 0.0],
            },
        ];
        Self { width: 128, height: 128, seed: 1, channels, genes, noise: 0.05, texture: 0.05 }
    }
}

impl PhantomConfig {
    pub fn validate(&self) -> Result<(), PhantomError> {
        if self.width < MIN_SIDE || self.height < MIN_SIDE {
            return Err(PhantomError::TooSmall { width: self.width, height: self.height });
        }
        if self.channels.is_empty() {
            return Err(PhantomError::InvalidConfig("no channels".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) || !(self.texture >= 0.0 && self.texture.is_finite()) {
            return Err(PhantomError::InvalidConfig("noise and texture must be finite and nonnegative".into()));
        }
        for g in &self.genes {
            if !(g.prevalence > 0.0 && g.prevalence < 1.0) {
                return Err(PhantomError::InvalidConfig(format!("prevalence of {} must lie in (0, 1)", g.name)));
            }
            if g.blob_count == 0 || !(g.radius.0 > 0.0 && g.radius.0 <= g.radius.1) {
                return Err(PhantomError::InvalidConfig(format!("blob parameters of {}", g.name)));
            }
            if g.signature.len() != self.channels.len() {
                return Err(PhantomError::InvalidConfig(format!(
                    "signature of {} has {} entries for {} channels",
                    g.name,
                    g.signature.len(),
                    self.channels.len()
                )));
            }
        }
        Ok(())
    }

    pub fn gene(&self, name: &str) -> Option<&GeneSpec> {
        self.genes.iter().find(|g| g.name == name)
    }
}

/// Channels, region masks and (for phantoms) per-gene truth planes with
/// values 0 outside the AOI, 1 non-altered, 2 altered.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastStack {
    pub names: Vec<String>,
    pub channels: Vec<Plane>,
    pub brain: Mask,
    pub ce: Mask,
    pub ne: Mask,
    pub necrosis: Mask,
    pub contralateral: Mask,
    pub truth: Vec<(String, Plane)>,
}

impl ContrastStack {
    pub fn width(&self) -> usize {
        self.brain.width()
    }
    pub fn height(&self) -> usize {
        self.brain.height()
    }
    pub fn channels(&self) -> &[Plane] {
        &self.channels
    }

    pub fn aoi(&self) -> Mask {
        self.ce.union(&self.ne)
    }

    pub fn truth(&self, gene: &str) -> Option<&Plane> {
        self.truth.iter().find(|(g, _)| g == gene).map(|(_, p)| p)
    }

    /// Window in bounds and entirely inside the brain.
    pub fn valid_center(&self, row: usize, col: usize) -> bool {
        if !window_fits(self.width(), self.height(), row, col) {
            return false;
        }
        let (r0, c0) = (row - HALF, col - HALF);
        let (r1, c1) = (r0 + WINDOW_SIZE - 1, c0 + WINDOW_SIZE - 1);
        // the brain is convex, so its corners suffice
        [(r0, c0), (r0, c1), (r1, c0), (r1, c1)].iter().all(|&(r, c)| self.brain.get(r, c))
    }

    /// Checks shapes and the region algebra; returns a description of the
    /// first violation.
    pub fn check_consistency(&self) -> Result<(), String> {
        let (w, h) = (self.width(), self.height());
        let shapes_ok = self.channels.iter().all(|p| p.width() == w && p.height() == h)
            && [&self.ce, &self.ne, &self.necrosis, &self.contralateral].iter().all(|m| m.width() == w && m.height() == h)
            && self.truth.iter().all(|(_, p)| p.width() == w && p.height() == h);
        if !shapes_ok {
            return Err("planes differ in shape".into());
        }
        if self.names.len() != self.channels.len() {
            return Err("channel names and planes differ in count".into());
        }
        if self.ce.intersects(&self.ne) || self.ce.intersects(&self.necrosis) || self.ne.intersects(&self.necrosis) {
            return Err("CE, NE and necrosis overlap".into());
        }
        let aoi = self.aoi();
        if self.contralateral.intersects(&aoi) || self.contralateral.intersects(&self.necrosis) {
            return Err("contralateral region overlaps the tumor".into());
        }
        for (g, t) in &self.truth {
            for r in 0..h {
                for c in 0..w {
                    let v = t.get(r, c);
                    let ok = if aoi.get(r, c) { v == 1.0 || v == 2.0 } else { v == 0.0 };
                    if !ok {
                        return Err(format!("truth plane {g} has value {v} at ({r}, {c})"));
                    }
                }
            }
        }
        Ok(())
    }
}

struct Geometry {
    w: f64,
    h: f64,
}

impl Geometry {
    fn inside(&self, r: usize, c: usize, cr: f64, cc: f64, ar: f64, ac: f64) -> bool {
        let dr = (r as f64 + 0.5 - cr) / ar;
        let dc = (c as f64 + 0.5 - cc) / ac;
        dr * dr + dc * dc <= 1.0
    }
    fn brain(&self, r: usize, c: usize) -> bool {
        self.inside(r, c, 0.5 * self.h, 0.5 * self.w, 0.46 * self.h, 0.46 * self.w)
    }
    fn tumor(&self, r: usize, c: usize, scale: f64) -> bool {
        self.inside(r, c, 0.5 * self.h, 0.27 * self.w, 0.3 * self.h * scale, 0.2 * self.w * scale)
    }
}

fn plane_wave_texture(rng: &mut impl Rng, w: usize, h: usize, amplitude: f64) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    if amplitude == 0.0 {
        return out;
    }
    for _ in 0..3 {
        let freq: f64 = rng.random_range(0.05..0.25);
        let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let (s, c) = angle.sin_cos();
        for r in 0..h {
            for col in 0..w {
                let t = std::f64::consts::TAU * freq * (r as f64 * s + col as f64 * c) + phase;
                out[r * w + col] += amplitude / 3.0 * t.sin();
            }
        }
    }
    out
}

/// Smooth blob field thresholded at the AOI quantile that yields the
/// prevalence target.
fn gene_field(rng: &mut impl Rng, geo: &Geometry, aoi: &Mask, spec: &GeneSpec) -> Vec<bool> {
    let (w, h) = (aoi.width(), aoi.height());
    let blobs: Vec<(f64, f64, f64)> = (0..spec.blob_count)
        .map(|_| {
            let r = rng.random_range(0.2 * geo.h..0.8 * geo.h);
            let c = rng.random_range(0.07 * geo.w..0.47 * geo.w);
            let rad = if spec.radius.0 < spec.radius.1 { rng.random_range(spec.radius.0..spec.radius.1) } else { spec.radius.0 };
            (r, c, rad)
        })
        .collect();
    let field: Vec<f64> = (0..w * h)
        .map(|i| {
            let (r, c) = ((i / w) as f64, (i % w) as f64);
            blobs.iter().map(|&(br, bc, rad)| (-((r - br).powi(2) + (c - bc).powi(2)) / (2.0 * rad * rad)).exp()).sum()
        })
        .collect();
    let mut vals: Vec<f64> = aoi.pixels().map(|(r, c)| field[r * w + c]).collect();
    if vals.is_empty() {
        return vec![false; w * h];
    }
    vals.sort_by(|a, b| b.total_cmp(a));
    let k = ((spec.prevalence * vals.len() as f64).round() as usize).clamp(1, vals.len());
    let threshold = vals[k - 1];
    (0..w * h).map(|i| aoi.get(i / w, i % w) && field[i] >= threshold).collect()
}

pub fn generate(config: &PhantomConfig) -> Result<ContrastStack, PhantomError> {
    config.validate()?;
    let (w, h) = (config.width, config.height);
    let geo = Geometry { w: w as f64, h: h as f64 };
    let seeds = SeedTree::new(config.seed);

    let brain = Mask::from_fn(w, h, |r, c| geo.brain(r, c));
    let necrosis = Mask::from_fn(w, h, |r, c| geo.tumor(r, c, 0.25));
    let ce = Mask::from_fn(w, h, |r, c| geo.tumor(r, c, 0.6) && !necrosis.get(r, c));
    let ne = Mask::from_fn(w, h, |r, c| geo.tumor(r, c, 1.0) && !geo.tumor(r, c, 0.6));
    let tumor = Mask::from_fn(w, h, |r, c| geo.tumor(r, c, 1.0));
    let contralateral = Mask::from_fn(w, h, |r, c| tumor.get(r, w - 1 - c) && brain.get(r, c));
    let aoi = ce.union(&ne);

    let altered: Vec<Vec<bool>> = config
        .genes
        .iter()
        .map(|g| gene_field(&mut seeds.stream(&format!("phantom/genes/{}", g.name)), &geo, &aoi, g))
        .collect();

    let mut channels = Vec::with_capacity(config.channels.len());
    for (k, _) in config.channels.iter().enumerate() {
        let texture = plane_wave_texture(&mut seeds.stream(&format!("phantom/texture/{k}")), w, h, config.texture);
        let mut noise_rng = seeds.stream(&format!("phantom/noise/{k}"));
        let factor = CHANNEL_FACTOR[k % CHANNEL_FACTOR.len()];
        let mut plane = Plane::new(w, h);
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                let tissue = if !brain.get(r, c) {
                    0
                } else if necrosis.get(r, c) {
                    4
                } else if ce.get(r, c) {
                    3
                } else if ne.get(r, c) {
                    2
                } else {
                    1
                };
                let mut v = TISSUE[tissue] * factor + texture[i];
                for (g, alt) in config.genes.iter().zip(&altered) {
                    if alt[i] {
                        v += g.signature[k];
                    }
                }
                // drawn for every pixel so the stream does not depend on masks
                let z: f64 = noise_rng.sample(StandardNormal);
                v += config.noise * z;
                plane.set(r, c, v as f32);
            }
        }
        channels.push(plane);
    }

    let truth = config
        .genes
        .iter()
        .zip(&altered)
        .map(|(g, alt)| {
            let p = Plane::from_fn(w, h, |r, c| {
                if !aoi.get(r, c) {
                    0.0
                } else if alt[r * w + c] {
                    2.0
                } else {
                    1.0
                }
            });
            (g.name.clone(), p)
        })
        .collect();

    Ok(ContrastStack { names: config.channels.clone(), channels, brain, ce, ne, necrosis, contralateral, truth })
}

#[cfg(test)]
mod tests;
