//! Windowed texture features: 18 first-order statistics, 26 GLCM
//! (Haralick) statistics and 12 Gabor statistics per contrast.

mod gabor;
mod glcm;
mod stats;
mod window;

pub use gabor::{gabor_features, gabor_kernel, gabor_response_features, FREQUENCIES, KERNEL_SIZE, ORIENTATIONS, SIGMAS};
pub use glcm::{glcm_features, haralick, GlcmMatrix, DIRECTIONS, DISTANCES, HARALICK_NAMES};
pub use stats::{histogram_entropy_uniformity, percentile, statistical_features, STAT_NAMES};
pub use window::{extract_window, quantize, window_fits, QuantizedWindow, Window, HALF, WINDOW_LEN};

use crate::phantom::{ContrastStack, Plane};
use std::ops::Range;
use thiserror::Error;

pub const WINDOW_SIZE: usize = 8;
pub const STAT_COUNT: usize = 18;
pub const GLCM_COUNT: usize = 26;
pub const GABOR_COUNT: usize = 12;
pub const FEATURES_PER_CONTRAST: usize = STAT_COUNT + GLCM_COUNT + GABOR_COUNT;

pub const DEFAULT_CONTRASTS: [&str; 5] = ["T1+C", "T2", "MD", "FA", "rCBV"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("window centered at (row {row}, col {col}) leaves the {width}x{height} image")]
    OutOfBounds { row: usize, col: usize, width: usize, height: usize },
    #[error("window contains a non-finite value")]
    NonFinite,
    #[error("expected {expected} features, got {got}")]
    Length { expected: usize, got: usize },
}

/// The 56 per-contrast slot names: statistics, then GLCM by distance, then
/// Gabor by `(sigma, frequency)` as mean/std pairs.
pub fn contrast_feature_names() -> Vec<String> {
    let mut names: Vec<String> = STAT_NAMES.iter().map(|s| s.to_string()).collect();
    for d in DISTANCES {
        names.extend(HARALICK_NAMES.iter().map(|h| format!("glcm_d{d}_{h}")));
    }
    for s in SIGMAS {
        for f in FREQUENCIES {
            names.push(format!("gabor_s{s}_f{f}_mean"));
            names.push(format!("gabor_s{s}_f{f}_std"));
        }
    }
    names
}

/// Contrast-major arrangement of feature slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureLayout {
    contrasts: Vec<String>,
}

impl FeatureLayout {
    pub fn new<S: Into<String>>(contrasts: impl IntoIterator<Item = S>) -> Self {
        Self { contrasts: contrasts.into_iter().map(Into::into).collect() }
    }

    pub fn default_five() -> Self {
        Self::new(DEFAULT_CONTRASTS)
    }

    pub fn contrasts(&self) -> &[String] {
        &self.contrasts
    }

    pub fn contrast_count(&self) -> usize {
        self.contrasts.len()
    }

    pub fn len(&self) -> usize {
        FEATURES_PER_CONTRAST * self.contrasts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contrasts.is_empty()
    }

    pub fn block(&self, k: usize) -> Range<usize> {
        k * FEATURES_PER_CONTRAST..(k + 1) * FEATURES_PER_CONTRAST
    }

    /// `"<contrast>.<feature>"` for every slot.
    pub fn names(&self) -> Vec<String> {
        let per = contrast_feature_names();
        self.contrasts.iter().flat_map(|c| per.iter().map(move |n| format!("{c}.{n}"))).collect()
    }

    /// One `index,name` line per slot.
    pub fn manifest(&self) -> String {
        self.names().iter().enumerate().map(|(i, n)| format!("{i},{n}\n")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// All 56 features of one window, written into `out`.
pub fn window_features(w: &Window, out: &mut [f64]) {
    assert_eq!(out.len(), FEATURES_PER_CONTRAST);
    let q = quantize(w);
    out[..STAT_COUNT].copy_from_slice(&stats::statistical_features_with(w, &q));
    out[STAT_COUNT..STAT_COUNT + GLCM_COUNT].copy_from_slice(&glcm_features(&q));
    out[STAT_COUNT + GLCM_COUNT..].copy_from_slice(&gabor_response_features(q.to_window().values()));
}

/// Features of the window at `(row, col)` on each plane, contrast-major.
pub fn features_from_planes(planes: &[&Plane], row: usize, col: usize) -> Result<Vec<f64>, FeatureError> {
    let mut out = vec![0.0; FEATURES_PER_CONTRAST * planes.len()];
    for (k, p) in planes.iter().enumerate() {
        let w = extract_window(p, row, col)?;
        window_features(&w, &mut out[k * FEATURES_PER_CONTRAST..(k + 1) * FEATURES_PER_CONTRAST]);
    }
    Ok(out)
}

pub fn feature_vector(stack: &ContrastStack, row: usize, col: usize) -> Result<FeatureVector, FeatureError> {
    let planes: Vec<&Plane> = stack.channels().iter().collect();
    features_from_planes(&planes, row, col).map(FeatureVector::new)
}

#[cfg(test)]
mod tests;
