//! Kernel functions, Gram assembly and feature standardization.

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("feature length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("gaussian gamma must be positive and finite, got {0}")]
    InvalidGamma(f64),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

/// A concrete kernel `k(x, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    Gaussian { gamma: f64 },
}

impl KernelSpec {
    pub fn gaussian(gamma: f64) -> Result<Self, KernelError> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(KernelSpec::Gaussian { gamma })
        } else {
            Err(KernelError::InvalidGamma(gamma))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Gaussian { .. } => "gaussian",
        }
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64, KernelError> {
        if x.len() != z.len() {
            return Err(KernelError::LengthMismatch { left: x.len(), right: z.len() });
        }
        Ok(self.eval_unchecked(x, z))
    }

    /// Caller guarantees equal lengths.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, z),
            KernelSpec::Gaussian { gamma } => (-gamma * squared_distance(x, z)).exp(),
        }
    }
}

/// How the kernel is chosen before training; `Median` is resolved on the
/// standardized training features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    Linear,
    Gaussian(f64),
    GaussianMedian,
}

impl KernelChoice {
    pub fn resolve(&self, samples: &[&[f64]]) -> Result<KernelSpec, KernelError> {
        match *self {
            KernelChoice::Linear => Ok(KernelSpec::Linear),
            KernelChoice::Gaussian(gamma) => KernelSpec::gaussian(gamma),
            KernelChoice::GaussianMedian => KernelSpec::gaussian(median_gamma(samples)?),
        }
    }
}

impl Default for KernelChoice {
    fn default() -> Self {
        KernelChoice::GaussianMedian
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

#[inline]
pub(crate) fn squared_distance(x: &[f64], z: &[f64]) -> f64 {
    x.iter()
        .zip(z)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum()
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64, KernelError> {
    spec.eval(x, z)
}

/// Dense symmetric kernel matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl GramMatrix {
    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Attempts a Cholesky factorization of `K + jitter * I`; success means
    /// no eigenvalue is below `-jitter` (up to rounding).
    pub fn is_psd(&self, jitter: f64) -> bool {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j) + jitter;
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= 0.0 || !d.is_finite() {
                return false;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        true
    }
}

/// Gram matrix over `samples`. Rows are computed in parallel; each entry is
/// evaluated once on the upper triangle and mirrored, so the result does not
/// depend on the thread count.
pub fn gram<S: AsRef<[f64]> + Sync>(spec: &KernelSpec, samples: &[S]) -> Result<GramMatrix, KernelError> {
    let n = samples.len();
    if let Some(first) = samples.first() {
        let d = first.as_ref().len();
        for s in samples {
            if s.as_ref().len() != d {
                return Err(KernelError::LengthMismatch { left: d, right: s.as_ref().len() });
            }
        }
    }
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = samples[i].as_ref();
            (i..n).map(|j| spec.eval_unchecked(xi, samples[j].as_ref())).collect()
        })
        .collect();
    let mut entries = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (offset, &v) in row.iter().enumerate() {
            let j = i + offset;
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    Ok(GramMatrix { n, entries })
}

/// Bandwidth `1 / median(||x_i - x_j||^2)` over all pairs `i < j`; falls back
/// to `1 / dimension` when the median is zero.
pub fn median_gamma<S: AsRef<[f64]>>(samples: &[S]) -> Result<f64, KernelError> {
    if samples.len() < 2 {
        return Err(KernelError::TooFewSamples { needed: 2, got: samples.len() });
    }
    let d = samples[0].as_ref().len();
    let mut dists = Vec::with_capacity(samples.len() * (samples.len() - 1) / 2);
    for i in 0..samples.len() {
        let xi = samples[i].as_ref();
        if xi.len() != d {
            return Err(KernelError::LengthMismatch { left: d, right: xi.len() });
        }
        for xj in &samples[i + 1..] {
            dists.push(squared_distance(xi, xj.as_ref()));
        }
    }
    dists.sort_by(f64::total_cmp);
    let m = dists.len();
    let median = if m % 2 == 1 { dists[m / 2] } else { 0.5 * (dists[m / 2 - 1] + dists[m / 2]) };
    if median > 0.0 {
        Ok(1.0 / median)
    } else {
        Ok(1.0 / d.max(1) as f64)
    }
}

/// Per-feature z-scoring fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Features whose training spread is below this are left unscaled.
pub const STD_FLOOR: f64 = 1e-12;

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self { means: vec![0.0; dim], stds: vec![1.0; dim] }
    }

    pub fn fit<S: AsRef<[f64]>>(samples: &[S]) -> Result<Self, KernelError> {
        let Some(first) = samples.first() else {
            return Err(KernelError::TooFewSamples { needed: 1, got: 0 });
        };
        let d = first.as_ref().len();
        let n = samples.len() as f64;
        let mut means = vec![0.0; d];
        for s in samples {
            let s = s.as_ref();
            if s.len() != d {
                return Err(KernelError::LengthMismatch { left: d, right: s.len() });
            }
            for (m, v) in means.iter_mut().zip(s) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut stds = vec![0.0; d];
        for s in samples {
            for ((acc, v), m) in stds.iter_mut().zip(s.as_ref()).zip(&means) {
                *acc += (v - m) * (v - m);
            }
        }
        for s in stds.iter_mut() {
            let sd = (*s / n).sqrt();
            *s = if sd < STD_FLOOR { 1.0 } else { sd };
        }
        Ok(Self { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.means).zip(&self.stds).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(x).zip(&self.means).zip(&self.stds) {
            *o = (v - m) / s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
    }

    #[test]
    fn gaussian_self_similarity_is_one() {
        let k = KernelSpec::gaussian(3.7).unwrap();
        let x = [0.3, -1.0, 8.0];
        assert_eq!(k.eval(&x, &x).unwrap(), 1.0);
    }

    #[test]
    fn linear_orthogonal_is_zero() {
        assert_eq!(KernelSpec::Linear.eval(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_closed_form() {
        // ||x - z||^2 = 2, gamma = 0.5 -> exp(-1)
        let k = KernelSpec::gaussian(0.5).unwrap();
        let v = k.eval(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_relative_eq!(v, (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(v, 0.367879, epsilon = 1e-6);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            KernelSpec::Linear.eval(&[1.0], &[1.0, 2.0]),
            Err(KernelError::LengthMismatch { left: 1, right: 2 })
        ));
        assert!(gram(&KernelSpec::Linear, &[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(KernelSpec::gaussian(0.0).is_err());
        assert!(KernelSpec::gaussian(f64::NAN).is_err());
    }

    #[test]
    fn gram_of_identical_samples_is_all_ones() {
        let s = vec![vec![1.0, 2.0]; 4];
        let g = gram(&KernelSpec::gaussian(1.0).unwrap(), &s).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 1.0));
        let single = gram(&KernelSpec::Linear, &[vec![3.0, 4.0]]).unwrap();
        assert_eq!(single.as_slice(), &[25.0]);
    }

    #[test]
    fn gram_matches_scalar_oracle() {
        let pts = random_points(11, 6, 4);
        for spec in [KernelSpec::Linear, KernelSpec::gaussian(0.7).unwrap()] {
            let g = gram(&spec, &pts).unwrap();
            for i in 0..6 {
                for j in 0..6 {
                    // independent scalar re-evaluation
                    let d2: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).powi(2)).sum();
                    let ip: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| a * b).sum();
                    let expect = match spec {
                        KernelSpec::Linear => ip,
                        KernelSpec::Gaussian { gamma } => (-gamma * d2).exp(),
                    };
                    assert!((g.get(i, j) - expect).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn gaussian_gram_is_psd() {
        let pts = random_points(5, 20, 3);
        let g = gram(&KernelSpec::gaussian(0.5).unwrap(), &pts).unwrap();
        assert!(g.is_psd(1e-10));
        assert!((0..20).all(|i| g.get(i, i) == 1.0));
    }

    #[test]
    fn median_gamma_cases() {
        assert_eq!(median_gamma(&[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap(), 0.25);
        assert_eq!(median_gamma(&[vec![1.0; 5], vec![1.0; 5], vec![1.0; 5]]).unwrap(), 0.2);
        assert!(median_gamma(&[vec![1.0]]).is_err());
    }

    #[test]
    fn median_gamma_matches_pair_enumeration() {
        let pts = random_points(3, 5, 3);
        let mut pairs = Vec::new();
        for i in 0..5 {
            for j in (i + 1)..5 {
                pairs.push(pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
            }
        }
        assert_eq!(pairs.len(), 10);
        pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = 0.5 * (pairs[4] + pairs[5]);
        assert_relative_eq!(median_gamma(&pts).unwrap(), 1.0 / med, max_relative = 1e-14);
    }

    #[test]
    fn standardizer_leaves_constant_features_unscaled() {
        let s = Standardizer::fit(&[vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
        assert_eq!(s.means, vec![2.0, 5.0]);
        assert_eq!(s.stds, vec![1.0, 1.0]);
        assert_eq!(s.apply(&[3.0, 6.0]), vec![1.0, 1.0]);
    }

    proptest! {
        #[test]
        fn kernel_is_exactly_symmetric(x in proptest::collection::vec(-10.0f64..10.0, 5),
                                       z in proptest::collection::vec(-10.0f64..10.0, 5),
                                       gamma in 1e-3f64..10.0) {
            for spec in [KernelSpec::Linear, KernelSpec::Gaussian { gamma }] {
                prop_assert_eq!(spec.eval(&x, &z).unwrap(), spec.eval(&z, &x).unwrap());
            }
            let v = KernelSpec::Gaussian { gamma }.eval(&x, &z).unwrap();
            prop_assert!(v > 0.0 || gamma * squared_distance(&x, &z) > 700.0);
            prop_assert!(v <= 1.0);
        }
    }
}
