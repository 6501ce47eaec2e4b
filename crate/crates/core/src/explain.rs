//! Shapley attributions of the decision value `h(x)`.
//!
//! Two estimators share one value function: a coalition `S` of features is
//! kept at the sample's values and the rest are taken from a background
//! sample, and `v(S)` is the mean of `h` over the background set. Group mode
//! enumerates every coalition of feature blocks exactly; feature mode samples
//! random orderings of single features.

use std::fmt::Write as _;
use std::ops::Range;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use thiserror::Error;

use crate::features::FeatureLayout;
use crate::rng::SeedTree;
use crate::wso::TrainedModel;

/// Exact enumeration is capped at this many groups.
pub const MAX_EXACT_GROUPS: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExplainError {
    #[error("background set is empty")]
    EmptyBackground,
    #[error("expected {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("{len} values do not fit the layout of {groups} groups")]
    Layout { len: usize, groups: usize },
    #[error("exact enumeration supports at most {MAX_EXACT_GROUPS} groups, got {0}")]
    TooManyGroups(usize),
    #[error("draws must be at least 1")]
    NoDraws,
    #[error("abs-then-sum aggregation needs per-feature values")]
    NeedsFeatureValues,
}

/// Anything that produces a real-valued decision for a feature vector.
pub trait DecisionFunction: Sync {
    fn dim(&self) -> usize;
    fn decision(&self, x: &[f64]) -> f64;
}

impl DecisionFunction for TrainedModel {
    fn dim(&self) -> usize {
        TrainedModel::dim(self)
    }
    fn decision(&self, x: &[f64]) -> f64 {
        self.decision_value_standardized(&self.standardizer().apply(x))
    }
}

/// Wraps a closure as a [`DecisionFunction`].
pub struct FnDecision<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> DecisionFunction for FnDecision<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn decision(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

fn check_inputs<M: DecisionFunction + ?Sized>(model: &M, x: &[f64], background: &[Vec<f64>]) -> Result<(), ExplainError> {
    let d = model.dim();
    if x.len() != d {
        return Err(ExplainError::Dimension { expected: d, got: x.len() });
    }
    if background.is_empty() {
        return Err(ExplainError::EmptyBackground);
    }
    if let Some(b) = background.iter().find(|b| b.len() != d) {
        return Err(ExplainError::Dimension { expected: d, got: b.len() });
    }
    Ok(())
}

fn check_groups(groups: &[Range<usize>], d: usize) -> Result<(), ExplainError> {
    let mut next = 0;
    for g in groups {
        if g.start != next || g.end < g.start {
            return Err(ExplainError::Layout { len: d, groups: groups.len() });
        }
        next = g.end;
    }
    if next != d {
        return Err(ExplainError::Layout { len: d, groups: groups.len() });
    }
    Ok(())
}

/// Mean of `h` over background completions of coalition `mask`.
fn coalition_value<M: DecisionFunction + ?Sized>(
    model: &M,
    x: &[f64],
    background: &[Vec<f64>],
    groups: &[Range<usize>],
    mask: usize,
    buf: &mut Vec<f64>,
) -> f64 {
    let mut total = 0.0;
    for b in background {
        buf.clear();
        buf.extend_from_slice(b);
        for (k, g) in groups.iter().enumerate() {
            if mask >> k & 1 == 1 {
                buf[g.clone()].copy_from_slice(&x[g.clone()]);
            }
        }
        total += model.decision(buf);
    }
    total / background.len() as f64
}

/// Mean decision value over the background set.
pub fn baseline<M: DecisionFunction + ?Sized>(model: &M, background: &[Vec<f64>]) -> f64 {
    background.iter().map(|b| model.decision(b)).sum::<f64>() / background.len() as f64
}

/// Exact Shapley values of contiguous feature groups.
pub fn shap_exact<M: DecisionFunction + ?Sized>(
    model: &M,
    x: &[f64],
    background: &[Vec<f64>],
    groups: &[Range<usize>],
) -> Result<Vec<f64>, ExplainError> {
    check_inputs(model, x, background)?;
    check_groups(groups, model.dim())?;
    let k = groups.len();
    if k > MAX_EXACT_GROUPS {
        return Err(ExplainError::TooManyGroups(k));
    }
    let mut buf = Vec::with_capacity(x.len());
    let values: Vec<f64> = (0..1usize << k).map(|mask| coalition_value(model, x, background, groups, mask, &mut buf)).collect();

    // weight(s) = s! (k - s - 1)! / k!
    let mut fact = vec![1.0f64; k + 1];
    for i in 1..=k {
        fact[i] = fact[i - 1] * i as f64;
    }
    let weight: Vec<f64> = (0..k).map(|s| fact[s] * fact[k - s - 1] / fact[k]).collect();

    let mut phi = vec![0.0; k];
    for (j, p) in phi.iter_mut().enumerate() {
        let bit = 1usize << j;
        for mask in 0..1usize << k {
            if mask & bit == 0 {
                *p += weight[mask.count_ones() as usize] * (values[mask | bit] - values[mask]);
            }
        }
    }
    Ok(phi)
}

/// Exact Shapley values of the contrast blocks of `layout`.
pub fn shap_exact_groups<M: DecisionFunction + ?Sized>(
    model: &M,
    x: &[f64],
    background: &[Vec<f64>],
    layout: &FeatureLayout,
) -> Result<Vec<f64>, ExplainError> {
    if layout.len() != model.dim() {
        return Err(ExplainError::Layout { len: model.dim(), groups: layout.contrast_count() });
    }
    let groups: Vec<Range<usize>> = (0..layout.contrast_count()).map(|k| layout.block(k)).collect();
    shap_exact(model, x, background, &groups)
}

/// Per-feature estimates with their Monte-Carlo standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledShap {
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub draws: usize,
}

/// Permutation-sampling Shapley estimator.
///
/// Each draw walks a random feature ordering from a background sample to
/// `x`, crediting each feature with the change in `h` when it is switched.
/// Background samples are visited in shuffled round-robin order so every
/// one is used equally often. Standard errors are the sample standard
/// deviation of the per-draw contributions over `sqrt(draws)`.
pub fn shap_sampled_features<M: DecisionFunction + ?Sized>(
    model: &M,
    x: &[f64],
    background: &[Vec<f64>],
    draws: usize,
    seed: u64,
) -> Result<SampledShap, ExplainError> {
    check_inputs(model, x, background)?;
    if draws == 0 {
        return Err(ExplainError::NoDraws);
    }
    let d = x.len();
    let tree = SeedTree::new(seed);
    let mut perm_rng = tree.stream("explain/permutations");
    let mut bg_rng = tree.stream("explain/background");

    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let mut order: Vec<usize> = (0..d).collect();
    let mut bg_order: Vec<usize> = Vec::new();
    let mut z = vec![0.0; d];
    for t in 0..draws {
        if t % background.len() == 0 {
            bg_order = (0..background.len()).collect();
            bg_order.shuffle(&mut bg_rng);
        }
        let b = &background[bg_order[t % background.len()]];
        order.shuffle(&mut perm_rng);
        z.copy_from_slice(b);
        let mut prev = model.decision(&z);
        for &j in &order {
            z[j] = x[j];
            let next = model.decision(&z);
            let c = next - prev;
            sum[j] += c;
            sum_sq[j] += c * c;
            prev = next;
        }
    }
    let n = draws as f64;
    let values: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_errors = sum
        .iter()
        .zip(&sum_sq)
        .map(|(s, sq)| {
            if draws < 2 {
                return f64::INFINITY;
            }
            let var = ((sq - s * s / n) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        })
        .collect();
    Ok(SampledShap { values, std_errors, draws })
}

/// Signed sum of the values in each group.
pub fn aggregate(values: &[f64], groups: &[Range<usize>]) -> Result<Vec<f64>, ExplainError> {
    check_groups(groups, values.len())?;
    Ok(groups.iter().map(|g| values[g.clone()].iter().sum()).collect())
}

/// Signed per-contrast sums of per-feature values.
pub fn aggregate_to_contrast(values: &[f64], layout: &FeatureLayout) -> Result<Vec<f64>, ExplainError> {
    let k = layout.contrast_count();
    if k == 0 || values.len() != layout.len() {
        return Err(ExplainError::Layout { len: values.len(), groups: k });
    }
    let groups: Vec<Range<usize>> = (0..k).map(|i| layout.block(i)).collect();
    aggregate(values, &groups)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapMode {
    ExactGroup,
    SampledFeature { draws: usize, seed: u64 },
}

/// How per-sample values become the per-contrast summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Mean over samples of the absolute signed group value.
    #[default]
    SumThenAbs,
    /// Mean over samples of the sum of absolute feature values in the group.
    AbsThenSum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleShap {
    pub id: String,
    pub decision: f64,
    pub groups: Vec<f64>,
    /// Present in sampled mode only.
    pub features: Option<SampledShap>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapReport {
    pub contrasts: Vec<String>,
    pub mode: ShapMode,
    pub baseline: f64,
    pub background_size: usize,
    pub samples: Vec<SampleShap>,
}

impl ShapReport {
    /// Mean absolute contribution per contrast.
    pub fn contrast_summary(&self, agg: Aggregation, layout: &FeatureLayout) -> Result<Vec<f64>, ExplainError> {
        let k = self.contrasts.len();
        let mut out = vec![0.0; k];
        if self.samples.is_empty() {
            return Ok(out);
        }
        for s in &self.samples {
            match agg {
                Aggregation::SumThenAbs => {
                    for (o, v) in out.iter_mut().zip(&s.groups) {
                        *o += v.abs();
                    }
                }
                Aggregation::AbsThenSum => {
                    let f = s.features.as_ref().ok_or(ExplainError::NeedsFeatureValues)?;
                    let abs: Vec<f64> = f.values.iter().map(|v| v.abs()).collect();
                    for (o, v) in out.iter_mut().zip(aggregate_to_contrast(&abs, layout)?) {
                        *o += v;
                    }
                }
            }
        }
        let n = self.samples.len() as f64;
        Ok(out.into_iter().map(|v| v / n).collect())
    }

    /// One row per sample with its signed group values.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("# schema: wso-shap/1\n");
        let mode = match self.mode {
            ShapMode::ExactGroup => "exact-group".to_string(),
            ShapMode::SampledFeature { draws, seed } => format!("sampled-feature,draws={draws},seed={seed}"),
        };
        let _ = writeln!(s, "# mode,{mode}");
        let _ = writeln!(s, "# baseline,{}", self.baseline);
        let _ = writeln!(s, "# background,{}", self.background_size);
        let _ = writeln!(s, "sample,h,{}", self.contrasts.join(","));
        for r in &self.samples {
            let _ = write!(s, "{},{}", r.id, r.decision);
            for v in &r.groups {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn summary_csv(&self, agg: Aggregation, layout: &FeatureLayout) -> Result<String, ExplainError> {
        let values = self.contrast_summary(agg, layout)?;
        let mut s = String::from("# schema: wso-shap-summary/1\n");
        let tag = match agg {
            Aggregation::SumThenAbs => "sum-then-abs",
            Aggregation::AbsThenSum => "abs-then-sum",
        };
        let _ = writeln!(s, "# aggregation,{tag}");
        s.push_str("contrast,mean_abs\n");
        for (c, v) in self.contrasts.iter().zip(values) {
            let _ = writeln!(s, "{c},{v}");
        }
        Ok(s)
    }
}

/// Attributions for a list of `(id, x)` samples, computed in parallel.
pub fn explain<M: DecisionFunction + ?Sized>(
    model: &M,
    samples: &[(String, Vec<f64>)],
    background: &[Vec<f64>],
    layout: &FeatureLayout,
    mode: ShapMode,
) -> Result<ShapReport, ExplainError> {
    if background.is_empty() {
        return Err(ExplainError::EmptyBackground);
    }
    if layout.len() != model.dim() {
        return Err(ExplainError::Layout { len: model.dim(), groups: layout.contrast_count() });
    }
    let tree = match mode {
        ShapMode::SampledFeature { seed, .. } => SeedTree::new(seed),
        ShapMode::ExactGroup => SeedTree::new(0),
    };
    let rows: Result<Vec<SampleShap>, ExplainError> = samples
        .par_iter()
        .enumerate()
        .map(|(i, (id, x))| {
            check_inputs(model, x, background)?;
            let decision = model.decision(x);
            let (groups, features) = match mode {
                ShapMode::ExactGroup => (shap_exact_groups(model, x, background, layout)?, None),
                ShapMode::SampledFeature { draws, .. } => {
                    let f = shap_sampled_features(model, x, background, draws, tree.seed(&format!("explain/sample/{i}")))?;
                    (aggregate_to_contrast(&f.values, layout)?, Some(f))
                }
            };
            Ok(SampleShap { id: id.clone(), decision, groups, features })
        })
        .collect();
    Ok(ShapReport {
        contrasts: layout.contrasts().to_vec(),
        mode,
        baseline: baseline(model, background),
        background_size: background.len(),
        samples: rows?,
    })
}
