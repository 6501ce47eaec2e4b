//! Weakly-supervised ordinal SVM: dual assembly, training and the
//! three-class decision rule.
//!
//! Dual variables are ordered `(alpha1, alpha2, beta0, beta12)`: one
//! multiplier per class-1 and class-2 biopsy, one per normal sample, and one
//! per tumoral sample, where the tumoral pool holds the labeled biopsies
//! followed by the unlabeled samples. The label vector is
//! `Y = diag(-1, +1, -1, +1)` by block.

mod bias;

pub use bias::{recover_biases, BiasRecovery};

use crate::kernels::{gram, KernelChoice, KernelError, KernelSpec, Standardizer};
use crate::qp::{self, DualSolution, KktReport, QpError, QpInstance, SolverOptions};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Largest KKT residual a trained model may carry.
pub const CERTIFIED_RESIDUAL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassLabel {
    Normal = 0,
    NonAltered = 1,
    Altered = 2,
}

impl ClassLabel {
    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn from_value(v: u8) -> Option<Self> {
        match v {
            0 => Some(ClassLabel::Normal),
            1 => Some(ClassLabel::NonAltered),
            2 => Some(ClassLabel::Altered),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WsoError {
    #[error("training set needs at least one biopsy of each class (class 1: {n1}, class 2: {n2})")]
    EmptyClass { n1: usize, n2: usize },
    #[error("feature length mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("dual solver did not converge after {iterations} iterations (max KKT residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error(transparent)]
    Qp(QpError),
}

impl From<QpError> for WsoError {
    fn from(e: QpError) -> Self {
        match e {
            QpError::NotConverged { iterations, residual, .. } => WsoError::NotConverged { iterations, residual },
            other => WsoError::Qp(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    class1: Vec<Vec<f64>>,
    class2: Vec<Vec<f64>>,
    unlabeled: Vec<Vec<f64>>,
    normal: Vec<Vec<f64>>,
}

impl TrainingSet {
    pub fn new(
        class1: Vec<Vec<f64>>,
        class2: Vec<Vec<f64>>,
        unlabeled: Vec<Vec<f64>>,
        normal: Vec<Vec<f64>>,
    ) -> Result<Self, WsoError> {
        if class1.is_empty() || class2.is_empty() {
            return Err(WsoError::EmptyClass { n1: class1.len(), n2: class2.len() });
        }
        let d = class1[0].len();
        for x in class1.iter().chain(&class2).chain(&unlabeled).chain(&normal) {
            if x.len() != d {
                return Err(WsoError::DimensionMismatch { expected: d, got: x.len() });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(WsoError::InvalidParameter("non-finite feature value".into()));
            }
        }
        Ok(Self { class1, class2, unlabeled, normal })
    }

    pub fn dim(&self) -> usize {
        self.class1[0].len()
    }

    /// `(n1, n2, m12, m0)`.
    pub fn counts(&self) -> (usize, usize, usize, usize) {
        (self.class1.len(), self.class2.len(), self.unlabeled.len(), self.normal.len())
    }

    pub fn class1(&self) -> &[Vec<f64>] {
        &self.class1
    }
    pub fn class2(&self) -> &[Vec<f64>] {
        &self.class2
    }
    pub fn unlabeled(&self) -> &[Vec<f64>] {
        &self.unlabeled
    }
    pub fn normal(&self) -> &[Vec<f64>] {
        &self.normal
    }

    /// Number of dual variables, `n1 + n2 + m0 + (n1 + n2 + m12)`.
    pub fn dual_len(&self) -> usize {
        let (n1, n2, m12, m0) = self.counts();
        2 * (n1 + n2) + m12 + m0
    }

    /// Distinct samples in the order class 1, class 2, unlabeled, normal.
    pub fn unique_samples(&self) -> Vec<&[f64]> {
        self.class1.iter().chain(&self.class2).chain(&self.unlabeled).chain(&self.normal).map(|v| v.as_slice()).collect()
    }

    /// Same set with every vector mapped through `f`.
    pub fn map(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> TrainingSet {
        let m = |v: &Vec<Vec<f64>>| v.iter().map(|x| f(x)).collect();
        TrainingSet { class1: m(&self.class1), class2: m(&self.class2), unlabeled: m(&self.unlabeled), normal: m(&self.normal) }
    }

    /// For each dual variable: index into `unique_samples`, label sign and
    /// whether it is a biopsy multiplier (`alpha`).
    pub(crate) fn layout(&self) -> Vec<DualSlot> {
        let (n1, n2, m12, m0) = self.counts();
        let (c2, no) = (n1, n1 + n2 + m12);
        let mut v = Vec::with_capacity(self.dual_len());
        v.extend((0..n1).map(|i| DualSlot { sample: i, y: -1.0, block: Block::Alpha1 }));
        v.extend((0..n2).map(|i| DualSlot { sample: c2 + i, y: 1.0, block: Block::Alpha2 }));
        v.extend((0..m0).map(|i| DualSlot { sample: no + i, y: -1.0, block: Block::Beta0 }));
        v.extend((0..n1 + n2 + m12).map(|i| DualSlot { sample: i, y: 1.0, block: Block::Beta12 }));
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Block {
    Alpha1,
    Alpha2,
    Beta0,
    Beta12,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DualSlot {
    pub sample: usize,
    pub y: f64,
    pub block: Block,
}

impl DualSlot {
    pub fn is_alpha(&self) -> bool {
        matches!(self.block, Block::Alpha1 | Block::Alpha2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub kernel: KernelChoice,
    pub c1: f64,
    pub c2: f64,
    /// Multipliers on `C1` for class-1 and class-2 biopsies.
    pub class_weights: (f64, f64),
    /// z-score features with training statistics before the kernel.
    pub standardize: bool,
    pub solver: SolverOptions,
    /// Cap on the stored explanation background.
    pub background_size: usize,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            kernel: KernelChoice::GaussianMedian,
            c1: 1.0,
            c2: 1.0,
            class_weights: (1.0, 1.0),
            standardize: true,
            solver: SolverOptions::default(),
            background_size: 64,
            seed: 0,
        }
    }
}

impl TrainParams {
    pub fn with_c(mut self, c1: f64, c2: f64) -> Self {
        self.c1 = c1;
        self.c2 = c2;
        self
    }
}

fn check_c(c1: f64, c2: f64) -> Result<(), WsoError> {
    if !(c1 > 0.0 && c1.is_finite() && c2 > 0.0 && c2.is_finite()) {
        return Err(WsoError::InvalidParameter(format!("C1 and C2 must be positive, got {c1}, {c2}")));
    }
    Ok(())
}

/// Dual QP for `ts` with features used as given.
pub fn assemble_dual(ts: &TrainingSet, kernel: &KernelSpec, c1: f64, c2: f64) -> Result<QpInstance, WsoError> {
    assemble_weighted(ts, kernel, c1, c2, (1.0, 1.0))
}

fn assemble_weighted(
    ts: &TrainingSet,
    kernel: &KernelSpec,
    c1: f64,
    c2: f64,
    weights: (f64, f64),
) -> Result<QpInstance, WsoError> {
    check_c(c1, c2)?;
    if !(weights.0 > 0.0 && weights.1 > 0.0) {
        return Err(WsoError::InvalidParameter("class weights must be positive".into()));
    }
    let k = gram(kernel, &ts.unique_samples())?;
    let slots = ts.layout();
    let n = slots.len();
    let mut q = vec![0.0; n * n];
    for (i, si) in slots.iter().enumerate() {
        let row = k.row(si.sample);
        for (j, sj) in slots.iter().enumerate() {
            q[i * n + j] = si.y * sj.y * row[sj.sample];
        }
    }
    let eq: Vec<f64> = slots.iter().map(|s| s.y).collect();
    let ineq: Vec<f64> = slots.iter().map(|s| if s.is_alpha() { s.y } else { 0.0 }).collect();
    let upper: Vec<f64> = slots
        .iter()
        .map(|s| match s.block {
            Block::Alpha1 => c1 * weights.0,
            Block::Alpha2 => c1 * weights.1,
            _ => c2,
        })
        .collect();
    Ok(QpInstance::new(q, vec![1.0; n], eq, ineq, vec![0.0; n], upper)?)
}

/// A trained model: kernel expansion over standardized support samples and
/// the two ordered thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    kernel: KernelSpec,
    c1: f64,
    c2: f64,
    standardizer: Standardizer,
    support: Vec<Vec<f64>>,
    coef: Vec<f64>,
    b0: f64,
    b1: f64,
    background: Vec<Vec<f64>>,
    seed: u64,
    kkt: KktReport,
    objective: f64,
}

/// Everything needed to rebuild a model, e.g. from a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParts {
    pub kernel: KernelSpec,
    pub c1: f64,
    pub c2: f64,
    pub standardizer: Standardizer,
    /// Standardized support samples.
    pub support: Vec<Vec<f64>>,
    /// Signed coefficients `y_i gamma_i`, merged per sample.
    pub coef: Vec<f64>,
    pub b0: f64,
    pub b1: f64,
    /// Raw (unstandardized) background samples for attribution.
    pub background: Vec<Vec<f64>>,
    pub seed: u64,
    pub kkt: KktReport,
    pub objective: f64,
}

impl TrainedModel {
    pub fn from_parts(p: ModelParts) -> Result<Self, WsoError> {
        let d = p.standardizer.dim();
        if p.support.len() != p.coef.len() {
            return Err(WsoError::InvalidParameter("support and coefficient counts differ".into()));
        }
        for x in p.support.iter().chain(&p.background) {
            if x.len() != d {
                return Err(WsoError::DimensionMismatch { expected: d, got: x.len() });
            }
        }
        if !(p.b0.is_finite() && p.b1.is_finite()) || p.b0 > p.b1 + 1e-8 {
            return Err(WsoError::InvalidParameter(format!("thresholds must satisfy b0 <= b1, got {} and {}", p.b0, p.b1)));
        }
        Ok(Self {
            kernel: p.kernel,
            c1: p.c1,
            c2: p.c2,
            standardizer: p.standardizer,
            support: p.support,
            coef: p.coef,
            b0: p.b0,
            b1: p.b1,
            background: p.background,
            seed: p.seed,
            kkt: p.kkt,
            objective: p.objective,
        })
    }

    pub fn to_parts(&self) -> ModelParts {
        ModelParts {
            kernel: self.kernel,
            c1: self.c1,
            c2: self.c2,
            standardizer: self.standardizer.clone(),
            support: self.support.clone(),
            coef: self.coef.clone(),
            b0: self.b0,
            b1: self.b1,
            background: self.background.clone(),
            seed: self.seed,
            kkt: self.kkt,
            objective: self.objective,
        }
    }

    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }
    pub fn c1(&self) -> f64 {
        self.c1
    }
    pub fn c2(&self) -> f64 {
        self.c2
    }
    pub fn b0(&self) -> f64 {
        self.b0
    }
    pub fn b1(&self) -> f64 {
        self.b1
    }
    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }
    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }
    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }
    pub fn support_count(&self) -> usize {
        self.support.len()
    }
    pub fn background(&self) -> &[Vec<f64>] {
        &self.background
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn kkt(&self) -> &KktReport {
        &self.kkt
    }
    /// Dual objective at the solution.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// `h(z)` for an already standardized input.
    pub fn decision_value_standardized(&self, z: &[f64]) -> f64 {
        self.support.iter().zip(&self.coef).map(|(s, c)| c * self.kernel.eval_unchecked(z, s)).sum()
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64, WsoError> {
        if x.len() != self.dim() {
            return Err(WsoError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.decision_value_standardized(&self.standardizer.apply(x)))
    }

    /// The ordinal rule on a decision value; `sign(0) = +1`.
    pub fn classify_value(&self, h: f64) -> ClassLabel {
        classify_with(h, self.b0, self.b1)
    }

    pub fn classify(&self, x: &[f64]) -> Result<ClassLabel, WsoError> {
        self.decision_value(x).map(|h| self.classify_value(h))
    }
}

/// Class 2 if `h - b1 >= 0`, class 1 if `h - b1 < 0` and `h - b0 >= 0`,
/// class 0 otherwise.
pub fn classify_with(h: f64, b0: f64, b1: f64) -> ClassLabel {
    let f1 = h - b1 >= 0.0;
    let f0 = h - b0 >= 0.0;
    if f1 {
        ClassLabel::Altered
    } else if f0 {
        ClassLabel::NonAltered
    } else {
        ClassLabel::Normal
    }
}

/// Trains on `ts`; returns the model together with the raw dual solution.
pub fn train_with_solution(ts: &TrainingSet, params: &TrainParams) -> Result<(TrainedModel, DualSolution), WsoError> {
    check_c(params.c1, params.c2)?;
    let standardizer =
        if params.standardize { Standardizer::fit(&ts.unique_samples())? } else { Standardizer::identity(ts.dim()) };
    let zts = ts.map(|x| standardizer.apply(x));
    let kernel = params.kernel.resolve(&zts.unique_samples())?;
    let qp = assemble_weighted(&zts, &kernel, params.c1, params.c2, params.class_weights)?;
    // the solver aims at `params.solver.tol`; anything within the
    // certification bound is still usable
    let sol = match qp::solve(&qp, &params.solver) {
        Ok(sol) => sol,
        Err(QpError::NotConverged { best, .. }) if best.kkt.max_residual() <= CERTIFIED_RESIDUAL => *best,
        Err(e) => return Err(e.into()),
    };
    if sol.kkt.max_residual() > CERTIFIED_RESIDUAL {
        return Err(WsoError::NotConverged { iterations: sol.kkt.iterations, residual: sol.kkt.max_residual() });
    }

    let slots = zts.layout();
    let samples = zts.unique_samples();
    let mut merged = vec![0.0; samples.len()];
    for (s, g) in slots.iter().zip(&sol.gamma) {
        merged[s.sample] += s.y * g;
    }
    let biases = recover_biases(&qp, &sol, &zts);

    let (support, coef): (Vec<Vec<f64>>, Vec<f64>) =
        samples.iter().zip(&merged).filter(|(_, &c)| c != 0.0).map(|(x, &c)| (x.to_vec(), c)).unzip();

    let pool: Vec<&Vec<f64>> = {
        let aux: Vec<&Vec<f64>> = ts.normal.iter().chain(&ts.unlabeled).collect();
        if aux.is_empty() {
            ts.class1.iter().chain(&ts.class2).collect()
        } else {
            aux
        }
    };
    let background: Vec<Vec<f64>> = if pool.len() <= params.background_size {
        pool.iter().map(|v| v.to_vec()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut idx = sample(&mut rng, pool.len(), params.background_size).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| pool[i].clone()).collect()
    };

    let model = TrainedModel {
        kernel,
        c1: params.c1,
        c2: params.c2,
        standardizer,
        support,
        coef,
        b0: biases.b0,
        b1: biases.b1,
        background,
        seed: params.seed,
        kkt: sol.kkt,
        objective: sol.objective,
    };
    Ok((model, sol))
}

pub fn train(ts: &TrainingSet, params: &TrainParams) -> Result<TrainedModel, WsoError> {
    train_with_solution(ts, params).map(|(m, _)| m)
}
