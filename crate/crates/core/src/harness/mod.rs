//! Repeated stratified cross-validation, two-stage `(C1, C2)` search,
//! biopsy metrics and the rank-sum test.

mod folds;
mod metrics;
mod ranksum;

pub use folds::stratified_folds;
pub use metrics::{mean_std, metrics, Metrics};
pub use ranksum::{exact_counts, rank_sum_exact, rank_sum_normal, rank_sum_one_sided, RankSum, RankSumMethod, EXACT_LIMIT};

use crate::rng::SeedTree;
use crate::wso::{train, ClassLabel, TrainParams, TrainedModel, TrainingSet, WsoError};
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("cannot split {n} samples into {k} folds")]
    Folds { k: usize, n: usize },
    #[error("predicted and truth lengths differ: {predicted} vs {truth}")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error("{pool} pool has {available} samples, {needed} needed")]
    PoolTooSmall { pool: &'static str, needed: usize, available: usize },
    #[error("no C2 passed screening (best accuracy {best:.4} at C2 = {c2}, threshold {threshold})")]
    ScreeningFailed { best: f64, c2: f64, threshold: f64 },
    #[error(transparent)]
    Training(#[from] WsoError),
}

/// Labeled biopsies plus the pools auxiliary samples are drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub biopsies: Vec<Vec<f64>>,
    pub labels: Vec<ClassLabel>,
    pub unlabeled: Vec<Vec<f64>>,
    pub normal: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        biopsies: Vec<Vec<f64>>,
        labels: Vec<ClassLabel>,
        unlabeled: Vec<Vec<f64>>,
        normal: Vec<Vec<f64>>,
    ) -> Result<Self, HarnessError> {
        if biopsies.len() != labels.len() {
            return Err(HarnessError::LengthMismatch { predicted: biopsies.len(), truth: labels.len() });
        }
        if labels.iter().any(|&l| l == ClassLabel::Normal) {
            return Err(HarnessError::Invalid("biopsy labels must be 1 or 2".into()));
        }
        Ok(Self { biopsies, labels, unlabeled, normal })
    }

    /// Training set from the given biopsy indices plus explicit auxiliary
    /// samples.
    fn training_set(&self, idx: &[usize], unlabeled: &[usize], normal: &[usize]) -> Result<TrainingSet, WsoError> {
        let pick = |c: ClassLabel| idx.iter().filter(|&&i| self.labels[i] == c).map(|&i| self.biopsies[i].clone()).collect();
        TrainingSet::new(
            pick(ClassLabel::NonAltered),
            pick(ClassLabel::Altered),
            unlabeled.iter().map(|&i| self.unlabeled[i].clone()).collect(),
            normal.iter().map(|&i| self.normal[i].clone()).collect(),
        )
    }

    /// All biopsies and all pool samples.
    pub fn full_training_set(&self) -> Result<TrainingSet, WsoError> {
        let all: Vec<usize> = (0..self.biopsies.len()).collect();
        let un: Vec<usize> = (0..self.unlabeled.len()).collect();
        let no: Vec<usize> = (0..self.normal.len()).collect();
        self.training_set(&all, &un, &no)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub c1_grid: Vec<f64>,
    pub c2_grid: Vec<f64>,
    pub screen_threshold: f64,
    /// Drop the unlabeled tumoral samples (plain ordinal SVM).
    pub ablation: bool,
}

pub fn default_c1_grid() -> Vec<f64> {
    (0..13).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 12.0)).collect()
}

pub fn default_c2_grid() -> Vec<f64> {
    vec![0.01, 0.1, 1.0, 10.0, 100.0]
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            repeats: 30,
            seed: 0,
            c1_grid: default_c1_grid(),
            c2_grid: default_c2_grid(),
            screen_threshold: 0.80,
            ablation: false,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.folds < 2 {
            return Err(HarnessError::Invalid(format!("folds must be at least 2, got {}", self.folds)));
        }
        if self.repeats == 0 {
            return Err(HarnessError::Invalid("repeats must be positive".into()));
        }
        for (name, grid) in [("C1", &self.c1_grid), ("C2", &self.c2_grid)] {
            if grid.is_empty() {
                return Err(HarnessError::Invalid(format!("{name} grid is empty")));
            }
            if grid.iter().any(|&c| !(0.01 - 1e-12..=100.0 + 1e-9).contains(&c)) {
                return Err(HarnessError::Invalid(format!("{name} grid leaves [0.01, 100]")));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(HarnessError::Invalid(format!("{name} grid must be strictly ascending")));
            }
        }
        Ok(())
    }
}

/// Auxiliary draw for one training fold: unlabeled and normal pool indices
/// whose combined count equals `n_train`, split evenly.
fn draw_aux(ds: &Dataset, n_train: usize, rng: &mut ChaCha8Rng) -> Result<(Vec<usize>, Vec<usize>), HarnessError> {
    let n_un = n_train / 2;
    let n_no = n_train - n_un;
    if ds.unlabeled.len() < n_un {
        return Err(HarnessError::PoolTooSmall { pool: "unlabeled", needed: n_un, available: ds.unlabeled.len() });
    }
    if ds.normal.len() < n_no {
        return Err(HarnessError::PoolTooSmall { pool: "normal", needed: n_no, available: ds.normal.len() });
    }
    let un = sample(rng, ds.unlabeled.len(), n_un).into_vec();
    let no = sample(rng, ds.normal.len(), n_no).into_vec();
    Ok((un, no))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldRecord {
    pub repeat: usize,
    pub fold: usize,
    /// Held-out biopsy indices and their predictions.
    pub test: Vec<usize>,
    pub predicted: Vec<ClassLabel>,
    /// Training failure, if any; such folds are excluded from the metrics.
    pub error: Option<String>,
}

impl FoldRecord {
    pub fn metrics(&self, ds: &Dataset) -> Option<Metrics> {
        if self.error.is_some() || self.test.is_empty() {
            return None;
        }
        let truth: Vec<ClassLabel> = self.test.iter().map(|&i| ds.labels[i]).collect();
        metrics(&self.predicted, &truth).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub c1: f64,
    pub c2: f64,
    pub seed: u64,
    pub folds: usize,
    pub ablation: bool,
    pub records: Vec<FoldRecord>,
    /// Metrics of each repeat, pooled over its successful folds.
    pub repeat_metrics: Vec<Option<Metrics>>,
    pub accuracy: Option<Summary>,
    pub sensitivity: Option<Summary>,
    pub specificity: Option<Summary>,
    pub failures: usize,
}

impl CvReport {
    pub fn repeat_accuracies(&self) -> Vec<f64> {
        self.repeat_metrics.iter().flatten().map(|m| m.accuracy).collect()
    }

    /// `metric,mean (std)` lines.
    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        for (name, v) in [("accuracy", &self.accuracy), ("sensitivity", &self.sensitivity), ("specificity", &self.specificity)]
        {
            match v {
                Some(v) => writeln!(s, "{name},{:.3} ({:.3})", v.mean, v.std).unwrap(),
                None => writeln!(s, "{name},NA").unwrap(),
            }
        }
        s
    }

    /// One row per (repeat, fold).
    pub fn to_csv(&self, ds: &Dataset) -> String {
        let mut s = String::from("# schema: wso-cv/1\nrepeat,fold,n_test,accuracy,sensitivity,specificity,error\n");
        let opt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x}"));
        for r in &self.records {
            let m = r.metrics(ds);
            writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.repeat,
                r.fold,
                r.test.len(),
                opt(m.map(|m| m.accuracy)),
                opt(m.and_then(|m| m.sensitivity)),
                opt(m.and_then(|m| m.specificity)),
                r.error.as_deref().unwrap_or("").replace(',', ";")
            )
            .unwrap();
        }
        s
    }
}

fn summarize(values: Vec<f64>) -> Option<Summary> {
    mean_std(&values).map(|(mean, std)| Summary { mean, std })
}

fn fold_members(assign: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    (0..assign.len()).partition(|&i| assign[i] != f)
}

struct FoldOutcome {
    model: Result<TrainedModel, WsoError>,
    test: Vec<usize>,
    normal_used: Vec<usize>,
}

fn run_fold(
    ds: &Dataset,
    params: &TrainParams,
    assign: &[usize],
    f: usize,
    aux_rng: &mut ChaCha8Rng,
    ablation: bool,
) -> Result<FoldOutcome, HarnessError> {
    let (train_idx, test) = fold_members(assign, f);
    let (un, no) = draw_aux(ds, train_idx.len(), aux_rng)?;
    let un = if ablation { Vec::new() } else { un };
    let model = ds.training_set(&train_idx, &un, &no).and_then(|ts| train(&ts, params));
    Ok(FoldOutcome { model, test, normal_used: no })
}

fn predict(model: &TrainedModel, ds: &Dataset, idx: &[usize]) -> Vec<ClassLabel> {
    idx.iter().map(|&i| model.classify(&ds.biopsies[i]).expect("dimension checked at training")).collect()
}

/// Repeated stratified CV at fixed `(C1, C2)`. Folds for repeat `r` come
/// from stream `cv/folds/{r}`, auxiliary draws from `cv/aux/{r}/{f}`, so a
/// run with `ablation` sees the same folds and normal samples.
pub fn repeated_cv(ds: &Dataset, params: &TrainParams, config: &CvConfig) -> Result<CvReport, HarnessError> {
    config.validate()?;
    let seeds = SeedTree::new(config.seed);
    let assigns: Vec<Vec<usize>> = (0..config.repeats)
        .map(|r| stratified_folds(&ds.labels, config.folds, &mut seeds.stream(&format!("cv/folds/{r}"))))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..config.repeats).flat_map(|r| (0..config.folds).map(move |f| (r, f))).collect();
    let records: Vec<FoldRecord> = jobs
        .par_iter()
        .map(|&(r, f)| {
            let mut rng = seeds.stream(&format!("cv/aux/{r}/{f}"));
            let out = run_fold(ds, params, &assigns[r], f, &mut rng, config.ablation)?;
            Ok(match out.model {
                Ok(m) => FoldRecord { repeat: r, fold: f, predicted: predict(&m, ds, &out.test), test: out.test, error: None },
                Err(e) => FoldRecord { repeat: r, fold: f, test: out.test, predicted: vec![], error: Some(e.to_string()) },
            })
        })
        .collect::<Result<_, HarnessError>>()?;

    let failures = records.iter().filter(|r| r.error.is_some()).count();
    let repeat_metrics: Vec<Option<Metrics>> = (0..config.repeats)
        .map(|r| {
            let (mut pred, mut truth) = (Vec::new(), Vec::new());
            for rec in records.iter().filter(|x| x.repeat == r && x.error.is_none()) {
                pred.extend(&rec.predicted);
                truth.extend(rec.test.iter().map(|&i| ds.labels[i]));
            }
            metrics(&pred, &truth).ok()
        })
        .collect();
    let ok: Vec<&Metrics> = repeat_metrics.iter().flatten().collect();
    Ok(CvReport {
        c1: params.c1,
        c2: params.c2,
        seed: config.seed,
        folds: config.folds,
        ablation: config.ablation,
        accuracy: summarize(ok.iter().map(|m| m.accuracy).collect()),
        sensitivity: summarize(ok.iter().filter_map(|m| m.sensitivity).collect()),
        specificity: summarize(ok.iter().filter_map(|m| m.specificity).collect()),
        records,
        repeat_metrics,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneReport {
    pub c1: f64,
    pub c2: f64,
    /// Stage 1: `(C2, tumoral-vs-normal accuracy)` at the middle `C1`.
    pub screening: Vec<(f64, f64)>,
    /// Stage 2: `(C1, C2, biopsy accuracy)`.
    pub scan: Vec<(f64, f64, f64)>,
}

impl TuneReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("# schema: wso-tune/1\nstage,c1,c2,accuracy\n");
        for (c2, a) in &self.screening {
            writeln!(s, "screen,NA,{c2},{a}").unwrap();
        }
        for (c1, c2, a) in &self.scan {
            writeln!(s, "scan,{c1},{c2},{a}").unwrap();
        }
        writeln!(s, "chosen,{},{},NA", self.c1, self.c2).unwrap();
        s
    }
}

/// Two-stage search over one repeat of fixed folds.
///
/// Stage 1 screens each `C2` (with `C1` at the middle of its grid) on how
/// well `f0` separates held-out biopsies from an equal number of normal
/// samples unused in training; `C2` values above the threshold are kept.
/// Stage 2 scans `C1` at each kept `C2` on biopsy accuracy. Ties go to the
/// smaller `C1`, then the smaller `C2`.
pub fn tune(ds: &Dataset, base: &TrainParams, config: &CvConfig) -> Result<TuneReport, HarnessError> {
    config.validate()?;
    let seeds = SeedTree::new(config.seed);
    let assign = stratified_folds(&ds.labels, config.folds, &mut seeds.stream("tune/folds"))?;
    let mid_c1 = config.c1_grid[(config.c1_grid.len() - 1) / 2];

    let evaluate = |c1: f64, c2: f64, screening: bool| -> Result<f64, HarnessError> {
        let params = TrainParams { c1, c2, ..*base };
        let per_fold: Vec<(usize, usize)> = (0..config.folds)
            .into_par_iter()
            .map(|f| {
                let mut rng = seeds.stream(&format!("tune/aux/{f}"));
                let out = run_fold(ds, &params, &assign, f, &mut rng, config.ablation)?;
                let Ok(model) = out.model else {
                    return Ok((0, out.test.len()));
                };
                if !screening {
                    let pred = predict(&model, ds, &out.test);
                    let hits = pred.iter().zip(&out.test).filter(|(p, &i)| **p == ds.labels[i]).count();
                    return Ok((hits, out.test.len()));
                }
                let unused: Vec<usize> = (0..ds.normal.len()).filter(|i| !out.normal_used.contains(i)).collect();
                let k = out.test.len().min(unused.len());
                let mut rng = seeds.stream(&format!("tune/eval/{f}"));
                let normals: Vec<usize> = sample(&mut rng, unused.len(), k).into_iter().map(|j| unused[j]).collect();
                let mut hits = out
                    .test
                    .iter()
                    .filter(|&&i| model.classify(&ds.biopsies[i]).is_ok_and(|l| l != ClassLabel::Normal))
                    .count();
                hits += normals.iter().filter(|&&i| model.classify(&ds.normal[i]).is_ok_and(|l| l == ClassLabel::Normal)).count();
                Ok((hits, out.test.len() + k))
            })
            .collect::<Result<_, HarnessError>>()?;
        let (hits, total) = per_fold.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        Ok(hits as f64 / total.max(1) as f64)
    };

    let mut screening = Vec::new();
    for &c2 in &config.c2_grid {
        screening.push((c2, evaluate(mid_c1, c2, true)?));
    }
    let kept: Vec<f64> = screening.iter().filter(|s| s.1 > config.screen_threshold).map(|s| s.0).collect();
    if kept.is_empty() {
        let best = screening.iter().fold((f64::NAN, f64::NEG_INFINITY), |b, s| if s.1 > b.1 { (s.0, s.1) } else { b });
        return Err(HarnessError::ScreeningFailed { best: best.1, c2: best.0, threshold: config.screen_threshold });
    }

    let mut scan = Vec::new();
    let mut best: Option<(f64, f64, f64)> = None;
    for &c2 in &kept {
        for &c1 in &config.c1_grid {
            let acc = evaluate(c1, c2, false)?;
            scan.push((c1, c2, acc));
            let better = match best {
                None => true,
                Some((b1, b2, ba)) => acc > ba || (acc == ba && (c1 < b1 || (c1 == b1 && c2 < b2))),
            };
            if better {
                best = Some((c1, c2, acc));
            }
        }
    }
    let (c1, c2, _) = best.expect("kept is nonempty");
    Ok(TuneReport { c1, c2, screening, scan })
}
