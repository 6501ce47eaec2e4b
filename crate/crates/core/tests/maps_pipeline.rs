use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wso_core::features::feature_vector;
use wso_core::kernels::{KernelSpec, Standardizer};
use wso_core::maps::{mappable, predict_map, truth_agreement, OUTSIDE};
use wso_core::phantom::{sample_biopsies, sample_normal, sample_unlabeled, BiopsyOptions};
use wso_core::phantom::{generate, Mask, PhantomConfig};
use wso_core::qp::KktReport;
use wso_core::wso::{train, ModelParts, TrainedModel, TrainingSet};
use wso_core::{KernelChoice, TrainParams};

fn random_model(n_sv: usize, seed: u64) -> TrainedModel {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let d = 280;
    let support = (0..n_sv).map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let coef = (0..n_sv).map(|_| r.random_range(-1.0..1.0)).collect();
    TrainedModel::from_parts(ModelParts {
        kernel: KernelSpec::gaussian(1.0 / d as f64).unwrap(),
        c1: 1.0,
        c2: 1.0,
        standardizer: Standardizer { means: vec![1.0; d], stds: vec![0.5; d] },
        support,
        coef,
        b0: -0.05,
        b1: 0.05,
        background: Vec::new(),
        seed,
        kkt: KktReport::default(),
        objective: 0.0,
    })
    .unwrap()
}

fn trained_on_phantom(config: &PhantomConfig, gene: &str, n: usize, seed: u64) -> (wso_core::ContrastStack, TrainedModel) {
    let stack = generate(config).unwrap();
    let opts = BiopsyOptions { min_purity: Some(1.0), min_separation: 2.0 };
    let biopsies = sample_biopsies(&stack, gene, n, &opts, seed).unwrap();
    let fv = |r: usize, c: usize| feature_vector(&stack, r, c).unwrap().into_vec();
    let class1: Vec<Vec<f64>> = biopsies.iter().filter(|b| b.label.value() == 1).map(|b| fv(b.row, b.col)).collect();
    let class2: Vec<Vec<f64>> = biopsies.iter().filter(|b| b.label.value() == 2).map(|b| fv(b.row, b.col)).collect();
    let unlabeled = sample_unlabeled(&stack, n, seed + 1).unwrap().iter().map(|c| fv(c.row, c.col)).collect();
    let normal = sample_normal(&stack, n, seed + 2).unwrap().iter().map(|c| fv(c.row, c.col)).collect();
    let ts = TrainingSet::new(class1, class2, unlabeled, normal).unwrap();
    let params = TrainParams { kernel: KernelChoice::GaussianMedian, ..TrainParams::default() }.with_c(10.0, 1.0);
    (stack.clone(), train(&ts, &params).unwrap())
}

#[test]
fn noiseless_map_recovers_planted_field() {
    let config = PhantomConfig { noise: 0.0, texture: 0.0, ..PhantomConfig::default() };
    for gene in ["geneA", "geneB"] {
        let (stack, model) = trained_on_phantom(&config, gene, 40, 5);
        let map = predict_map(&model, &stack, gene, 1).unwrap();
        let agreement = truth_agreement(&map, stack.truth(gene).unwrap(), 8).unwrap();
        eprintln!("{gene}: agreement {agreement:.4}");
        assert!(agreement >= 0.95, "{gene}: {agreement}");
    }
}

#[test]
fn map_matches_pointwise_classification_and_ignores_jobs() {
    let config = PhantomConfig { width: 96, height: 96, noise: 0.1, ..PhantomConfig::default() };
    let (stack, model) = trained_on_phantom(&config, "geneA", 20, 9);
    let a = predict_map(&model, &stack, "geneA", 1).unwrap();
    let b = predict_map(&model, &stack, "geneA", 3).unwrap();
    assert_eq!(a, b);
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    while checked < 100 {
        let (row, col) = (r.random_range(0..96), r.random_range(0..96));
        if !mappable(&stack, row, col) {
            assert_eq!(a.raw(row, col), OUTSIDE);
            continue;
        }
        let x = feature_vector(&stack, row, col).unwrap();
        assert_eq!(a.get(row, col), Some(model.classify(x.as_slice()).unwrap()));
        checked += 1;
    }
    let p = a.proportions().unwrap();
    assert!((p.altered + p.non_altered + p.class0 - 1.0).abs() <= 1e-12);
}

#[test]
fn channel_mismatch_is_rejected() {
    let stack = generate(&PhantomConfig { width: 32, height: 32, ..PhantomConfig::default() }).unwrap();
    let mut parts = random_model(3, 1).to_parts();
    parts.standardizer = Standardizer::identity(56);
    parts.support = vec![vec![0.0; 56]; 3];
    let model = TrainedModel::from_parts(parts).unwrap();
    assert!(predict_map(&model, &stack, "geneA", 1).is_err());
}

#[test]
fn empty_aoi_gives_empty_map() {
    let mut stack = generate(&PhantomConfig { width: 32, height: 32, ..PhantomConfig::default() }).unwrap();
    stack.ce = Mask::new(32, 32);
    stack.ne = Mask::new(32, 32);
    let map = predict_map(&random_model(5, 2), &stack, "geneA", 2).unwrap();
    assert_eq!(map.classified(), 0);
    assert!(map.proportions().is_err());
}

#[test]
fn full_frame_map_with_thousand_support_vectors() {
    let mut stack = generate(&PhantomConfig::default()).unwrap();
    stack.ce = Mask::from_fn(128, 128, |_, _| true);
    let model = random_model(1000, 3);
    // the acceptance suite repeats this with its own timing budget
    let t = Instant::now();
    let map = predict_map(&model, &stack, "geneA", 1).unwrap();
    let secs = t.elapsed().as_secs_f64();
    eprintln!("128x128 map: {secs:.2} s");
    assert_eq!(map.classified(), 121 * 121);
    assert!(secs < 30.0);
}
