//! Seeded fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wso_core::kernels::{KernelSpec, Standardizer};
use wso_core::qp::KktReport;
use wso_core::wso::{ModelParts, TrainingSet};
use wso_core::{ContrastStack, PhantomConfig, TrainedModel};

fn rows(rng: &mut ChaCha8Rng, n: usize, dim: usize, shift: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0) + shift).collect()).collect()
}

/// Overlapping Gaussian-ish clusters; `n` samples per role.
pub fn training_set(n: usize, dim: usize, seed: u64) -> TrainingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c1 = rows(&mut rng, n, dim, 0.0);
    let c2 = rows(&mut rng, n, dim, 0.5);
    let un = rows(&mut rng, n, dim, 0.25);
    let no = rows(&mut rng, n, dim, -0.5);
    TrainingSet::new(c1, c2, un, no).expect("non-empty roles")
}

/// Gaussian-kernel model with `n_sv` random support vectors in 280 dims.
pub fn random_model(n_sv: usize, seed: u64) -> TrainedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 280;
    TrainedModel::from_parts(ModelParts {
        kernel: KernelSpec::gaussian(1.0 / d as f64).expect("positive width"),
        c1: 1.0,
        c2: 1.0,
        standardizer: Standardizer::identity(d),
        support: rows(&mut rng, n_sv, d, 0.0),
        coef: (0..n_sv).map(|_| rng.random_range(-1.0..1.0)).collect(),
        b0: -0.05,
        b1: 0.05,
        background: Vec::new(),
        seed,
        kkt: KktReport::default(),
        objective: 0.0,
    })
    .expect("consistent parts")
}

pub fn phantom(size: usize, seed: u64) -> ContrastStack {
    let config = PhantomConfig { width: size, height: size, seed, ..PhantomConfig::default() };
    wso_core::phantom::generate(&config).expect("valid phantom config")
}
