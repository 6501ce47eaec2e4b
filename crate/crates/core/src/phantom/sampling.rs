use super::{ContrastStack, PhantomError};
use crate::features::{HALF, WINDOW_SIZE};
use crate::wso::ClassLabel;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Center {
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledCenter {
    pub row: usize,
    pub col: usize,
    pub label: ClassLabel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiopsyOptions {
    /// Minimum Euclidean distance between accepted centers, in pixels.
    pub min_separation: f64,
    /// If set, the fraction of window pixels sharing the center's label must
    /// reach this value.
    pub min_purity: Option<f64>,
}

impl Default for BiopsyOptions {
    fn default() -> Self {
        Self { min_separation: 4.0, min_purity: None }
    }
}

fn window_purity(truth: &crate::phantom::Plane, row: usize, col: usize) -> f64 {
    let label = truth.get(row, col);
    let mut same = 0;
    for r in row - HALF..row - HALF + WINDOW_SIZE {
        for c in col - HALF..col - HALF + WINDOW_SIZE {
            if truth.get(r, c) == label {
                same += 1;
            }
        }
    }
    same as f64 / (WINDOW_SIZE * WINDOW_SIZE) as f64
}

fn valid_in(stack: &ContrastStack, mask: &super::Mask) -> Vec<Center> {
    mask.pixels()
        .filter(|&(r, c)| !stack.necrosis.get(r, c) && stack.valid_center(r, c))
        .map(|(row, col)| Center { row, col })
        .collect()
}

/// Rejection sampling inside the AOI with a retry budget of `100 n`.
pub fn sample_biopsies(
    stack: &ContrastStack,
    gene: &str,
    n: usize,
    opts: &BiopsyOptions,
    seed: u64,
) -> Result<Vec<LabeledCenter>, PhantomError> {
    let truth = stack.truth(gene).ok_or_else(|| PhantomError::UnknownGene(gene.to_string()))?;
    let pool = valid_in(stack, &stack.aoi());
    let budget = 100 * n;
    if pool.is_empty() && n > 0 {
        return Err(PhantomError::InsufficientRegion { region: "tumoral AOI", needed: n, available: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<LabeledCenter> = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        if attempts == budget {
            return Err(PhantomError::Placement { requested: n, placed: out.len(), attempts });
        }
        attempts += 1;
        let c = pool[rng.random_range(0..pool.len())];
        let far = out.iter().all(|o| {
            let d2 = (o.row as f64 - c.row as f64).powi(2) + (o.col as f64 - c.col as f64).powi(2);
            d2 > 0.0 && d2 >= opts.min_separation * opts.min_separation
        });
        if !far {
            continue;
        }
        if let Some(p) = opts.min_purity {
            if window_purity(truth, c.row, c.col) < p {
                continue;
            }
        }
        let label = if truth.get(c.row, c.col) == 2.0 { ClassLabel::Altered } else { ClassLabel::NonAltered };
        out.push(LabeledCenter { row: c.row, col: c.col, label });
    }
    Ok(out)
}

fn draw(pool: &[Center], k: usize, rng: &mut ChaCha8Rng, region: &'static str) -> Result<Vec<Center>, PhantomError> {
    if pool.len() < k {
        return Err(PhantomError::InsufficientRegion { region, needed: k, available: pool.len() });
    }
    Ok(sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect())
}

/// `n / 2` distinct centers from CE followed by `n / 2` from NE.
pub fn sample_unlabeled(stack: &ContrastStack, n: usize, seed: u64) -> Result<Vec<Center>, PhantomError> {
    if n % 2 != 0 {
        return Err(PhantomError::OddCount(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = draw(&valid_in(stack, &stack.ce), n / 2, &mut rng, "CE")?;
    out.extend(draw(&valid_in(stack, &stack.ne), n / 2, &mut rng, "NE")?);
    Ok(out)
}

/// `n` distinct centers in the contralateral region.
pub fn sample_normal(stack: &ContrastStack, n: usize, seed: u64) -> Result<Vec<Center>, PhantomError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw(&valid_in(stack, &stack.contralateral), n, &mut rng, "contralateral region")
}
