use super::HarnessError;
use crate::wso::ClassLabel;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

/// Fold index per sample. Each class is shuffled and dealt round-robin, the
/// second class continuing where the first stopped, so per-class and total
/// fold sizes both differ by at most one.
pub fn stratified_folds(labels: &[ClassLabel], k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>, HarnessError> {
    if k < 2 || k > labels.len() {
        return Err(HarnessError::Folds { k, n: labels.len() });
    }
    let mut classes: Vec<ClassLabel> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for c in classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(rng);
        for i in idx {
            fold[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(fold)
}
