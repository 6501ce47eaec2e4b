//! One-sided Wilcoxon rank-sum test for "a is stochastically greater than b".

use super::HarnessError;
use statrs::distribution::{ContinuousCDF, Normal};

/// Largest combined sample size handled by exact enumeration.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSumMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSum {
    /// Sum of the (mid)ranks of `a` in the pooled sample.
    pub w: f64,
    pub p_value: f64,
    pub method: RankSumMethod,
}

/// Midranks of the pooled sample `a ++ b`.
fn midranks(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

fn check(a: &[f64], b: &[f64]) -> Result<(), HarnessError> {
    if a.is_empty() || b.is_empty() {
        return Err(HarnessError::Empty("rank-sum sample"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(HarnessError::Invalid("rank-sum sample contains NaN".into()));
    }
    Ok(())
}

/// Exact null distribution of the doubled rank sum of `n` items drawn from
/// `doubled` (all subsets equally likely): `counts[s]` subsets sum to `s`.
pub fn exact_counts(doubled: &[usize], n: usize) -> Vec<f64> {
    let max: usize = doubled.iter().sum();
    // dp[j][s]: subsets of size j with sum s
    let mut dp = vec![vec![0.0f64; max + 1]; n + 1];
    dp[0][0] = 1.0;
    for &r in doubled {
        for j in (1..=n).rev() {
            for s in (r..=max).rev() {
                let add = dp[j - 1][s - r];
                if add != 0.0 {
                    dp[j][s] += add;
                }
            }
        }
    }
    dp.swap_remove(n)
}

/// `P(W >= w_observed)` under the permutation distribution.
pub fn rank_sum_exact(a: &[f64], b: &[f64]) -> Result<RankSum, HarnessError> {
    check(a, b)?;
    let (ranks, _) = midranks(a, b);
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let w2: usize = doubled[..a.len()].iter().sum();
    let counts = exact_counts(&doubled, a.len());
    let total: f64 = counts.iter().sum();
    let upper: f64 = counts[w2..].iter().sum();
    Ok(RankSum { w: w2 as f64 / 2.0, p_value: upper / total, method: RankSumMethod::Exact })
}

/// Normal approximation with tie-corrected variance and a continuity
/// correction of 0.5.
pub fn rank_sum_normal(a: &[f64], b: &[f64]) -> Result<RankSum, HarnessError> {
    check(a, b)?;
    let (ranks, ties) = midranks(a, b);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let total = n + m;
    let w: f64 = ranks[..a.len()].iter().sum();
    let mean = n * (total + 1.0) / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (total * (total - 1.0));
    let var = n * m / 12.0 * ((total + 1.0) - tie_term);
    let p_value = if var > 0.0 {
        let z = (w - mean - 0.5) / var.sqrt();
        Normal::standard().sf(z)
    } else {
        1.0
    };
    Ok(RankSum { w, p_value, method: RankSumMethod::Normal })
}

/// Exact when `|a| + |b| <= 20`, normal approximation otherwise.
pub fn rank_sum_one_sided(a: &[f64], b: &[f64]) -> Result<RankSum, HarnessError> {
    if a.len() + b.len() <= EXACT_LIMIT {
        rank_sum_exact(a, b)
    } else {
        rank_sum_normal(a, b)
    }
}
