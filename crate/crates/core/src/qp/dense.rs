//! Small dense symmetric solves used by the face minimization.

/// Lower-triangular Cholesky factor of `m + shift * I`, row-major.
fn cholesky(m: &[f64], n: usize, shift: f64, min_pivot: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m[j * n + j] + shift;
        let lj = &l[j * n..j * n + j];
        d -= lj.iter().map(|v| v * v).sum::<f64>();
        if !(d > min_pivot) {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let s = m[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
        y[i] = (y[i] - s) / l[i * n + i];
    }
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| l[k * n + i] * y[k]).sum();
        y[i] = (y[i] - s) / l[i * n + i];
    }
    y
}

/// Solves `m y = rhs` for symmetric positive semidefinite `m`.
///
/// A plain factorization is tried first; if a pivot collapses, `jitter`
/// (relative to the largest diagonal entry) is added and escalated by 100x
/// until the factorization succeeds. Two rounds of iterative refinement
/// against the unshifted matrix follow.
pub(crate) fn solve_psd(m: &[f64], n: usize, rhs: &[f64], jitter: f64) -> Option<Vec<f64>> {
    if n == 0 {
        return Some(Vec::new());
    }
    let scale = (0..n).map(|i| m[i * n + i].abs()).fold(0.0, f64::max).max(1.0);
    let min_pivot = 1e-13 * scale;
    let mut factor = cholesky(m, n, 0.0, min_pivot);
    let mut step = jitter * scale;
    while factor.is_none() {
        if step > 1e-2 * scale {
            return None;
        }
        factor = cholesky(m, n, step, 0.0);
        step *= 100.0;
    }
    let l = factor?;
    let mut y = cholesky_solve(&l, n, rhs);
    for _ in 0..2 {
        let r: Vec<f64> = (0..n)
            .map(|i| rhs[i] - (0..n).map(|j| m[i * n + j] * y[j]).sum::<f64>())
            .collect();
        let dy = cholesky_solve(&l, n, &r);
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi += d;
        }
    }
    if y.iter().all(|v| v.is_finite()) {
        Some(y)
    } else {
        None
    }
}
