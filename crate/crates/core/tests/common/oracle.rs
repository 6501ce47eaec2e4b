//! Exhaustive active-set oracle for small dual QPs.
//!
//! Every coordinate is assigned one of {lower, upper, free} and the
//! inequality one of {inactive, active}. For each assignment the
//! equality-constrained problem over the free coordinates is solved through
//! its KKT system with an SVD least-squares solve; consistent, feasible
//! stationary points are kept and the smallest objective wins. The global
//! minimizer of a convex QP is a stationary point of the face it lies on, so
//! the enumeration finds the optimal value.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

pub struct OracleInstance<'a> {
    pub q: &'a [f64],
    pub lin: &'a [f64],
    pub eq: &'a [f64],
    pub ineq: &'a [f64],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

pub struct OracleResult {
    pub objective: f64,
    pub gamma: Vec<f64>,
}

fn objective(inst: &OracleInstance, x: &[f64]) -> f64 {
    let n = x.len();
    let mut f = 0.0;
    for i in 0..n {
        let mut qi = 0.0;
        for j in 0..n {
            qi += inst.q[i * n + j] * x[j];
        }
        f += 0.5 * x[i] * qi - inst.lin[i] * x[i];
    }
    f
}

pub fn brute_force(inst: &OracleInstance) -> Option<OracleResult> {
    let n = inst.lin.len();
    assert!(n <= 13, "oracle is exponential in n");
    let total = 3usize.pow(n as u32);
    let mut best: Option<OracleResult> = None;
    let feas_tol = 1e-9;
    for code in 0..total {
        let mut states = vec![0u8; n];
        let mut c = code;
        for s in states.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        for active in [false, true] {
            let free: Vec<usize> = (0..n).filter(|&i| states[i] == 2).collect();
            let mut x = vec![0.0; n];
            for i in 0..n {
                match states[i] {
                    0 => x[i] = inst.lower[i],
                    1 => x[i] = inst.upper[i],
                    _ => {}
                }
            }
            let mut rows: Vec<&[f64]> = vec![inst.eq];
            if active {
                rows.push(inst.ineq);
            }
            let m = free.len();
            let k = rows.len();
            let mut kkt = DMatrix::<f64>::zeros(m + k, m + k);
            let mut rhs = DVector::<f64>::zeros(m + k);
            for (s, &i) in free.iter().enumerate() {
                for (t, &j) in free.iter().enumerate() {
                    kkt[(s, t)] = inst.q[i * n + j];
                }
                let mut r = inst.lin[i];
                for j in 0..n {
                    if states[j] != 2 {
                        r -= inst.q[i * n + j] * x[j];
                    }
                }
                rhs[s] = r;
                for (c, row) in rows.iter().enumerate() {
                    kkt[(s, m + c)] = row[i];
                    kkt[(m + c, s)] = row[i];
                }
            }
            for (c, row) in rows.iter().enumerate() {
                let fixed: f64 = (0..n).filter(|&j| states[j] != 2).map(|j| row[j] * x[j]).sum();
                rhs[m + c] = -fixed;
            }
            let svd = kkt.clone().svd(true, true);
            let Ok(sol) = svd.solve(&rhs, 1e-11) else { continue };
            let resid = (&kkt * &sol - &rhs).amax();
            if resid > 1e-8 {
                continue;
            }
            for (s, &i) in free.iter().enumerate() {
                x[i] = sol[s];
            }
            let in_box = (0..n).all(|i| x[i] >= inst.lower[i] - feas_tol && x[i] <= inst.upper[i] + feas_tol);
            let a_dot: f64 = inst.eq.iter().zip(&x).map(|(a, b)| a * b).sum();
            let d_dot: f64 = inst.ineq.iter().zip(&x).map(|(a, b)| a * b).sum();
            if !in_box || a_dot.abs() > feas_tol || d_dot < -feas_tol {
                continue;
            }
            let f = objective(inst, &x);
            if best.as_ref().map_or(true, |b| f < b.objective) {
                best = Some(OracleResult { objective: f, gamma: x });
            }
        }
    }
    best
}
