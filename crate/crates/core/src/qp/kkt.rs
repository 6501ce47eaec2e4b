//! KKT residuals and multiplier estimation for the dual problem.
//!
//! With `r = Q gamma - lin + a * lambda_eq - d * lambda_ineq`, optimality
//! requires `r_i = 0` on free coordinates, `r_i >= 0` at a lower bound and
//! `r_i <= 0` at an upper bound, together with `a^T gamma = 0`,
//! `d^T gamma >= 0`, `lambda_ineq >= 0` and `lambda_ineq * d^T gamma = 0`.

use super::QpInstance;

/// Lagrange multipliers of the dual problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    pub eq: f64,
    pub ineq: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Multipliers {
    pub fn zeros(n: usize) -> Self {
        Self { eq: 0.0, ineq: 0.0, lower: vec![0.0; n], upper: vec![0.0; n] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktReport {
    /// `||Q gamma - lin + a l_eq - d l_ineq - l_lower + l_upper||_inf`
    pub stationarity_residual: f64,
    /// Largest violation of the box, `a^T gamma = 0` or `d^T gamma >= 0`.
    pub primal_feas_residual: f64,
    /// Largest negative part of `l_ineq`, `l_lower`, `l_upper`.
    pub dual_feas_residual: f64,
    /// Sum of absolute complementary-slackness products.
    pub complementarity_residual: f64,
    pub iterations: usize,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.stationarity_residual
            .max(self.primal_feas_residual)
            .max(self.dual_feas_residual)
            .max(self.complementarity_residual)
    }

    pub fn is_finite(&self) -> bool {
        self.max_residual().is_finite()
    }
}

pub fn kkt_residuals(qp: &QpInstance, gamma: &[f64], mult: &Multipliers) -> KktReport {
    let n = qp.dim();
    assert_eq!(gamma.len(), n, "gamma length");
    let qg = qp.q_times(gamma);
    let mut stationarity: f64 = 0.0;
    let mut primal: f64 = 0.0;
    let mut compl = 0.0;
    for i in 0..n {
        let r = qg[i] - qp.lin[i] + qp.eq[i] * mult.eq - qp.ineq[i] * mult.ineq - mult.lower[i] + mult.upper[i];
        stationarity = stationarity.max(r.abs());
        primal = primal.max(qp.lower[i] - gamma[i]).max(gamma[i] - qp.upper[i]);
        compl += (mult.lower[i] * (gamma[i] - qp.lower[i])).abs();
        compl += (mult.upper[i] * (qp.upper[i] - gamma[i])).abs();
    }
    let a_dot = dot(&qp.eq, gamma);
    let d_dot = dot(&qp.ineq, gamma);
    primal = primal.max(a_dot.abs()).max(-d_dot).max(0.0);
    compl += (mult.ineq * d_dot).abs();
    let min_l = mult.lower.iter().copied().fold(0.0, f64::min);
    let min_u = mult.upper.iter().copied().fold(0.0, f64::min);
    let dual = (-mult.ineq).max(-min_l).max(-min_u).max(0.0);
    KktReport {
        stationarity_residual: stationarity,
        primal_feas_residual: primal,
        dual_feas_residual: dual,
        complementarity_residual: compl,
        iterations: 0,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BoundState {
    Free,
    Lower,
    Upper,
    /// `lower == upper`: the multiplier sign is unconstrained.
    Fixed,
}

pub(crate) fn bound_state(x: f64, lo: f64, hi: f64) -> BoundState {
    let tol = 1e-12 * (hi - lo).abs().max(1.0);
    let at_lo = x - lo <= tol;
    let at_hi = hi - x <= tol;
    match (at_lo, at_hi) {
        (true, true) => BoundState::Fixed,
        (true, false) => BoundState::Lower,
        (false, true) => BoundState::Upper,
        (false, false) => BoundState::Free,
    }
}

/// Shift `s` for one block such that `g_i + s a_i` is as close as possible to
/// satisfying the sign conditions. Least squares over free coordinates when
/// there are any, otherwise the midpoint of the interval allowed by the
/// bounded ones. Returns the estimate and that interval.
fn block_shift(idx: &[usize], g: &[f64], a: &[f64], states: &[BoundState]) -> (f64, f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for &i in idx {
        match states[i] {
            BoundState::Free => {
                num += a[i] * g[i];
                den += a[i] * a[i];
            }
            // need g + s a >= 0
            BoundState::Lower => {
                let t = -g[i] / a[i];
                if a[i] > 0.0 {
                    lo = lo.max(t);
                } else {
                    hi = hi.min(t);
                }
            }
            // need g + s a <= 0
            BoundState::Upper => {
                let t = -g[i] / a[i];
                if a[i] > 0.0 {
                    hi = hi.min(t);
                } else {
                    lo = lo.max(t);
                }
            }
            BoundState::Fixed => {}
        }
    }
    let estimate = if den > 0.0 {
        -num / den
    } else {
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
    };
    let interval = if den > 0.0 { (estimate, estimate) } else { (lo, hi) };
    (estimate, interval.0, interval.1)
}

/// Multiplier estimate for `gamma`. With `ineq_active` the inequality is
/// treated as an equality, which splits the coordinates into the block where
/// `d_i = a_i` and the block where `d_i = 0`, each with its own shift.
pub fn estimate_multipliers(qp: &QpInstance, gamma: &[f64], ineq_active: bool) -> Multipliers {
    let n = qp.dim();
    let g: Vec<f64> = qp.q_times(gamma).iter().zip(&qp.lin).map(|(q, c)| q - c).collect();
    let states: Vec<BoundState> = (0..n).map(|i| bound_state(gamma[i], qp.lower[i], qp.upper[i])).collect();

    let (eq, ineq) = if !ineq_active {
        let idx: Vec<usize> = (0..n).filter(|&i| qp.eq[i] != 0.0).collect();
        (block_shift(&idx, &g, &qp.eq, &states).0, 0.0)
    } else {
        let (d_block, rest) = qp.ineq_blocks();
        let (mut u, u_lo, u_hi) = block_shift(&d_block, &g, &qp.eq, &states);
        let (mut v, v_lo, v_hi) = block_shift(&rest, &g, &qp.eq, &states);
        // lambda_ineq = v - u must be nonnegative; use any slack in the intervals
        if u > v {
            if u_lo < u_hi {
                u = u_lo.max(v.min(u));
            }
            if u > v && v_lo < v_hi {
                v = v_hi.min(u.max(v));
            }
        }
        (v, v - u)
    };

    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let r = g[i] + qp.eq[i] * eq - qp.ineq[i] * ineq;
        match states[i] {
            BoundState::Free => {}
            BoundState::Lower => lower[i] = r.max(0.0),
            BoundState::Upper => upper[i] = (-r).max(0.0),
            BoundState::Fixed => {
                lower[i] = r.max(0.0);
                upper[i] = (-r).max(0.0);
            }
        }
    }
    Multipliers { eq, ineq, lower, upper }
}
