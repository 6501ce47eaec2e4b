//! Threshold recovery from a solved dual.
//!
//! Writing `h_i = y_i (Q gamma)_i` for the decision value at training sample
//! `i`, the dual stationarity conditions read `y_i (h_i - b) - 1 = l_i - u_i`
//! with `b = b1` for biopsy multipliers and `b = b0` for the others.
//! Strictly interior multipliers therefore pin `b = h_i - y_i`; multipliers
//! at a bound only bound `b` from one side.

use super::TrainingSet;
use crate::qp::{DualSolution, QpInstance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasRecovery {
    pub b0: f64,
    pub b1: f64,
    /// Interior multipliers used for `b0` and `b1`.
    pub b0_support: usize,
    pub b1_support: usize,
    /// The ordering multiplier was positive, forcing `b0 = b1`.
    pub coupled: bool,
}

#[derive(Debug, Clone)]
struct Candidates {
    values: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl Candidates {
    fn new() -> Self {
        Self { values: Vec::new(), lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    fn merge(&self, other: &Candidates) -> Candidates {
        let mut values = self.values.clone();
        values.extend(&other.values);
        Candidates { values, lo: self.lo.max(other.lo), hi: self.hi.min(other.hi) }
    }

    fn estimate(&self) -> f64 {
        if !self.values.is_empty() {
            return self.values.iter().sum::<f64>() / self.values.len() as f64;
        }
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (true, false) => self.lo,
            (false, true) => self.hi,
            (false, false) => 0.0,
        }
    }
}

/// `qp` must be the dual of `ts` (as built by training) and `sol` its
/// solution.
pub fn recover_biases(qp: &QpInstance, sol: &DualSolution, ts: &TrainingSet) -> BiasRecovery {
    let slots = ts.layout();
    let n = qp.dim();
    let q = qp.q();
    let gamma = &sol.gamma;
    let mut alpha = Candidates::new();
    let mut beta = Candidates::new();
    for (i, slot) in slots.iter().enumerate() {
        let qg: f64 = q[i * n..(i + 1) * n].iter().zip(gamma).map(|(a, b)| a * b).sum();
        let h = slot.y * qg;
        let c = qp.upper()[i];
        let eps = 1e-6 * c;
        let target = if slot.is_alpha() { &mut alpha } else { &mut beta };
        let g = gamma[i];
        if g > eps && g < c - eps {
            target.values.push(h - slot.y);
        } else if g <= eps {
            // y (h - b) >= 1
            if slot.y > 0.0 {
                target.hi = target.hi.min(h - 1.0);
            } else {
                target.lo = target.lo.max(h + 1.0);
            }
        } else if slot.y > 0.0 {
            target.lo = target.lo.max(h - 1.0);
        } else {
            target.hi = target.hi.min(h + 1.0);
        }
    }

    let coupled = sol.mu > 1e-6 * qp.upper().iter().copied().fold(1.0, f64::max);
    let (mut b0, mut b1) = if coupled {
        let b = alpha.merge(&beta).estimate();
        (b, b)
    } else {
        (beta.estimate(), alpha.estimate())
    };
    if b0 > b1 {
        let mid = 0.5 * (b0 + b1);
        b0 = mid;
        b1 = mid;
    }
    BiasRecovery { b0, b1, b0_support: beta.values.len(), b1_support: alpha.values.len(), coupled }
}
