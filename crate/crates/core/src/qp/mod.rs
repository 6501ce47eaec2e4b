//! Dense convex QP solver for the WSO-SVM dual
//!
//! ```text
//!     minimize    1/2 g' Q g - lin' g
//!     subject to  a' g  = 0
//!                 d' g >= 0
//!                 lower <= g <= upper
//! ```
//!
//! where `d` is `a` restricted to a subset of coordinates (`d_i` is `0` or
//! `a_i`). That structure makes the feasible set with the inequality held
//! active a product of two single-hyperplane boxes, so both the relaxed and
//! the active-inequality problems can be handled by exact block projections.
//!
//! The solver first drops the inequality. If the relaxed optimum violates it,
//! the inequality is active at some optimum of the full problem (convexity)
//! and the problem is re-solved with it as an equality. Each phase alternates
//! a projected-gradient step (Armijo search along the projection arc, which
//! can change many active bounds at once) with an exact minimization over the
//! current face (free coordinates, block hyperplanes eliminated via a pivot
//! per block). The face step stops at the first bound it meets.
//!
//! Each phase opens with pairwise coordinate descent, which is cheap per
//! update and settles the active set on large degenerate instances; the
//! projected-gradient and face iteration then only polish.

mod dense;
mod kkt;
mod projection;
mod smo;

pub use kkt::{estimate_multipliers, kkt_residuals, KktReport, Multipliers};

use kkt::{bound_state, BoundState};
use projection::project_block;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("invalid QP instance: {0}")]
    Invalid(String),
    #[error("box for variable {index} is empty: [{lower}, {upper}]")]
    InfeasibleBox { index: usize, lower: f64, upper: f64 },
    #[error("no point of the box satisfies the linear constraints")]
    InfeasibleConstraints,
    #[error("no KKT point within tolerance after {iterations} iterations (best max residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64, best: Box<DualSolution> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpInstance {
    n: usize,
    q: Vec<f64>,
    lin: Vec<f64>,
    eq: Vec<f64>,
    ineq: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl QpInstance {
    /// `q` is row-major `n x n`.
    pub fn new(
        q: Vec<f64>,
        lin: Vec<f64>,
        eq: Vec<f64>,
        ineq: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self, QpError> {
        let n = lin.len();
        if q.len() != n * n || eq.len() != n || ineq.len() != n || lower.len() != n || upper.len() != n {
            return Err(QpError::Invalid(format!(
                "dimension mismatch: n = {n}, q = {}, eq = {}, ineq = {}, lower = {}, upper = {}",
                q.len(),
                eq.len(),
                ineq.len(),
                lower.len(),
                upper.len()
            )));
        }
        let all = q.iter().chain(&lin).chain(&eq).chain(&ineq).chain(&lower).chain(&upper);
        if all.clone().any(|v| v.is_nan()) || q.iter().chain(&lin).chain(&eq).chain(&ineq).any(|v| !v.is_finite()) {
            return Err(QpError::Invalid("non-finite coefficient".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (x, y) = (q[i * n + j], q[j * n + i]);
                if (x - y).abs() > 1e-10 * x.abs().max(y.abs()).max(1.0) {
                    return Err(QpError::Invalid(format!("Q not symmetric at ({i}, {j})")));
                }
            }
            if ineq[i] != 0.0 && ineq[i] != eq[i] {
                return Err(QpError::Invalid(format!(
                    "inequality coefficient {i} must be 0 or equal to the equality coefficient"
                )));
            }
            if lower[i] > upper[i] {
                return Err(QpError::InfeasibleBox { index: i, lower: lower[i], upper: upper[i] });
            }
            if !lower[i].is_finite() || !upper[i].is_finite() {
                return Err(QpError::Invalid(format!("unbounded box for variable {i}")));
            }
        }
        Ok(Self { n, q, lin, eq, ineq, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn q(&self) -> &[f64] {
        &self.q
    }
    pub fn lin(&self) -> &[f64] {
        &self.lin
    }
    pub fn eq(&self) -> &[f64] {
        &self.eq
    }
    pub fn ineq(&self) -> &[f64] {
        &self.ineq
    }
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub(crate) fn q_times(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|i| self.q[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let qx = self.q_times(x);
        objective_from(&qx, &self.lin, x)
    }

    /// Indices with `d_i != 0` and the remaining indices with `a_i != 0`.
    pub(crate) fn ineq_blocks(&self) -> (Vec<usize>, Vec<usize>) {
        let d_block = (0..self.n).filter(|&i| self.ineq[i] != 0.0).collect();
        let rest = (0..self.n).filter(|&i| self.ineq[i] == 0.0 && self.eq[i] != 0.0).collect();
        (d_block, rest)
    }

    /// Debug dump: one CSV row per variable with its row of `Q`, `lin`, `a`,
    /// `d`, bounds and optionally `gamma`.
    pub fn write_csv<W: Write>(&self, mut w: W, gamma: Option<&[f64]>) -> std::io::Result<()> {
        let n = self.n;
        let mut header: Vec<String> = (0..n).map(|j| format!("q{j}")).collect();
        header.extend(["lin", "eq", "ineq", "lower", "upper"].map(String::from));
        if gamma.is_some() {
            header.push("gamma".into());
        }
        writeln!(w, "{}", header.join(","))?;
        for i in 0..n {
            let mut row: Vec<String> = self.q[i * n..(i + 1) * n].iter().map(|v| v.to_string()).collect();
            row.extend([self.lin[i], self.eq[i], self.ineq[i], self.lower[i], self.upper[i]].map(|v| v.to_string()));
            if let Some(g) = gamma {
                row.push(g[i].to_string());
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn objective_from(qx: &[f64], lin: &[f64], x: &[f64]) -> f64 {
    x.iter().zip(qx).zip(lin).map(|((xi, qi), ci)| 0.5 * xi * qi - ci * xi).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on the largest KKT residual.
    pub tol: f64,
    /// Outer iterations per phase; `None` means `50 * n`.
    pub max_iter: Option<usize>,
    /// Diagonal shift (relative to the largest diagonal entry) tried when a
    /// face block fails to factor.
    pub jitter: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: None, jitter: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub gamma: Vec<f64>,
    pub objective: f64,
    /// `d^T gamma`, the multiplier of the ordering constraint `b0 <= b1`.
    pub mu: f64,
    pub multipliers: Multipliers,
    pub kkt: KktReport,
    /// Whether the inequality was held active in the final phase.
    pub ineq_active: bool,
    /// Objective after each outer iteration of the final phase.
    pub history: Vec<f64>,
}

impl DualSolution {
    pub fn lagrange_eq(&self) -> f64 {
        self.multipliers.eq
    }
    pub fn lagrange_ineq(&self) -> f64 {
        self.multipliers.ineq
    }
}

/// Feasible set of one phase: disjoint blocks, each with a hyperplane
/// `sum a_i x_i = 0`; coordinates outside every block only see the box.
struct Faces {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<Option<usize>>,
}

impl Faces {
    fn new(n: usize, blocks: Vec<Vec<usize>>) -> Self {
        let blocks: Vec<Vec<usize>> = blocks.into_iter().filter(|b| !b.is_empty()).collect();
        let mut block_of = vec![None; n];
        for (b, idx) in blocks.iter().enumerate() {
            for &i in idx {
                block_of[i] = Some(b);
            }
        }
        Self { blocks, block_of }
    }
}

struct Phase<'a> {
    qp: &'a QpInstance,
    faces: Faces,
    ineq_active: bool,
    opts: SolverOptions,
}

struct PhaseOutcome {
    x: Vec<f64>,
    mult: Multipliers,
    report: KktReport,
    history: Vec<f64>,
    converged: bool,
}

impl<'a> Phase<'a> {
    fn project(&self, z: &[f64]) -> Result<Vec<f64>, QpError> {
        let qp = self.qp;
        let mut out: Vec<f64> = z.iter().enumerate().map(|(i, &v)| v.clamp(qp.lower[i], qp.upper[i])).collect();
        for idx in &self.faces.blocks {
            project_block(z, &qp.eq, &qp.lower, &qp.upper, idx, &mut out)
                .map_err(|_| QpError::InfeasibleConstraints)?;
        }
        Ok(out)
    }

    /// Relaxed-problem residuals; the inequality is handled by the driver.
    fn check(&self, x: &[f64]) -> (Multipliers, KktReport) {
        let mult = estimate_multipliers(self.qp, x, self.ineq_active);
        let mut report = kkt_residuals(self.qp, x, &mult);
        if !self.ineq_active {
            let a_dot: f64 = self.qp.eq.iter().zip(x).map(|(d, v)| d * v).sum();
            let box_viol = (0..x.len())
                .map(|i| (self.qp.lower[i] - x[i]).max(x[i] - self.qp.upper[i]))
                .fold(0.0, f64::max);
            report.primal_feas_residual = box_viol.max(a_dot.abs());
        } else {
            // both block hyperplanes must hold, not just their sum
            let (d_block, _) = self.qp.ineq_blocks();
            let d_dot: f64 = d_block.iter().map(|&i| self.qp.eq[i] * x[i]).sum();
            report.primal_feas_residual = report.primal_feas_residual.max(d_dot.abs());
        }
        (mult, report)
    }

    fn run(&self, x0: &[f64]) -> Result<PhaseOutcome, QpError> {
        let qp = self.qp;
        let n = qp.n;
        let max_iter = self.opts.max_iter.unwrap_or(50 * n.max(1));
        // Gershgorin bound on the largest eigenvalue of Q
        let lipschitz = (0..n)
            .map(|i| qp.q[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
            .max(1e-300);

        let mut x = self.project(x0)?;
        smo::descend(qp, &self.faces, &mut x, 0.5 * self.opts.tol, 1000 * n.max(10));
        let mut qx = qp.q_times(&x);
        let mut f = objective_from(&qx, &qp.lin, &x);
        let mut history = Vec::new();
        let mut best: Option<(Vec<f64>, Multipliers, KktReport)> = None;

        for it in 0..max_iter {
            let (mult, mut report) = self.check(&x);
            report.iterations = it;
            let better = best.as_ref().map_or(true, |b| report.max_residual() < b.2.max_residual());
            if better {
                best = Some((x.clone(), mult.clone(), report));
            }
            if report.max_residual() <= self.opts.tol {
                return Ok(PhaseOutcome { x, mult, report, history, converged: true });
            }

            // projected gradient with Armijo search on the projection arc
            let g: Vec<f64> = qx.iter().zip(&qp.lin).map(|(a, b)| a - b).collect();
            let qg = qp.q_times(&g);
            let gg: f64 = g.iter().map(|v| v * v).sum();
            let gqg: f64 = g.iter().zip(&qg).map(|(a, b)| a * b).sum();
            let mut alpha = if gqg > 0.0 { gg / gqg } else { 1.0 / lipschitz };
            alpha = alpha.max(1.0 / lipschitz);
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - alpha * gi).collect();
                let y = self.project(&trial)?;
                let qy = qp.q_times(&y);
                let fy = objective_from(&qy, &qp.lin, &y);
                let decrease: f64 = g.iter().zip(y.iter().zip(&x)).map(|(gi, (yi, xi))| gi * (yi - xi)).sum();
                if fy <= f + 1e-4 * decrease && fy <= f {
                    x = y;
                    qx = qy;
                    f = fy;
                    break;
                }
                if alpha <= 1.0 / lipschitz {
                    break;
                }
                alpha = (0.5 * alpha).max(1.0 / lipschitz);
            }

            if let Some((nx, nqx, nf)) = self.face_step(&x, &qx, f) {
                x = nx;
                qx = nqx;
                f = nf;
            }
            history.push(f);
        }
        let (x, mult, mut report) = best.expect("at least one iterate");
        report.iterations = max_iter;
        Ok(PhaseOutcome { x, mult, report, history, converged: false })
    }

    /// Exact minimization over the face of `x`, truncated at the first bound.
    fn face_step(&self, x: &[f64], qx: &[f64], f: f64) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let qp = self.qp;
        let n = qp.n;
        let free: Vec<usize> =
            (0..n).filter(|&i| bound_state(x[i], qp.lower[i], qp.upper[i]) == BoundState::Free).collect();
        if free.is_empty() {
            return None;
        }
        // pivot per block: largest |a_i| among its free members, lowest index on ties
        let mut pivot: Vec<Option<usize>> = vec![None; self.faces.blocks.len()];
        for &i in &free {
            if let Some(b) = self.faces.block_of[i] {
                match pivot[b] {
                    Some(p) if qp.eq[p].abs() >= qp.eq[i].abs() => {}
                    _ => pivot[b] = Some(i),
                }
            }
        }
        let is_pivot = |i: usize| self.faces.block_of[i].is_some_and(|b| pivot[b] == Some(i));
        let cols: Vec<usize> = free.iter().copied().filter(|&i| !is_pivot(i)).collect();
        let m = cols.len();
        if m == 0 {
            return None;
        }
        // column j moves x_j by 1 and its block pivot by -a_j / a_pivot
        let link: Vec<Option<(usize, f64)>> = cols
            .iter()
            .map(|&j| self.faces.block_of[j].and_then(|b| pivot[b]).map(|p| (p, qp.eq[j] / qp.eq[p])))
            .collect();
        let g: Vec<f64> = qx.iter().zip(&qp.lin).map(|(a, b)| a - b).collect();
        let q = |i: usize, j: usize| qp.q[i * n + j];

        let mut h = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        for (s, &j) in cols.iter().enumerate() {
            rhs[s] = -(g[j] - link[s].map_or(0.0, |(p, r)| r * g[p]));
            for (t, &k) in cols.iter().enumerate().skip(s) {
                let mut v = q(j, k);
                if let Some((pk, rk)) = link[t] {
                    v -= rk * q(j, pk);
                }
                if let Some((pj, rj)) = link[s] {
                    v -= rj * q(pj, k);
                    if let Some((pk, rk)) = link[t] {
                        v += rj * rk * q(pj, pk);
                    }
                }
                h[s * m + t] = v;
                h[t * m + s] = v;
            }
        }
        let y = dense::solve_psd(&h, m, &rhs, self.opts.jitter)?;
        // descent check: g^T p = -rhs^T y
        let slope: f64 = -rhs.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        if !(slope < 0.0) {
            return None;
        }
        let mut p = vec![0.0; n];
        for (s, &j) in cols.iter().enumerate() {
            p[j] += y[s];
            if let Some((piv, r)) = link[s] {
                p[piv] -= r * y[s];
            }
        }
        let mut t_max = f64::INFINITY;
        let mut blocking = None;
        for &i in &free {
            let step = if p[i] > 0.0 {
                (qp.upper[i] - x[i]) / p[i]
            } else if p[i] < 0.0 {
                (qp.lower[i] - x[i]) / p[i]
            } else {
                continue;
            };
            if step < t_max {
                t_max = step;
                blocking = Some(i);
            }
        }
        let t = t_max.min(1.0);
        let mut nx: Vec<f64> =
            x.iter().zip(&p).enumerate().map(|(i, (xi, pi))| (xi + t * pi).clamp(qp.lower[i], qp.upper[i])).collect();
        if t_max <= 1.0 {
            if let Some(b) = blocking {
                nx[b] = if p[b] > 0.0 { qp.upper[b] } else { qp.lower[b] };
            }
        }
        let nqx = qp.q_times(&nx);
        let nf = objective_from(&nqx, &qp.lin, &nx);
        if nf <= f {
            Some((nx, nqx, nf))
        } else {
            None
        }
    }
}

/// Solves the instance from the origin (projected onto the feasible set).
pub fn solve(qp: &QpInstance, opts: &SolverOptions) -> Result<DualSolution, QpError> {
    solve_from(qp, opts, &vec![0.0; qp.dim()])
}

pub fn solve_from(qp: &QpInstance, opts: &SolverOptions, start: &[f64]) -> Result<DualSolution, QpError> {
    if !(opts.tol > 0.0) {
        return Err(QpError::Invalid(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if start.len() != qp.dim() {
        return Err(QpError::Invalid("start point length".into()));
    }
    let n = qp.dim();
    let all: Vec<usize> = (0..n).filter(|&i| qp.eq[i] != 0.0).collect();
    let relaxed = Phase { qp, faces: Faces::new(n, vec![all]), ineq_active: false, opts: *opts };
    let first = relaxed.run(start)?;
    let d_dot: f64 = qp.ineq.iter().zip(&first.x).map(|(d, v)| d * v).sum();

    let (outcome, ineq_active) = if d_dot >= -opts.tol {
        (first, false)
    } else {
        let (d_block, rest) = qp.ineq_blocks();
        let active = Phase { qp, faces: Faces::new(n, vec![d_block, rest]), ineq_active: true, opts: *opts };
        (active.run(&first.x)?, true)
    };

    let iterations = outcome.report.iterations;
    let mut kkt = kkt_residuals(qp, &outcome.x, &outcome.mult);
    kkt.iterations = iterations;
    let solution = DualSolution {
        objective: qp.objective(&outcome.x),
        mu: qp.ineq.iter().zip(&outcome.x).map(|(d, v)| d * v).sum(),
        gamma: outcome.x,
        multipliers: outcome.mult,
        kkt,
        ineq_active,
        history: outcome.history,
    };
    if outcome.converged && kkt.max_residual() <= opts.tol {
        Ok(solution)
    } else {
        Err(QpError::NotConverged { iterations, residual: kkt.max_residual(), best: Box::new(solution) })
    }
}
