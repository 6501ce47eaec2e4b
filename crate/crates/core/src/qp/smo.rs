//! Pairwise coordinate descent over the faces of one phase.
//!
//! Within a block with hyperplane `sum a_i x_i = 0`, work in `z_i = a_i x_i`
//! so the constraint becomes `sum z_i = 0` and each step moves one
//! coordinate up and another down by the same amount. Pairs are picked by
//! maximal violation for the first index and second-order gain for the
//! second. Coordinates outside every block take clipped Newton steps.

use super::{Faces, QpInstance};

struct Scaled {
    z: f64,
    lo: f64,
    hi: f64,
}

fn scaled(qp: &QpInstance, x: &[f64], i: usize) -> Scaled {
    let a = qp.eq[i];
    let (l, u) = (a * qp.lower[i], a * qp.upper[i]);
    Scaled { z: a * x[i], lo: l.min(u), hi: l.max(u) }
}

/// Moves `x` (feasible for `faces`) towards a point where every block's
/// maximal violating pair gap and every singleton violation is at most
/// `eps`. Returns the number of updates.
pub(super) fn descend(qp: &QpInstance, faces: &Faces, x: &mut [f64], eps: f64, max_updates: usize) -> usize {
    let n = qp.n;
    let singles: Vec<usize> = (0..n).filter(|&i| faces.block_of[i].is_none()).collect();
    let mut updates = 0;
    for _refresh in 0..3 {
        let mut g: Vec<f64> = qp.q_times(x).iter().zip(&qp.lin).map(|(a, b)| a - b).collect();
        loop {
            if updates >= max_updates {
                return updates;
            }
            // most violated block or singleton
            let mut best: Option<(f64, Target)> = None;
            for (b, idx) in faces.blocks.iter().enumerate() {
                let mut up: Option<(usize, f64)> = None;
                let mut down = f64::NEG_INFINITY;
                for &i in idx {
                    let s = scaled(qp, x, i);
                    let gi = g[i] / qp.eq[i];
                    if s.z < s.hi && up.is_none_or(|(_, v)| gi < v) {
                        up = Some((i, gi));
                    }
                    if s.z > s.lo {
                        down = down.max(gi);
                    }
                }
                if let Some((i, gi)) = up {
                    let gap = down - gi;
                    if gap > eps && best.as_ref().is_none_or(|(v, _)| gap > *v) {
                        best = Some((gap, Target::Pair { block: b, i }));
                    }
                }
            }
            for &i in &singles {
                let v = if g[i] < 0.0 && x[i] < qp.upper[i] {
                    -g[i]
                } else if g[i] > 0.0 && x[i] > qp.lower[i] {
                    g[i]
                } else {
                    0.0
                };
                if v > eps && best.as_ref().is_none_or(|(w, _)| v > *w) {
                    best = Some((v, Target::Single(i)));
                }
            }
            let Some((_, target)) = best else { break };

            match target {
                Target::Single(i) => {
                    let qii = qp.q[i * n + i];
                    let old = x[i];
                    x[i] = if qii > 0.0 {
                        (old - g[i] / qii).clamp(qp.lower[i], qp.upper[i])
                    } else if g[i] < 0.0 {
                        qp.upper[i]
                    } else {
                        qp.lower[i]
                    };
                    axpy(&mut g, &qp.q[i * n..(i + 1) * n], x[i] - old);
                }
                Target::Pair { block, i } => {
                    let ai = qp.eq[i];
                    let gi = g[i] / ai;
                    let qii = qp.q[i * n + i] / (ai * ai);
                    let mut pick: Option<(usize, f64, f64)> = None;
                    for &j in &faces.blocks[block] {
                        let s = scaled(qp, x, j);
                        let aj = qp.eq[j];
                        let gj = g[j] / aj;
                        if j == i || s.z <= s.lo || gj <= gi {
                            continue;
                        }
                        let curv = qii + qp.q[j * n + j] / (aj * aj) - 2.0 * qp.q[i * n + j] / (ai * aj);
                        let curv = if curv > 1e-12 { curv } else { 1e-12 };
                        let gain = (gj - gi) * (gj - gi) / curv;
                        if pick.is_none_or(|(_, v, _)| gain > v) {
                            pick = Some((j, gain, curv));
                        }
                    }
                    let Some((j, _, curv)) = pick else { break };
                    let aj = qp.eq[j];
                    let (si, sj) = (scaled(qp, x, i), scaled(qp, x, j));
                    let room_i = si.hi - si.z;
                    let room_j = sj.z - sj.lo;
                    let t = ((g[j] / aj - gi) / curv).min(room_i).min(room_j);
                    let (oi, oj) = (x[i], x[j]);
                    x[i] = if t >= room_i { bound_at(qp, i, si.hi) } else { (si.z + t) / ai };
                    x[j] = if t >= room_j { bound_at(qp, j, sj.lo) } else { (sj.z - t) / aj };
                    axpy(&mut g, &qp.q[i * n..(i + 1) * n], x[i] - oi);
                    axpy(&mut g, &qp.q[j * n..(j + 1) * n], x[j] - oj);
                }
            }
            updates += 1;
        }
    }
    updates
}

enum Target {
    Pair { block: usize, i: usize },
    Single(usize),
}

/// The `x`-space bound whose scaled value is `z`.
fn bound_at(qp: &QpInstance, i: usize, z: f64) -> f64 {
    if z == qp.eq[i] * qp.upper[i] {
        qp.upper[i]
    } else {
        qp.lower[i]
    }
}

fn axpy(g: &mut [f64], row: &[f64], delta: f64) {
    if delta != 0.0 {
        g.iter_mut().zip(row).for_each(|(gi, qi)| *gi += delta * qi);
    }
}
