//! Euclidean projection onto `{lo <= x <= hi, sum_i a_i x_i = 0}` for one
//! block of variables.
//!
//! `phi(lambda) = sum_i a_i clamp(z_i - lambda a_i)` is non-increasing and
//! piecewise linear with breakpoints where a coordinate meets a bound, so the
//! root is found by a binary search over sorted breakpoints followed by one
//! linear interpolation.

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EmptyIntersection;

pub(crate) fn project_block(
    z: &[f64],
    a: &[f64],
    lo: &[f64],
    hi: &[f64],
    idx: &[usize],
    out: &mut [f64],
) -> Result<(), EmptyIntersection> {
    if idx.is_empty() {
        return Ok(());
    }
    let phi = |lam: f64| -> f64 { idx.iter().map(|&i| a[i] * (z[i] - lam * a[i]).clamp(lo[i], hi[i])).sum() };

    let mut bps: Vec<f64> = Vec::with_capacity(2 * idx.len());
    for &i in idx {
        bps.push((z[i] - lo[i]) / a[i]);
        bps.push((z[i] - hi[i]) / a[i]);
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup();

    let first = phi(bps[0]);
    let last = phi(bps[bps.len() - 1]);
    let scale = idx.iter().map(|&i| (a[i] * lo[i]).abs().max((a[i] * hi[i]).abs())).fold(0.0, f64::max);
    let slack = 1e-12 * scale.max(1.0);
    if first < -slack || last > slack {
        return Err(EmptyIntersection);
    }

    let lam = if first <= 0.0 {
        bps[0]
    } else if last >= 0.0 {
        bps[bps.len() - 1]
    } else {
        // invariant: phi(bps[lo_k]) > 0 > phi(bps[hi_k])
        let (mut lo_k, mut hi_k) = (0usize, bps.len() - 1);
        let mut phi_lo = first;
        let mut phi_hi = last;
        while hi_k - lo_k > 1 {
            let mid = (lo_k + hi_k) / 2;
            let v = phi(bps[mid]);
            if v > 0.0 {
                lo_k = mid;
                phi_lo = v;
            } else if v < 0.0 {
                hi_k = mid;
                phi_hi = v;
            } else {
                lo_k = mid;
                hi_k = mid;
                phi_lo = 0.0;
                phi_hi = 0.0;
            }
        }
        if lo_k == hi_k || phi_lo == phi_hi {
            bps[lo_k]
        } else {
            let (t0, t1) = (bps[lo_k], bps[hi_k]);
            t0 + phi_lo * (t1 - t0) / (phi_lo - phi_hi)
        }
    };

    for &i in idx {
        out[i] = (z[i] - lam * a[i]).clamp(lo[i], hi[i]);
    }
    // Remove the rounding residue of the interpolation along the free coordinates.
    for _ in 0..2 {
        let r: f64 = idx.iter().map(|&i| a[i] * out[i]).sum();
        if r == 0.0 {
            break;
        }
        let norm: f64 = idx.iter().filter(|&&i| lo[i] < out[i] && out[i] < hi[i]).map(|&i| a[i] * a[i]).sum();
        if norm == 0.0 {
            break;
        }
        for &i in idx {
            if lo[i] < out[i] && out[i] < hi[i] {
                out[i] = (out[i] - r * a[i] / norm).clamp(lo[i], hi[i]);
            }
        }
    }
    Ok(())
}
