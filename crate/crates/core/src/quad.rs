//! Small numerical integration helpers shared by the signal and risk modules.

use crate::error::{Error, Result};

/// Composite trapezoid rule over equally spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        len => {
            let inner: f64 = values[1..len - 1].iter().sum();
            step * (inner + 0.5 * (values[0] + values[len - 1]))
        }
    }
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
///
/// Fails when the recursion depth runs out before every panel meets its
/// share of the tolerance.
pub fn adaptive_simpson<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    const MAX_DEPTH: u32 = 50;
    if hi <= lo {
        return Ok(0.0);
    }
    let flo = f(lo);
    let fhi = f(hi);
    let mid = 0.5 * (lo + hi);
    let fmid = f(mid);
    let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    let mut ok = true;
    let value = simpson_step(&f, lo, hi, flo, fmid, fhi, whole, tol, MAX_DEPTH, &mut ok);
    if ok {
        Ok(value)
    } else {
        Err(Error::Quadrature { lo, hi, tol })
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    flo: f64,
    fmid: f64,
    fhi: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    ok: &mut bool,
) -> f64 {
    let mid = 0.5 * (lo + hi);
    let lmid = 0.5 * (lo + mid);
    let rmid = 0.5 * (mid + hi);
    let flmid = f(lmid);
    let frmid = f(rmid);
    let left = (mid - lo) / 6.0 * (flo + 4.0 * flmid + fmid);
    let right = (hi - mid) / 6.0 * (fmid + 4.0 * frmid + fhi);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *ok = false;
        return left + right + delta / 15.0;
    }
    simpson_step(f, lo, mid, flo, flmid, fmid, left, 0.5 * tol, depth - 1, ok)
        + simpson_step(f, mid, hi, fmid, frmid, fhi, right, 0.5 * tol, depth - 1, ok)
}

/// Integral of `f` over `[lo, hi]` split at the sorted `breaks` that fall
/// inside; use this when `f` has kinks the Simpson panels would straddle.
pub fn adaptive_simpson_split<F>(f: F, lo: f64, hi: f64, breaks: &[f64], tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut cuts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    cuts.push(lo);
    cuts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    cuts.push(hi);
    let share = tol / (cuts.len() - 1).max(1) as f64;
    cuts.windows(2)
        .map(|w| adaptive_simpson(&f, w[0], w[1], share))
        .sum()
}

/// Integral of `f` over `[start, +inf)` via the substitution `x = start + s / u - s`,
/// which maps `u in (0, 1]` onto the half line. `f` must decay faster than `1/x`.
pub fn upper_tail_integral<F>(f: F, start: f64, scale: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let g = |u: f64| {
        if u <= 0.0 {
            0.0
        } else {
            let x = start + scale * (1.0 / u - 1.0);
            let v = f(x) * scale / (u * u);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        }
    };
    adaptive_simpson(g, 0.0, 1.0, tol)
}
