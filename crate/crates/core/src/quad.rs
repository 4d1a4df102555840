//! Adaptive quadrature for tail integrals of distribution-like functions.

use std::cell::Cell;

/// Hard cap on function evaluations per adaptive pass.  Distribution
/// integrands computed through `exp(ln_sf(y) − ln_sf(t))` carry relative
/// jitter far above machine epsilon when `ln_sf` is large, so an adaptive
/// scheme chasing a tight tolerance must be stopped by fiat somewhere.
const MAX_EVALS: u64 = 20_000;

/// Adaptive Simpson integration of `f` on `[a, b]` to relative tolerance
/// `rel_tol` (relative to the magnitude of the whole integral).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let scale = whole.abs().max(1e-300);
    let evals = Cell::new(0u64);
    recurse(&f, a, b, fa, fm, fb, whole, rel_tol * scale, 30, &evals)
}

/// Like [`adaptive_simpson`] but against an absolute error budget, for
/// callers that know the magnitude of a larger integral this piece feeds.
fn adaptive_simpson_abs<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let evals = Cell::new(0u64);
    recurse(&f, a, b, fa, fm, fb, whole, abs_tol.max(1e-300), 30, &evals)
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &Cell<u64>,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    if !(a < lm && lm < m && m < rm && rm < b) || evals.get() >= MAX_EVALS {
        // Interval no longer splittable, or the evaluation budget is spent.
        return whole;
    }
    evals.set(evals.get() + 2);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // Third condition: once the Simpson correction sits at the rounding
    // noise of the local sums, subdividing further cannot gain accuracy and
    // only blows up the recursion tree (the tolerance keeps halving).
    if depth == 0
        || delta.abs() <= 15.0 * tol
        || delta.abs() <= 1e-13 * (left.abs() + right.abs())
    {
        left + right + delta / 15.0
    } else {
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evals)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evals)
    }
}

/// ∫_t^∞ f(y) dy via the substitution y = t + scale·((1−u)^{−κ} − 1) on
/// u ∈ [0, 1).  The power κ = 8 keeps the transformed integrand smooth at
/// u = 1 even for polynomial tails decaying as slowly as y^{−2.5}.
pub fn tail_integral<F: Fn(f64) -> f64>(f: F, t: f64, scale: f64, rel_tol: f64) -> f64 {
    const KAPPA: f64 = 8.0;
    let scale = scale.max(1e-300);
    let g = |u: f64| -> f64 {
        if u >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - u;
        let p = w.powf(-KAPPA);
        let y = t + scale * (p - 1.0);
        if !y.is_finite() {
            return 0.0;
        }
        let dy = scale * KAPPA * p / w;
        let v = f(y) * dy;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // The integrand can be sharply peaked near u = 0 when the distribution
    // tail is much shorter than `scale`; a fixed initial partition keeps the
    // adaptive pass from stepping over it.  The first pass is deliberately
    // loose — pieces are then refined against an absolute budget taken from
    // the *global* magnitude, so that negligible pieces are never chased to
    // a per-piece relative tolerance they cannot attain.
    let mut total = 0.0;
    let pieces = 16;
    let coarse_tol = rel_tol.max(1e-6);
    let mut estimates = Vec::with_capacity(pieces);
    for i in 0..pieces {
        let a = i as f64 / pieces as f64;
        let b = (i + 1) as f64 / pieces as f64;
        estimates.push((a, b, adaptive_simpson(&g, a, b, coarse_tol)));
    }
    let rough: f64 = estimates.iter().map(|e| e.2.abs()).sum();
    let budget = rel_tol * rough / pieces as f64;
    for (a, b, est) in estimates {
        if est.abs() > 1e-6 * rough {
            total += adaptive_simpson_abs(&g, a, b, budget);
        } else {
            total += est;
        }
    }
    total
}
