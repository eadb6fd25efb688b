//! One-dimensional search primitives: golden-section minimization for convex
//! functions and plain bisection for bracketed roots.

/// Golden-section search for the minimum of a convex `f` on `[lo, hi]`.
///
/// Ties move to the left interval, so a flat minimum resolves to its
/// smallest point. Returns `(x, f(x))` for the best of the final bracket
/// endpoints and midpoint, preferring the smaller argument on equal values.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, lo0: f64, hi0: f64, tol_x: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut lo, mut hi) = (lo0, hi0);
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while hi - lo > tol_x && iter < 200 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
        iter += 1;
    }
    let mid = 0.5 * (lo + hi);
    let mut best = (lo, f(lo));
    for x in [mid, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Bisection on `[lo, hi]` under the sign-change invariant
/// `f(lo) <= 0 <= f(hi)`. Stops when the midpoint stops moving and returns
/// it. The caller is responsible for checking the bracket.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, max_iter: usize) -> f64 {
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
