//! The two-dimensional distance calibration.
//!
//! For a fixed gain `omega`, the distance from `e_0` to the line
//! `y -> y*(e_0 + omega*e_1)` is `min_y ||(y-1)e_0 + y*omega*e_1||`. As
//! `omega` sweeps `[eps, eps/(1-eps)]` that minimum crosses `eps`, and
//! `solve_omega` pins down a crossing by bisection. For `lp` norms with
//! `1 < p < oo` the crossing also satisfies a closed-form equation, which
//! `closed_form_omega` solves independently; the two routes cross-check each
//! other in the tests.
//!
//! Minimizers over complex `y` reduce to real `y` in `[0, 1]`: clamping
//! `Re y` into `[0, 1]` decreases both `|y - 1|` and `|y|`, and by
//! 1-unconditionality that never increases the norm.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::norm::SequenceNorm;
use crate::scaled::ScaledReal;
use crate::search::{bisect, golden_min};

/// Default width tolerance for the inner minimization over `y`.
pub const DEFAULT_Y_TOL: f64 = 1e-12;
/// Default residual tolerance for the outer solve over `omega`.
pub const DEFAULT_OMEGA_TOL: f64 = 1e-10;

/// Outcome of `solve_omega`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GeoSolution {
    /// Calibrated gain in `[eps, eps/(1-eps)]`.
    pub omega: f64,
    /// Minimizing `y` in `[0, 1]`.
    pub y_star: f64,
    /// `min_y ||(y-1)e_0 + y*omega*e_1||` at the returned `omega`.
    pub min_value: f64,
    /// `|min_value - eps|`.
    pub residual: f64,
}

/// `min_y ||(y-1)e_0 + y*omega*e_1||` over real `y` in `[0, 1]`, together
/// with a minimizer. Flat minima resolve to the smallest minimizing `y`
/// found by the deterministic search.
pub fn min_over_y(omega: f64, norm: &dyn SequenceNorm) -> (f64, f64) {
    debug_assert!(omega >= 0.0);
    let f = |y: f64| {
        norm.eval_moduli(&[
            ScaledReal::from_f64((y - 1.0).abs()),
            ScaledReal::from_f64(y * omega),
        ])
        .to_f64()
    };
    let (y, value) = golden_min(f, 0.0, 1.0, DEFAULT_Y_TOL);
    (value, y)
}

/// Find `omega` in `[eps, eps/(1-eps)]` with
/// `min_y ||(y-1)e_0 + y*omega*e_1|| = eps` to within `tol`, by bisection on
/// the bracket. The bracket is valid because the minimum is `<= eps` at the
/// left endpoint and `>= eps` at the right one; endpoint values outside
/// those bounds beyond tolerance signal a broken norm and fail loudly.
pub fn solve_omega(eps: f64, norm: &dyn SequenceNorm, tol: f64) -> Result<GeoSolution> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidEps(eps));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let lo = eps;
    let hi = eps / (1.0 - eps);
    let g = |w: f64| min_over_y(w, norm).0;
    let g_lo = g(lo);
    let g_hi = g(hi);
    let slack = tol.max(1e-12);
    if g_lo - eps > slack || eps - g_hi > slack {
        return Err(Error::BracketViolation { lo, hi, g_lo, g_hi, target: eps });
    }
    let omega = if g_lo >= eps {
        lo
    } else if g_hi <= eps {
        hi
    } else {
        bisect(|w| g(w) - eps, lo, hi, 200)
    };
    let (min_value, y_star) = min_over_y(omega, norm);
    let residual = (min_value - eps).abs();
    if residual > tol {
        return Err(Error::ToleranceNotMet { residual, tol });
    }
    Ok(GeoSolution { omega, y_star, min_value, residual })
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Closed-form calibration for `lp` norms with `1 < p < oo`: solves
/// `omega / (1 + omega^(p/(p-1)))^((p-1)/p) = eps` for `omega` (the left
/// side is strictly increasing from 0 toward 1) and returns
/// `(omega, y)` with `y = 1 / (1 + omega^(p/(p-1)))`. Serves as the
/// independent oracle for `solve_omega`.
pub fn closed_form_omega(eps: f64, p: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidEps(eps));
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "closed form needs 1 < p < oo, got {p}"
        )));
    }
    let q = p / (p - 1.0);
    // log-domain evaluation keeps omega^q finite for any q
    let h = |w: f64| (w.ln() - softplus(q * w.ln()) / q).exp();
    let lo = eps;
    let hi = eps / (1.0 - eps);
    let omega = if h(hi) <= eps {
        hi
    } else {
        bisect(|w| h(w) - eps, lo, hi, 200)
    };
    let y = (-softplus(q * omega.ln())).exp();
    Ok((omega, y))
}
