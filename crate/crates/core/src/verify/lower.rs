//! The lower-bound sweep: no orbit point of `u` comes within relative
//! distance `delta` of a suitably scaled head vector.
//!
//! With `K` chosen so that `|K - u_{n,0}| * eps > delta * K` for every `n`,
//! and `v = (K e_0, 0, ...)`, the block structure forces
//! `||v - T^n u|| >= eps * |K - u_{n,0}|` at every power `n`. The sweep
//! evaluates the distances directly (both the full-block and mid-block
//! branches are exercised by whatever `n` hits) and reports the slack per
//! power plus the worst ratio `||v - T^n u|| / ||v||`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::OperatorT;
use crate::scaled::{Scaled, ScaledReal};
use crate::space::{CoeffVector, DirectSumVector};

/// Pick `K` with `|K - u_{n,0}| * eps > delta * K` for all `n`:
/// `K = 1` when every head coefficient vanishes, otherwise
/// `K = 2 M eps / (eps - delta)` with `M = max_n |u_{n,0}|`.
pub fn choose_k(u: &DirectSumVector, eps: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < eps) {
        return Err(Error::BadDelta { delta, eps });
    }
    let m = u
        .iter()
        .map(|(_, v)| v.coordinate(0).abs())
        .fold(ScaledReal::ZERO, |a, b| a.max_value(b))
        .to_f64();
    Ok(if m == 0.0 { 1.0 } else { 2.0 * m * eps / (eps - delta) })
}

/// Slack of one power: `||v - T^n u|| - eps * |K - u_{n,0}|`.
#[derive(Clone, Debug, Serialize)]
pub struct SlackRow {
    pub n: u64,
    /// `||v - T^n u||` (saturating above f64 range).
    pub distance: f64,
    /// `eps * |K - u_{n,0}|`.
    pub lower: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundResult {
    pub k_scalar: f64,
    pub horizon: u64,
    pub min_ratio: f64,
    #[serde(rename = "per_n_slack")]
    pub rows: Vec<SlackRow>,
    pub pass: bool,
}

/// Sweep `n = 1..=horizon` and check every slack against `-tol`.
pub fn lower_bound_check(
    op: &OperatorT,
    u: &DirectSumVector,
    delta: f64,
    horizon: u64,
    tol: f64,
) -> Result<LowerBoundResult> {
    let eps = op.eps();
    let k_scalar = choose_k(u, eps, delta)?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    let k_head = Scaled::from_real(k_scalar);
    let mut head = CoeffVector::new();
    head.set(0, k_head);
    let v = DirectSumVector::single_block(0, head);

    let eps_sr = ScaledReal::from_f64(eps);
    let mut rows = Vec::with_capacity(horizon as usize);
    let mut min_ratio = f64::INFINITY;
    let mut cur = u.clone();
    let mut all_pass = true;
    for n in 1..=horizon {
        cur = op.apply(&cur)?;
        let distance = op.norm_z(&v.sub(&cur));
        let head_n = u.head_coordinate(n);
        let lower = k_head.sub(head_n).abs().mul(eps_sr);
        let slack = distance.sub(lower);
        let pass = slack.cmp_value(&ScaledReal::from_f64(-tol)) != std::cmp::Ordering::Less;
        all_pass &= pass;
        let ratio = distance.div(ScaledReal::from_f64(k_scalar)).to_f64();
        min_ratio = min_ratio.min(ratio);
        rows.push(SlackRow {
            n,
            distance: distance.to_f64(),
            lower: lower.to_f64(),
            slack: slack.to_f64(),
            pass,
        });
    }
    let pass = all_pass && min_ratio > delta;
    Ok(LowerBoundResult { k_scalar, horizon, min_ratio, rows, pass })
}
