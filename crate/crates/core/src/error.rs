use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEps(f64),
    #[error("invalid norm: {0}")]
    InvalidNorm(String),
    #[error("bracket violation while solving for omega on [{lo}, {hi}]: g(lo) = {g_lo}, g(hi) = {g_hi}, target {target}; the norm implementation is suspect")]
    BracketViolation {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
        target: f64,
    },
    #[error("residual {residual} exceeds tolerance {tol}")]
    ToleranceNotMet { residual: f64, tol: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("weight index {n} is outside the plan (valid range 1..={max})")]
    PlanRange { n: u64, max: u64 },
    #[error("plan has {have} blocks but the operation needs {need}")]
    PlanTooSmall { need: usize, have: usize },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("inadmissible target: {0}")]
    BadTarget(String),
    #[error("delta must satisfy 0 < delta < eps, got delta = {delta}, eps = {eps}")]
    BadDelta { delta: f64, eps: f64 },
    #[error("operation requires X = Y = lp:1, got {0}")]
    NotL1(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
