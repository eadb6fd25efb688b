//! Certificate checks: the approximation witnesses, the lower-bound sweep,
//! and the interval coverage argument on `lp:1`.

mod intervals;
mod lower;
mod witness;

pub use intervals::{l1_interval_report, IntervalReport, IntervalRow, IntervalStatus};
pub use lower::{choose_k, lower_bound_check, LowerBoundResult, SlackRow};
pub use witness::{
    assemble_criterion_report, build_witness, criterion_report, AnnihilationCheck,
    CriterionReport, WitnessResult,
};
