//! Construction and finite certificate checks for block-weighted shifts on
//! sequence-space direct sums.
//!
//! The crate builds block plans (calibrated weights whose full-block
//! products are the identity), applies the induced shift operator and its
//! powers to finitely supported vectors, and machine-checks the resulting
//! inequalities: approximation witnesses with relative error `eps`, a
//! lower-bound sweep showing no orbit point beats relative distance `delta`
//! below the threshold, and an interval coverage certificate on `lp:1`.
//!
//! Norms are strategy objects behind [`norm::SequenceNorm`], registered by
//! name ([`norm::registry`]) and selected at run time from CLI strings or
//! serialized specs. Coefficients use extended-exponent scalars
//! ([`scaled::Scaled`]) because weight products along a single block
//! overflow `f64` long before the block ends.

pub mod error;
pub mod geometry;
pub mod norm;
pub mod operator;
pub mod plan;
pub mod report;
pub mod sample;
pub mod scaled;
pub mod search;
pub mod space;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{closed_form_omega, min_over_y, solve_omega, GeoSolution};
pub use norm::{registry, NormRegistry, NormSpec, SequenceNorm};
pub use operator::OperatorT;
pub use plan::{constants, plan_blocks, BlockPlan, BlockRecord, Constants, WeightAction};
pub use scaled::{Scaled, ScaledReal};
pub use space::{coordinate, norm_x, norm_z, parse_vector_json, CoeffVector, DirectSumVector};
pub use verify::{
    build_witness, choose_k, criterion_report, l1_interval_report, lower_bound_check,
    CriterionReport, IntervalReport, LowerBoundResult, WitnessResult,
};
