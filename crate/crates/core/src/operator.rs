//! The block-weighted shift on the direct sum.
//!
//! `apply` sends `(u_0, u_1, ...)` to `(A_1 u_1, A_2 u_2, ...)`: block 0 is
//! discarded and every other block is pushed down one slot through its
//! weight. Powers can be evaluated two ways — stepwise iteration, or
//! composing the closed-form partial-block products (full blocks are the
//! identity, so any weight range collapses to at most two partial blocks).
//! Both paths must agree and the tests hold them to that.
//!
//! Touching a weight beyond the plan is a hard error rather than a silent
//! extension: growing the plan mid-orbit would change the stretch choices.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::norm::{NormSpec, SequenceNorm};
use crate::plan::BlockPlan;
use crate::sample::{random_direct_sum, rng_from_seed};
use crate::scaled::ScaledReal;
use crate::space::{CoeffVector, DirectSumVector};

/// Cost threshold above which power evaluation switches to composed
/// partial-block products.
const COMPOSE_THRESHOLD: u128 = 200_000;

pub struct OperatorT {
    plan: BlockPlan,
    spec_y: NormSpec,
    norm_x: Arc<dyn SequenceNorm>,
    norm_y: Arc<dyn SequenceNorm>,
}

impl OperatorT {
    pub fn new(plan: BlockPlan, spec_y: NormSpec) -> Result<Self> {
        let norm_x = plan.spec_x.resolve()?;
        let norm_y = spec_y.resolve()?;
        Ok(OperatorT { plan, spec_y, norm_x, norm_y })
    }

    pub fn plan(&self) -> &BlockPlan {
        &self.plan
    }

    pub fn spec_y(&self) -> NormSpec {
        self.spec_y
    }

    pub fn norm_x(&self) -> &dyn SequenceNorm {
        self.norm_x.as_ref()
    }

    pub fn norm_y(&self) -> &dyn SequenceNorm {
        self.norm_y.as_ref()
    }

    pub fn eps(&self) -> f64 {
        self.plan.eps
    }

    pub fn kappa(&self) -> f64 {
        self.plan.kappa
    }

    pub fn norm_block(&self, v: &CoeffVector) -> ScaledReal {
        v.norm(self.norm_x.as_ref())
    }

    pub fn norm_z(&self, u: &DirectSumVector) -> ScaledReal {
        u.norm(self.norm_x.as_ref(), self.norm_y.as_ref())
    }

    fn check_range(&self, u: &DirectSumVector) -> Result<()> {
        if let Some(max) = u.max_block() {
            if max > self.plan.end_index() {
                return Err(Error::PlanRange { n: max, max: self.plan.end_index() });
            }
        }
        Ok(())
    }

    /// One application: block `n` of the output is `A_{n+1} u_{n+1}`.
    pub fn apply(&self, u: &DirectSumVector) -> Result<DirectSumVector> {
        self.check_range(u)?;
        let mut out = DirectSumVector::new();
        for (n, v) in u.iter() {
            if n == 0 {
                continue;
            }
            let w = self.plan.weight(n)?;
            out.set_block(n - 1, w.apply(v));
        }
        Ok(out)
    }

    /// `T^n` by stepwise iteration.
    pub fn apply_pow_iterative(&self, u: &DirectSumVector, n: u64) -> Result<DirectSumVector> {
        let mut cur = u.clone();
        for _ in 0..n {
            cur = self.apply(&cur)?;
            if cur.is_zero() {
                break;
            }
        }
        Ok(cur)
    }

    /// `T^n` by composing weight products per block: block `j` of the
    /// output is `A_{j+1} ... A_{j+n} u_{j+n}`.
    pub fn apply_pow_composed(&self, u: &DirectSumVector, n: u64) -> Result<DirectSumVector> {
        self.check_range(u)?;
        if n == 0 {
            return Ok(u.clone());
        }
        let mut out = DirectSumVector::new();
        for (b, v) in u.iter() {
            if b < n {
                continue;
            }
            let target = b - n;
            out.set_block(target, self.plan.product_apply(target + 1, b, v)?);
        }
        Ok(out)
    }

    /// `T^n`, routing to whichever evaluation is cheaper.
    pub fn apply_pow(&self, u: &DirectSumVector, n: u64) -> Result<DirectSumVector> {
        let cost = n as u128 * u.entry_count().max(1) as u128;
        if cost > COMPOSE_THRESHOLD {
            self.apply_pow_composed(u, n)
        } else {
            self.apply_pow_iterative(u, n)
        }
    }

    /// Sample `||T u|| / ||u||` over random finitely supported vectors and
    /// return the largest ratio observed. Stays below `kappa` for a correct
    /// plan.
    pub fn check_bound(&self, samples: usize, seed: u64) -> Result<f64> {
        if samples == 0 {
            return Err(Error::InvalidArgument("need at least one sample".into()));
        }
        let mut rng = rng_from_seed(seed);
        let end = self.plan.end_index();
        let mut worst = 0f64;
        for _ in 0..samples {
            let hi_block = 1 + rng.gen_range(0..end);
            let u = random_direct_sum(&mut rng, hi_block, 4, 30, 5, 2.0);
            if u.is_zero() {
                continue;
            }
            let image = self.apply(&u)?;
            let ratio = self.norm_z(&image).div(self.norm_z(&u)).to_f64();
            worst = worst.max(ratio);
        }
        Ok(worst)
    }
}
