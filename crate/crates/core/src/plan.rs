//! Block plans: the per-block weight pattern and its product structure.
//!
//! A plan lays out consecutive blocks `k = 1..K`. Block `k` starts after
//! index `m_k`, runs for `r_k + k + 1` weights, and ends at
//! `m_{k+1} = m_k + r_k + k + 1`. Within the block, each weight `A_n` fixes
//! `e_0`, acts on `e_k` through a five-row pattern (inject `e_0 + omega*e_k`,
//! double for `r_k - 1` steps, hold, shrink by `2^-(r_k-1)`, then close with
//! `-e_0/omega + e_k/omega`), and scales every other basis vector by
//! `lambda`, except the closing weight which undoes the accumulated
//! `lambda^(r_k+k)`. Three structural facts carry everything downstream:
//!
//! * each weight is invertible with norm at most `kappa`;
//! * the product over a full block is the identity;
//! * partial products along the block have closed forms (the forward and
//!   inverse tables below), so long-range products collapse to at most two
//!   partial blocks.
//!
//! The stretch `r_k` is chosen as the smallest integer making two decay
//! bounds small enough (`<= 1/k^2`) for the approximation step that later
//! consumes the plan; both decay geometrically, so the choice is total.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::solve_omega;
use crate::norm::NormSpec;
use crate::scaled::{Scaled, ScaledReal};
use crate::space::CoeffVector;

/// The plan-wide constants derived from `eps`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Constants {
    pub eps: f64,
    pub lambda: f64,
    pub kappa: f64,
}

/// `lambda = 3 / (eps*(1-eps))`, `kappa = (1+lambda) + max(1 + eps/(1-eps), 2/eps)`.
pub fn constants(eps: f64) -> Result<Constants> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidEps(eps));
    }
    let lambda = 3.0 / (eps * (1.0 - eps));
    let kappa = (1.0 + lambda) + (1.0 + eps / (1.0 - eps)).max(2.0 / eps);
    debug_assert!(lambda >= 12.0 - 1e-9);
    Ok(Constants { eps, lambda, kappa })
}

/// One block of the plan.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BlockRecord {
    /// Block number, 1-based.
    pub k: u32,
    /// Start offset: the block's weights are `A_{m+1} ..= A_{m+r+k+1}`.
    pub m: u64,
    /// Doubling-stretch length, always >= 2.
    pub r: u64,
    /// Calibrated gain for this block's two-dimensional action.
    pub omega: f64,
    /// Minimizer of `y -> ||(y-1)e_0 + y*omega*e_k||`.
    pub y: f64,
}

impl BlockRecord {
    /// Index of the last weight in this block, `m_{k+1}`.
    pub fn end(&self) -> u64 {
        self.m + self.r + self.k as u64 + 1
    }
}

/// Full construction state for blocks `1..=K`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockPlan {
    pub eps: f64,
    pub lambda: f64,
    pub kappa: f64,
    #[serde(rename = "specX")]
    pub spec_x: NormSpec,
    pub blocks: Vec<BlockRecord>,
}

/// Where a weight index `j - m_k` falls inside block `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Row {
    Open,
    Double,
    Hold,
    Shrink,
    Close,
}

fn row_of(j: u64, r: u64, k: u32) -> Row {
    let k = k as u64;
    debug_assert!(j >= 1 && j <= r + k + 1);
    if j == 1 {
        Row::Open
    } else if j <= r {
        Row::Double
    } else if j <= r + k - 1 {
        Row::Hold
    } else if j == r + k {
        Row::Shrink
    } else {
        Row::Close
    }
}

/// One weight's structured action: `e_0` is fixed, `e_k` maps to
/// `a*e_0 + b*e_k`, every other basis vector is scaled by `scalar_other`.
#[derive(Clone, Debug)]
pub struct WeightAction {
    /// Weight index.
    pub n: u64,
    /// Owning block.
    pub k: u32,
    /// Offset inside the block, `n - m_k`.
    pub j: u64,
    pub ek_coeff_e0: ScaledReal,
    pub ek_coeff_ek: ScaledReal,
    pub scalar_other: ScaledReal,
}

impl WeightAction {
    /// Image of `e_0` (always `e_0` itself).
    pub fn image_e0(&self) -> CoeffVector {
        CoeffVector::basis(0)
    }

    /// Image of `e_k` as a coefficient vector.
    pub fn image_ek(&self) -> CoeffVector {
        let mut v = CoeffVector::new();
        v.set(0, Scaled::from_scaled_real(self.ek_coeff_e0));
        v.set(self.k as u64, Scaled::from_scaled_real(self.ek_coeff_ek));
        v
    }

    /// Apply the weight to a coefficient vector.
    pub fn apply(&self, v: &CoeffVector) -> CoeffVector {
        let k = self.k as u64;
        let mut out = CoeffVector::new();
        for (i, c) in v.iter() {
            if i == 0 {
                out.add_entry(0, *c);
            } else if i == k {
                out.add_entry(0, c.scale_real(self.ek_coeff_e0));
                out.add_entry(k, c.scale_real(self.ek_coeff_ek));
            } else {
                out.add_entry(i, c.scale_real(self.scalar_other));
            }
        }
        out
    }

    /// Apply the inverse: solve the 2x2 system on `span(e_0, e_k)` and
    /// divide elsewhere.
    pub fn apply_inverse(&self, v: &CoeffVector) -> CoeffVector {
        let k = self.k as u64;
        let mut out = CoeffVector::new();
        let wk = v.coordinate(k).div_real(self.ek_coeff_ek);
        for (i, c) in v.iter() {
            if i == 0 {
                out.add_entry(0, *c);
            } else if i == k {
                // handled below
            } else {
                out.add_entry(i, c.div_real(self.scalar_other));
            }
        }
        if !wk.is_zero() {
            out.add_entry(0, wk.scale_real(self.ek_coeff_e0).neg());
            out.add_entry(k, wk);
        }
        out
    }
}

/// Decay bound for the plain substitution step: `k*((k-1)*lambda^-r + 2^(1-r))`.
fn s1(k: u32, lambda: ScaledReal, r: u64) -> ScaledReal {
    let kf = ScaledReal::from_f64(k as f64);
    let a = ScaledReal::from_f64((k - 1) as f64).mul(lambda.powi(-(r as i64)));
    let b = ScaledReal::two_pow(1 - r as i64);
    kf.mul(a.add(b))
}

/// Decay bound for the offset substitution step:
/// `k*((k-1)*lambda^-r + wbar*2^m*lambda^-r + 3*lambda^(m-1)*2^(1-r))`.
fn s2(k: u32, lambda: ScaledReal, omega_bar: f64, m: u64, r: u64) -> ScaledReal {
    let kf = ScaledReal::from_f64(k as f64);
    let lam_neg_r = lambda.powi(-(r as i64));
    let a = ScaledReal::from_f64((k - 1) as f64).mul(lam_neg_r);
    let b = ScaledReal::from_f64(omega_bar)
        .mul(ScaledReal::two_pow(m as i64))
        .mul(lam_neg_r);
    let c = ScaledReal::from_f64(3.0)
        .mul(lambda.powi(m as i64 - 1))
        .mul(ScaledReal::two_pow(1 - r as i64));
    kf.mul(a.add(b).add(c))
}

fn stretch_ok(k: u32, lambda: ScaledReal, omega_bar: f64, m: u64, r: u64) -> bool {
    let budget = ScaledReal::from_f64(1.0 / (k as f64 * k as f64));
    let le = |x: ScaledReal| x.cmp_value(&budget) != std::cmp::Ordering::Greater;
    le(s1(k, lambda, r)) && le(s2(k, lambda, omega_bar, m, r))
}

/// Smallest `r >= floor` with both decay bounds under `1/k^2`.
fn minimal_stretch(k: u32, lambda: ScaledReal, omega_bar: f64, m: u64, floor: u64) -> u64 {
    let lo = floor.max(2);
    if stretch_ok(k, lambda, omega_bar, m, lo) {
        return lo;
    }
    let mut hi = lo.max(1) * 2;
    while !stretch_ok(k, lambda, omega_bar, m, hi) {
        hi *= 2;
    }
    // monotone predicate: binary search the threshold in (lo, hi]
    let (mut bad, mut good) = (lo, hi);
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if stretch_ok(k, lambda, omega_bar, m, mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// Build a plan with `count` blocks. `r_min` entries `(k, bound)` force
/// block `k`'s stretch to be at least `bound`.
pub fn plan_blocks(
    eps: f64,
    spec_x: NormSpec,
    count: usize,
    r_min: &[(u32, u64)],
    tol: f64,
) -> Result<BlockPlan> {
    if count == 0 {
        return Err(Error::InvalidArgument("a plan needs at least one block".into()));
    }
    let consts = constants(eps)?;
    let norm = spec_x.resolve()?;
    // the norm is symmetric across coordinates, so one calibration serves
    // every block
    let geo = solve_omega(eps, norm.as_ref(), tol)?;
    let omega_bar = eps / (1.0 - eps);
    let lambda = ScaledReal::from_f64(consts.lambda);
    let mut blocks = Vec::with_capacity(count);
    let mut m = 0u64;
    for k in 1..=count as u32 {
        let floor = r_min
            .iter()
            .filter(|(kk, _)| *kk == k)
            .map(|(_, b)| *b)
            .max()
            .unwrap_or(0);
        let r = minimal_stretch(k, lambda, omega_bar, m, floor);
        blocks.push(BlockRecord { k, m, r, omega: geo.omega, y: geo.y_star });
        m += r + k as u64 + 1;
    }
    Ok(BlockPlan {
        eps,
        lambda: consts.lambda,
        kappa: consts.kappa,
        spec_x,
        blocks,
    })
}

impl BlockPlan {
    pub fn build(
        eps: f64,
        spec_x: NormSpec,
        count: usize,
        r_min: &[(u32, u64)],
        tol: f64,
    ) -> Result<Self> {
        plan_blocks(eps, spec_x, count, r_min, tol)
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Block record for block `k` (1-based).
    pub fn block(&self, k: u32) -> Result<&BlockRecord> {
        if k == 0 || k as usize > self.blocks.len() {
            return Err(Error::PlanTooSmall { need: k as usize, have: self.blocks.len() });
        }
        Ok(&self.blocks[k as usize - 1])
    }

    /// `m_{K+1}`: the largest weight index the plan defines.
    pub fn end_index(&self) -> u64 {
        self.blocks.last().map(|b| b.end()).unwrap_or(0)
    }

    /// Block owning weight index `n` (`m_k < n <= m_{k+1}`).
    pub fn owner_of_weight(&self, n: u64) -> Result<&BlockRecord> {
        if n == 0 || n > self.end_index() {
            return Err(Error::PlanRange { n, max: self.end_index() });
        }
        let idx = self.blocks.partition_point(|b| b.m < n);
        Ok(&self.blocks[idx - 1])
    }

    /// Largest block `l` with `m_l <= j` (cap at the last block).
    pub fn owner_of_position(&self, j: u64) -> &BlockRecord {
        let idx = self.blocks.partition_point(|b| b.m <= j);
        &self.blocks[idx.saturating_sub(1).min(self.blocks.len() - 1)]
    }

    /// Whether `n` equals some block start `m_k`.
    pub fn is_block_start(&self, n: u64) -> bool {
        self.blocks.iter().any(|b| b.m == n)
    }

    /// The structured action of `A_n`.
    pub fn weight(&self, n: u64) -> Result<WeightAction> {
        let b = self.owner_of_weight(n)?;
        let j = n - b.m;
        let (r, k) = (b.r, b.k);
        let omega = ScaledReal::from_f64(b.omega);
        let lambda = ScaledReal::from_f64(self.lambda);
        let (e0, ek) = match row_of(j, r, k) {
            Row::Open => (ScaledReal::ONE, omega),
            Row::Double => (ScaledReal::ZERO, ScaledReal::two_pow(1)),
            Row::Hold => (ScaledReal::ZERO, ScaledReal::ONE),
            Row::Shrink => (ScaledReal::ZERO, ScaledReal::two_pow(-(r as i64 - 1))),
            Row::Close => (omega.recip().neg(), omega.recip()),
        };
        let scalar_other = if row_of(j, r, k) == Row::Close {
            lambda.powi(-((r + k as u64) as i64))
        } else {
            lambda
        };
        Ok(WeightAction { n, k, j, ek_coeff_e0: e0, ek_coeff_ek: ek, scalar_other })
    }

    /// Closed form of `A_{m_k+1} ... A_{m_k+j} e_k` as `(e0, ek)` coefficients.
    pub(crate) fn forward_ek(&self, k: u32, j: u64) -> Result<(ScaledReal, ScaledReal)> {
        let b = self.block(k)?;
        let (r, kk) = (b.r, b.k);
        if j == 0 {
            return Ok((ScaledReal::ZERO, ScaledReal::ONE));
        }
        if j > r + kk as u64 + 1 {
            return Err(Error::InvalidArgument(format!(
                "offset {j} outside block {k} (length {})",
                r + kk as u64 + 1
            )));
        }
        let omega = ScaledReal::from_f64(b.omega);
        Ok(match row_of(j, r, kk) {
            Row::Open => (ScaledReal::ONE, omega),
            Row::Double => {
                let scale = ScaledReal::two_pow(j as i64 - 1);
                (scale, omega.mul(scale))
            }
            Row::Hold => {
                let scale = ScaledReal::two_pow(r as i64 - 1);
                (scale, omega.mul(scale))
            }
            Row::Shrink => (ScaledReal::ONE, omega),
            Row::Close => (ScaledReal::ZERO, ScaledReal::ONE),
        })
    }

    /// Closed form of `A_{m_k+j}^-1 ... A_{m_k+1}^-1 e_k`.
    pub(crate) fn inverse_ek(&self, k: u32, j: u64) -> Result<(ScaledReal, ScaledReal)> {
        let b = self.block(k)?;
        let (r, kk) = (b.r, b.k);
        if j == 0 {
            return Ok((ScaledReal::ZERO, ScaledReal::ONE));
        }
        if j > r + kk as u64 + 1 {
            return Err(Error::InvalidArgument(format!(
                "offset {j} outside block {k} (length {})",
                r + kk as u64 + 1
            )));
        }
        let w_inv = ScaledReal::from_f64(b.omega).recip();
        Ok(match row_of(j, r, kk) {
            Row::Open => (w_inv.neg(), w_inv),
            Row::Double => (w_inv.neg(), w_inv.mul(ScaledReal::two_pow(-(j as i64 - 1)))),
            Row::Hold => (w_inv.neg(), w_inv.mul(ScaledReal::two_pow(-(r as i64 - 1)))),
            Row::Shrink => (w_inv.neg(), w_inv),
            Row::Close => (ScaledReal::ZERO, ScaledReal::ONE),
        })
    }

    /// `A_{m_k+1} ... A_{m_k+j} e_k` as a coefficient vector.
    pub fn forward_product(&self, k: u32, j: u64) -> Result<CoeffVector> {
        if j == 0 {
            return Err(Error::InvalidArgument("offset must be >= 1".into()));
        }
        let (a, b) = self.forward_ek(k, j)?;
        let mut v = CoeffVector::new();
        v.set(0, Scaled::from_scaled_real(a));
        v.set(k as u64, Scaled::from_scaled_real(b));
        Ok(v)
    }

    /// `A_{m_k+j}^-1 ... A_{m_k+1}^-1 e_k` as a coefficient vector.
    pub fn inverse_product(&self, k: u32, j: u64) -> Result<CoeffVector> {
        if j == 0 {
            return Err(Error::InvalidArgument("offset must be >= 1".into()));
        }
        let (a, b) = self.inverse_ek(k, j)?;
        let mut v = CoeffVector::new();
        v.set(0, Scaled::from_scaled_real(a));
        v.set(k as u64, Scaled::from_scaled_real(b));
        Ok(v)
    }

    /// `e_k` column of the segment product `A_{m_k+s} ... A_{m_k+t}`
    /// restricted to `span(e_0, e_k)`, via the closed-form tables:
    /// the segment equals `(P_{s-1})^-1 P_t` for prefix products `P_j`.
    fn segment_ek(&self, k: u32, s: u64, t: u64) -> Result<(ScaledReal, ScaledReal)> {
        debug_assert!(1 <= s && s <= t);
        let (a2, b2) = self.forward_ek(k, t)?;
        if s == 1 {
            return Ok((a2, b2));
        }
        let (a1, b1) = self.forward_ek(k, s - 1)?;
        let b = b2.div(b1);
        let a = a2.sub(a1.mul(b));
        Ok((a, b))
    }

    /// Scalar this segment applies to every `e_l`, `l` not in `{0, k}`.
    fn segment_other(&self, k: u32, s: u64, t: u64) -> Result<ScaledReal> {
        let b = self.block(k)?;
        let len = (t - s + 1) as i64;
        let lambda = ScaledReal::from_f64(self.lambda);
        let closes = t == b.r + b.k as u64 + 1;
        let exponent = if closes {
            len - 1 - (b.r + b.k as u64) as i64
        } else {
            len
        };
        Ok(lambda.powi(exponent))
    }

    /// Apply `A_lo ... A_hi` (rightmost factor first) to a coefficient
    /// vector by composing closed-form partial-block products. Full blocks
    /// inside the range are the identity and are skipped.
    pub fn product_apply(&self, lo: u64, hi: u64, v: &CoeffVector) -> Result<CoeffVector> {
        if lo > hi {
            return Ok(v.clone());
        }
        let max = self.end_index();
        if lo == 0 || hi > max {
            return Err(Error::PlanRange { n: if lo == 0 { 0 } else { hi }, max });
        }
        let first = self.owner_of_weight(lo)?.k;
        let last = self.owner_of_weight(hi)?.k;
        let mut cur = v.clone();
        for k in (first..=last).rev() {
            let b = self.block(k)?;
            let seg_lo = lo.max(b.m + 1);
            let seg_hi = hi.min(b.end());
            let s = seg_lo - b.m;
            let t = seg_hi - b.m;
            if s == 1 && t == b.r + b.k as u64 + 1 {
                continue; // full block: identity
            }
            let (a, bb) = self.segment_ek(k, s, t)?;
            let other = self.segment_other(k, s, t)?;
            let kx = k as u64;
            let mut out = CoeffVector::new();
            for (i, c) in cur.iter() {
                if i == 0 {
                    out.add_entry(0, *c);
                } else if i == kx {
                    out.add_entry(0, c.scale_real(a));
                    out.add_entry(kx, c.scale_real(bb));
                } else {
                    out.add_entry(i, c.scale_real(other));
                }
            }
            cur = out;
        }
        Ok(cur)
    }

    /// Canonical compact JSON used for hashing and interchange.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("plan serialization cannot fail")
    }

    pub fn sha256(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_json_string().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let plan: BlockPlan = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    /// Re-check every structural invariant; used on every load.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidPlan(msg));
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return fail(format!("eps {} outside (0, 1)", self.eps));
        }
        let consts = constants(self.eps)?;
        if (self.lambda - consts.lambda).abs() > 1e-9 * consts.lambda {
            return fail(format!("lambda {} does not match eps {}", self.lambda, self.eps));
        }
        if (self.kappa - consts.kappa).abs() > 1e-9 * consts.kappa {
            return fail(format!("kappa {} does not match eps {}", self.kappa, self.eps));
        }
        self.spec_x.validate()?;
        if self.blocks.is_empty() {
            return fail("plan has no blocks".into());
        }
        let omega_bar = self.eps / (1.0 - self.eps);
        let lambda = ScaledReal::from_f64(self.lambda);
        let mut expect_m = 0u64;
        for (idx, b) in self.blocks.iter().enumerate() {
            if b.k as usize != idx + 1 {
                return fail(format!("block numbers must be consecutive, found {} at {}", b.k, idx));
            }
            if b.m != expect_m {
                return fail(format!("block {} starts at {} but the recurrence gives {}", b.k, b.m, expect_m));
            }
            if b.r < 2 {
                return fail(format!("block {} stretch {} below 2", b.k, b.r));
            }
            if !(b.omega >= self.eps - 1e-9 && b.omega <= omega_bar + 1e-9) {
                return fail(format!("block {} omega {} outside [eps, eps/(1-eps)]", b.k, b.omega));
            }
            if !(-1e-9..=1.0 + 1e-9).contains(&b.y) {
                return fail(format!("block {} minimizer y {} outside [0, 1]", b.k, b.y));
            }
            if !stretch_ok(b.k, lambda, omega_bar, b.m, b.r) {
                return fail(format!("block {} stretch {} violates the decay bounds", b.k, b.r));
            }
            expect_m = b.end();
        }
        Ok(())
    }
}
