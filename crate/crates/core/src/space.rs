//! Finitely supported coefficient vectors and their block direct sums.
//!
//! A `CoeffVector` is a sparse map index -> complex coefficient; a
//! `DirectSumVector` is a sparse map block index -> `CoeffVector`. Iteration
//! is always in ascending index order, so norms and serialized reports are
//! reproducible bit for bit. Exact zeros are never stored, which is what
//! makes shift annihilation an exact emptiness check rather than a tolerance
//! comparison.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::norm::SequenceNorm;
use crate::scaled::{Scaled, ScaledReal};

/// Finitely supported vector of complex coefficients.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoeffVectorJson", into = "CoeffVectorJson")]
pub struct CoeffVector {
    entries: BTreeMap<u64, Scaled>,
}

impl CoeffVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// The canonical basis vector `e_i`.
    pub fn basis(i: u64) -> Self {
        let mut v = Self::new();
        v.set(i, Scaled::from_real(1.0));
        v
    }

    pub fn from_f64_entries(entries: &[(u64, f64, f64)]) -> Self {
        let mut v = Self::new();
        for &(i, re, im) in entries {
            v.set(i, Scaled::from_complex(re, im));
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn max_index(&self) -> Option<u64> {
        self.entries.keys().next_back().copied()
    }

    pub fn set(&mut self, i: u64, value: Scaled) {
        if value.is_zero() {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, value);
        }
    }

    pub fn add_entry(&mut self, i: u64, value: Scaled) {
        let cur = self.coordinate(i);
        self.set(i, cur.add(value));
    }

    /// The stored coefficient at `i`, or zero.
    pub fn coordinate(&self, i: u64) -> Scaled {
        self.entries.get(&i).copied().unwrap_or(Scaled::ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &Scaled)> {
        self.entries.iter().map(|(i, c)| (*i, c))
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (i, c) in o.iter() {
            out.add_entry(i, *c);
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (i, c) in o.iter() {
            out.add_entry(i, c.neg());
        }
        out
    }

    pub fn scale_real(&self, s: ScaledReal) -> Self {
        let mut out = Self::new();
        for (i, c) in self.iter() {
            out.set(i, c.scale_real(s));
        }
        out
    }

    pub fn scale_f64(&self, s: f64) -> Self {
        self.scale_real(ScaledReal::from_f64(s))
    }

    /// Drop entries with modulus strictly below `threshold`.
    pub fn prune(&mut self, threshold: f64) {
        let bound = ScaledReal::from_f64(threshold);
        self.entries
            .retain(|_, c| c.abs().cmp_value(&bound) != std::cmp::Ordering::Less);
    }

    pub fn moduli(&self) -> Vec<ScaledReal> {
        self.entries.values().map(|c| c.abs()).collect()
    }

    pub fn norm(&self, norm: &dyn SequenceNorm) -> ScaledReal {
        norm.eval_moduli(&self.moduli())
    }
}

/// Finitely supported element of the block direct sum.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VectorJson", into = "VectorJson")]
pub struct DirectSumVector {
    blocks: BTreeMap<u64, CoeffVector>,
}

impl DirectSumVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single_block(n: u64, v: CoeffVector) -> Self {
        let mut u = Self::new();
        u.set_block(n, v);
        u
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn max_block(&self) -> Option<u64> {
        self.blocks.keys().next_back().copied()
    }

    pub fn block(&self, n: u64) -> Option<&CoeffVector> {
        self.blocks.get(&n)
    }

    pub fn set_block(&mut self, n: u64, v: CoeffVector) {
        if v.is_zero() {
            self.blocks.remove(&n);
        } else {
            self.blocks.insert(n, v);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &CoeffVector)> {
        self.blocks.iter().map(|(n, v)| (*n, v))
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn entry_count(&self) -> usize {
        self.blocks.values().map(|v| v.support_len()).sum()
    }

    /// Coefficient `e_0^*(u_n)` of block `n`.
    pub fn head_coordinate(&self, n: u64) -> Scaled {
        self.block(n).map(|v| v.coordinate(0)).unwrap_or(Scaled::ZERO)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (n, v) in o.iter() {
            let merged = match out.block(n) {
                Some(cur) => cur.add(v),
                None => v.clone(),
            };
            out.set_block(n, merged);
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (n, v) in o.iter() {
            let merged = match out.block(n) {
                Some(cur) => cur.sub(v),
                None => CoeffVector::new().sub(v),
            };
            out.set_block(n, merged);
        }
        out
    }

    pub fn scale_f64(&self, s: f64) -> Self {
        let mut out = Self::new();
        for (n, v) in self.iter() {
            out.set_block(n, v.scale_f64(s));
        }
        out
    }

    pub fn norm(&self, norm_x: &dyn SequenceNorm, norm_y: &dyn SequenceNorm) -> ScaledReal {
        let profile: Vec<ScaledReal> = self.blocks.values().map(|v| v.norm(norm_x)).collect();
        norm_y.eval_moduli(&profile)
    }
}

/// Norm of a coefficient vector under the given norm.
pub fn norm_x(v: &CoeffVector, norm: &dyn SequenceNorm) -> ScaledReal {
    v.norm(norm)
}

/// Direct-sum norm: per-block norms under `norm_x`, then the profile norm
/// under `norm_y`.
pub fn norm_z(
    u: &DirectSumVector,
    norm_x: &dyn SequenceNorm,
    norm_y: &dyn SequenceNorm,
) -> ScaledReal {
    u.norm(norm_x, norm_y)
}

/// Coordinate functional `e_i^*`.
pub fn coordinate(v: &CoeffVector, i: u64) -> Scaled {
    v.coordinate(i)
}

// ---------------------------------------------------------------------------
// JSON forms
//
// Wire schema: {"blocks":[{"n":0,"coeffs":[{"i":0,"re":1.0,"im":0.0}]}]};
// a bare CoeffVector is {"coeffs":[...]}, i.e. the same with one implicit
// block. Coefficients outside plain f64 range carry an extra binary exponent
// "e2"; in-range values round-trip exactly without it.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CoeffEntryJson {
    i: u64,
    re: f64,
    im: f64,
    #[serde(default, skip_serializing_if = "exp_is_zero")]
    e2: i64,
}

fn exp_is_zero(e: &i64) -> bool {
    *e == 0
}

#[derive(Serialize, Deserialize)]
struct CoeffVectorJson {
    coeffs: Vec<CoeffEntryJson>,
}

#[derive(Serialize, Deserialize)]
struct BlockJson {
    n: u64,
    coeffs: Vec<CoeffEntryJson>,
}

#[derive(Serialize, Deserialize)]
struct VectorJson {
    blocks: Vec<BlockJson>,
}

fn encode_entry(i: u64, c: &Scaled) -> CoeffEntryJson {
    let e = c.exponent();
    if (-900..=900).contains(&e) {
        let (re, im) = c.to_complex();
        CoeffEntryJson { i, re, im, e2: 0 }
    } else {
        let (re, im) = c.mantissa();
        CoeffEntryJson { i, re, im, e2: e }
    }
}

fn decode_entry(entry: &CoeffEntryJson) -> Result<Scaled, String> {
    if !entry.re.is_finite() || !entry.im.is_finite() {
        return Err(format!("non-finite coefficient at index {}", entry.i));
    }
    Ok(Scaled::new(entry.re, entry.im, entry.e2))
}

impl From<CoeffVector> for CoeffVectorJson {
    fn from(v: CoeffVector) -> Self {
        CoeffVectorJson {
            coeffs: v.iter().map(|(i, c)| encode_entry(i, c)).collect(),
        }
    }
}

impl TryFrom<CoeffVectorJson> for CoeffVector {
    type Error = String;

    fn try_from(j: CoeffVectorJson) -> Result<Self, String> {
        let mut v = CoeffVector::new();
        for entry in &j.coeffs {
            let c = decode_entry(entry)?;
            v.add_entry(entry.i, c);
        }
        Ok(v)
    }
}

impl From<DirectSumVector> for VectorJson {
    fn from(u: DirectSumVector) -> Self {
        VectorJson {
            blocks: u
                .iter()
                .map(|(n, v)| BlockJson {
                    n,
                    coeffs: v.iter().map(|(i, c)| encode_entry(i, c)).collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<VectorJson> for DirectSumVector {
    type Error = String;

    fn try_from(j: VectorJson) -> Result<Self, String> {
        let mut u = DirectSumVector::new();
        for block in &j.blocks {
            let mut v = match u.block(block.n) {
                Some(existing) => existing.clone(),
                None => CoeffVector::new(),
            };
            for entry in &block.coeffs {
                let c = decode_entry(entry)?;
                v.add_entry(entry.i, c);
            }
            u.set_block(block.n, v);
        }
        Ok(u)
    }
}

/// Parse a vector file in either form: `{"blocks":[...]}` or a bare
/// `{"coeffs":[...]}` treated as block 0.
pub fn parse_vector_json(text: &str) -> crate::error::Result<DirectSumVector> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("blocks").is_some() {
        Ok(serde_json::from_value(value)?)
    } else if value.get("coeffs").is_some() {
        let v: CoeffVector = serde_json::from_value(value)?;
        Ok(DirectSumVector::single_block(0, v))
    } else {
        Err(crate::error::Error::InvalidArgument(
            "vector json needs a 'blocks' or 'coeffs' field".to_string(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::{LpNorm, NormSpec, SupNorm};
    use proptest::prelude::*;

    fn lp(p: f64) -> LpNorm {
        LpNorm::new(p).unwrap()
    }

    #[test]
    fn norm_x_examples() {
        let l2 = lp(2.0);
        assert_eq!(CoeffVector::new().norm(&l2).to_f64(), 0.0);
        let v = CoeffVector::from_f64_entries(&[(0, 3.0, 0.0), (1, 4.0, 0.0)]);
        assert!((v.norm(&l2).to_f64() - 5.0).abs() < 1e-14);
        let w = CoeffVector::from_f64_entries(&[(0, 1.0, 0.0), (5, -1.0, 0.0)]);
        assert!((w.norm(&lp(1.0)).to_f64() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn norm_z_examples() {
        let l1 = lp(1.0);
        let l2 = lp(2.0);
        assert_eq!(DirectSumVector::new().norm(&l1, &l1).to_f64(), 0.0);

        let mut u = DirectSumVector::new();
        u.set_block(0, CoeffVector::basis(0));
        u.set_block(1, CoeffVector::basis(0));
        assert!((u.norm(&l1, &l1).to_f64() - 2.0).abs() < 1e-15);

        let mut w = DirectSumVector::new();
        w.set_block(0, CoeffVector::from_f64_entries(&[(0, 3.0, 0.0), (1, 4.0, 0.0)]));
        assert!((w.norm(&l2, &l2).to_f64() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn coordinate_examples() {
        let v = CoeffVector::from_f64_entries(&[(0, 2.0, 1.0)]);
        let c = v.coordinate(0).to_complex();
        assert_eq!(c, (2.0, 1.0));
        assert!(CoeffVector::new().coordinate(7).is_zero());
        let w = CoeffVector::from_f64_entries(&[(3, -1.0, 0.0)]);
        assert_eq!(w.coordinate(3).to_complex(), (-1.0, 0.0));
    }

    #[test]
    fn exact_cancellation_empties_support() {
        let v = CoeffVector::from_f64_entries(&[(2, 1.5, -0.25)]);
        assert!(v.sub(&v).is_zero());
        let u = DirectSumVector::single_block(4, v);
        assert!(u.sub(&u).is_zero());
    }

    #[test]
    fn prune_drops_small_entries() {
        let mut v = CoeffVector::from_f64_entries(&[(0, 1.0, 0.0), (1, 1e-14, 0.0)]);
        v.prune(1e-12);
        assert_eq!(v.support_len(), 1);
        assert!((v.coordinate(0).to_complex().0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_schema_matches_wire_format() {
        let mut u = DirectSumVector::new();
        u.set_block(1, CoeffVector::from_f64_entries(&[(0, 1.0, 0.0), (2, 0.5, -1.0)]));
        let j = serde_json::to_string(&u).unwrap();
        assert_eq!(
            j,
            r#"{"blocks":[{"n":1,"coeffs":[{"i":0,"re":1.0,"im":0.0},{"i":2,"re":0.5,"im":-1.0}]}]}"#
        );
        let back: DirectSumVector = serde_json::from_str(&j).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn json_extended_exponent_round_trip() {
        let mut v = CoeffVector::new();
        v.set(3, Scaled::new(1.25, -1.0, -50_000));
        let j = serde_json::to_string(&v).unwrap();
        assert!(j.contains("e2"));
        let back: CoeffVector = serde_json::from_str(&j).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn bare_coeff_vector_is_block_zero() {
        let u = parse_vector_json(r#"{"coeffs":[{"i":1,"re":2.0,"im":0.0}]}"#).unwrap();
        assert_eq!(u.max_block(), Some(0));
        assert_eq!(u.block(0).unwrap().coordinate(1).to_complex(), (2.0, 0.0));
        assert!(parse_vector_json(r#"{"coeffs":[{"i":1,"re":1e999,"im":0.0}]}"#).is_err());
    }

    fn arb_coeff_vector(max_index: u64, len: usize) -> impl Strategy<Value = CoeffVector> {
        proptest::collection::vec(
            (0..=max_index, -5.0f64..5.0, -5.0f64..5.0),
            0..=len,
        )
        .prop_map(|entries| CoeffVector::from_f64_entries(&entries))
    }

    proptest! {
        #[test]
        fn one_unconditionality(v in arb_coeff_vector(20, 8), shrink in proptest::collection::vec(0.0f64..=1.0, 21)) {
            for spec in [NormSpec::Lp { p: 1.0 }, NormSpec::Lp { p: 2.0 }, NormSpec::Lp { p: 3.5 }, NormSpec::Sup] {
                let norm = spec.resolve().unwrap();
                let mut w = CoeffVector::new();
                for (i, c) in v.iter() {
                    w.set(i, c.scale_f64(shrink[i as usize]));
                }
                let nv = v.norm(norm.as_ref());
                let nw = w.norm(norm.as_ref());
                prop_assert!(nw.le_with_tol(&nv, 1e-12 * nv.to_f64().max(1.0)));
            }
        }

        #[test]
        fn coordinate_bound(v in arb_coeff_vector(20, 8), i in 0u64..=20) {
            for spec in [NormSpec::Lp { p: 1.0 }, NormSpec::Lp { p: 2.0 }, NormSpec::Sup] {
                let norm = spec.resolve().unwrap();
                let c = v.coordinate(i).abs();
                prop_assert!(c.le_with_tol(&v.norm(norm.as_ref()), 1e-12));
            }
        }

        #[test]
        fn triangle_and_homogeneity(
            a in arb_coeff_vector(12, 6),
            b in arb_coeff_vector(12, 6),
            s in -4.0f64..4.0,
        ) {
            for spec in [NormSpec::Lp { p: 1.0 }, NormSpec::Lp { p: 2.0 }, NormSpec::Lp { p: 1.7 }, NormSpec::Sup] {
                let norm = spec.resolve().unwrap();
                let na = a.norm(norm.as_ref()).to_f64();
                let nb = b.norm(norm.as_ref()).to_f64();
                let nsum = a.add(&b).norm(norm.as_ref()).to_f64();
                prop_assert!(nsum <= na + nb + 1e-10 * (na + nb).max(1.0));
                let nscaled = a.scale_f64(s).norm(norm.as_ref()).to_f64();
                prop_assert!((nscaled - s.abs() * na).abs() <= 1e-10 * (s.abs() * na).max(1.0));
            }
        }

        #[test]
        fn block_projection_bound(
            v0 in arb_coeff_vector(10, 5),
            v1 in arb_coeff_vector(10, 5),
            n in 0u64..4,
        ) {
            let mut u = DirectSumVector::new();
            u.set_block(0, v0);
            u.set_block(3, v1);
            for spec in [NormSpec::Lp { p: 1.0 }, NormSpec::Lp { p: 2.0 }, NormSpec::Sup] {
                let norm = spec.resolve().unwrap();
                let total = u.norm(norm.as_ref(), norm.as_ref());
                let block = u.block(n).map(|b| b.norm(norm.as_ref())).unwrap_or(ScaledReal::ZERO);
                prop_assert!(block.le_with_tol(&total, 1e-12));
            }
        }

        #[test]
        fn vector_json_round_trip(v in arb_coeff_vector(16, 10)) {
            let u = DirectSumVector::single_block(2, v);
            let j = serde_json::to_string(&u).unwrap();
            let back: DirectSumVector = serde_json::from_str(&j).unwrap();
            prop_assert_eq!(back, u);
        }
    }
}
