//! Extended-range scalars: a double-precision mantissa paired with a
//! separate binary exponent.
//!
//! Weight products along a single block reach magnitudes like `lambda^r`
//! with `r` in the hundreds of thousands, far outside what `f64` can hold.
//! Values here are kept as `mantissa * 2^exp` with an `i64` exponent, so
//! products, sums and norms stay finite and comparable at every scale a
//! block plan can produce. Doubling and halving only shift the exponent and
//! are exact; mantissas are renormalized after every operation.

use std::cmp::Ordering;
use std::fmt;

/// Exponent gap beyond which the smaller addend is under one ulp of the
/// larger one and is dropped during addition.
const ALIGN_CUTOFF: i64 = 1000;

/// `2^e` for `e` in the normal range of `f64`.
#[inline]
fn exp2i(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e), "exp2i out of range: {e}");
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// `x * 2^s`, chunked so each factor stays a normal number. Exact whenever
/// the result is in the normal range.
fn mul_pow2(mut x: f64, mut s: i64) -> f64 {
    while s != 0 && x != 0.0 && x.is_finite() {
        let step = s.clamp(-1000, 1000);
        x *= exp2i(step);
        s -= step;
    }
    x
}

/// Split a finite `x` into `(m, e)` with `x = m * 2^e` and `|m|` in `[1, 2)`.
fn split(x: f64) -> (f64, i64) {
    if x == 0.0 {
        return (0.0, 0);
    }
    debug_assert!(x.is_finite(), "cannot split non-finite value {x}");
    let bits = x.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal input: promote into the normal range first
        let (m, e) = split(x * exp2i(200));
        return (m, e - 200);
    }
    let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1023u64 << 52));
    (m, raw - 1023)
}

/// Reassemble `m * 2^e` as a plain `f64`, clamping instead of producing
/// infinities: values beyond range come back as `±f64::MAX`, values below
/// range as signed zero.
fn assemble_saturating(m: f64, e: i64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    if e > 1200 {
        return f64::MAX.copysign(m);
    }
    if e < -1200 {
        return 0.0f64.copysign(m);
    }
    let v = mul_pow2(m, e);
    if v.is_infinite() {
        f64::MAX.copysign(m)
    } else {
        v
    }
}

/// Signed real `m * 2^e` with `|m|` in `[1, 2)`, or exactly zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledReal {
    m: f64,
    e: i64,
}

impl ScaledReal {
    pub const ZERO: ScaledReal = ScaledReal { m: 0.0, e: 0 };
    pub const ONE: ScaledReal = ScaledReal { m: 1.0, e: 0 };

    pub fn new(m: f64, e: i64) -> Self {
        if m == 0.0 {
            return Self::ZERO;
        }
        let (mm, de) = split(m);
        ScaledReal { m: mm, e: e + de }
    }

    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite scalar: {x}");
        Self::new(x, 0)
    }

    /// Exact power of two.
    pub fn two_pow(e: i64) -> Self {
        ScaledReal { m: 1.0, e }
    }

    pub fn is_zero(&self) -> bool {
        self.m == 0.0
    }

    pub fn is_negative(&self) -> bool {
        self.m < 0.0
    }

    pub fn mantissa(&self) -> f64 {
        self.m
    }

    pub fn exponent(&self) -> i64 {
        self.e
    }

    pub fn abs(self) -> Self {
        ScaledReal { m: self.m.abs(), e: self.e }
    }

    pub fn neg(self) -> Self {
        if self.is_zero() {
            Self::ZERO
        } else {
            ScaledReal { m: -self.m, e: self.e }
        }
    }

    pub fn mul(self, o: Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.m * o.m, self.e + o.e)
    }

    pub fn div(self, o: Self) -> Self {
        assert!(!o.is_zero(), "scaled division by zero");
        if self.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.m / o.m, self.e - o.e)
    }

    pub fn recip(self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        Self::new(1.0 / self.m, -self.e)
    }

    pub fn add(self, o: Self) -> Self {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let (hi, lo) = if self.e >= o.e { (self, o) } else { (o, self) };
        let gap = hi.e - lo.e;
        if gap > ALIGN_CUTOFF {
            return hi;
        }
        Self::new(hi.m + mul_pow2(lo.m, -gap), hi.e)
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    /// Integer power by repeated squaring.
    pub fn powi(self, n: i64) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        if self.is_zero() {
            assert!(n > 0, "zero to a non-positive power");
            return Self::ZERO;
        }
        let mut base = self;
        let mut k = n.unsigned_abs();
        let mut acc = Self::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(base);
            }
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    /// Real power of a nonnegative value. The fractional part of `p * e`
    /// folds into the mantissa so the exponent stays integral.
    pub fn powf(self, p: f64) -> Self {
        debug_assert!(self.m >= 0.0, "powf of a negative value");
        if self.is_zero() {
            debug_assert!(p > 0.0);
            return Self::ZERO;
        }
        if p == 1.0 {
            return self;
        }
        if p == 2.0 {
            return self.mul(self);
        }
        let pe = p * self.e as f64;
        let fl = pe.floor();
        Self::new(self.m.powf(p) * (pe - fl).exp2(), fl as i64)
    }

    pub fn cmp_value(&self, o: &Self) -> Ordering {
        let sa = if self.is_zero() { 0 } else if self.m < 0.0 { -1 } else { 1 };
        let sb = if o.is_zero() { 0 } else if o.m < 0.0 { -1 } else { 1 };
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        let mag = if self.e != o.e {
            self.e.cmp(&o.e)
        } else {
            self.m.abs().partial_cmp(&o.m.abs()).unwrap()
        };
        if sa > 0 {
            mag
        } else {
            mag.reverse()
        }
    }

    pub fn max_value(self, o: Self) -> Self {
        if self.cmp_value(&o) == Ordering::Less {
            o
        } else {
            self
        }
    }

    /// `self <= o + tol` with `tol` a plain `f64`.
    pub fn le_with_tol(&self, o: &Self, tol: f64) -> bool {
        self.cmp_value(&o.add(ScaledReal::from_f64(tol))) != Ordering::Greater
    }

    pub fn to_f64(&self) -> f64 {
        assemble_saturating(self.m, self.e)
    }

    pub fn log2_abs(&self) -> Option<f64> {
        if self.is_zero() {
            None
        } else {
            Some(self.m.abs().log2() + self.e as f64)
        }
    }
}

impl fmt::Display for ScaledReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if (-900..=900).contains(&self.e) {
            write!(f, "{}", self.to_f64())
        } else {
            write!(f, "{}*2^{}", self.m, self.e)
        }
    }
}

/// Complex scalar `(re + i*im) * 2^e` with `max(|re|, |im|)` in `[1, 2)`,
/// or exactly zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    re: f64,
    im: f64,
    e: i64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { re: 0.0, im: 0.0, e: 0 };

    pub fn new(re: f64, im: f64, e: i64) -> Self {
        if re == 0.0 && im == 0.0 {
            return Self::ZERO;
        }
        debug_assert!(re.is_finite() && im.is_finite());
        let h = re.abs().max(im.abs());
        let (_, he) = split(h);
        Scaled {
            re: mul_pow2(re, -he),
            im: mul_pow2(im, -he),
            e: e + he,
        }
    }

    pub fn from_complex(re: f64, im: f64) -> Self {
        assert!(re.is_finite() && im.is_finite(), "non-finite coefficient ({re}, {im})");
        Self::new(re, im, 0)
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_complex(x, 0.0)
    }

    pub fn from_scaled_real(x: ScaledReal) -> Self {
        Scaled { re: x.mantissa(), im: 0.0, e: x.exponent() }
    }

    pub fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    pub fn mantissa(&self) -> (f64, f64) {
        (self.re, self.im)
    }

    pub fn exponent(&self) -> i64 {
        self.e
    }

    pub fn add(self, o: Self) -> Self {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let (hi, lo) = if self.e >= o.e { (self, o) } else { (o, self) };
        let gap = hi.e - lo.e;
        if gap > ALIGN_CUTOFF {
            return hi;
        }
        Self::new(
            hi.re + mul_pow2(lo.re, -gap),
            hi.im + mul_pow2(lo.im, -gap),
            hi.e,
        )
    }

    pub fn neg(self) -> Self {
        if self.is_zero() {
            Self::ZERO
        } else {
            Scaled { re: -self.re, im: -self.im, e: self.e }
        }
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    pub fn scale_real(self, s: ScaledReal) -> Self {
        if self.is_zero() || s.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.re * s.mantissa(), self.im * s.mantissa(), self.e + s.exponent())
    }

    pub fn scale_f64(self, s: f64) -> Self {
        self.scale_real(ScaledReal::from_f64(s))
    }

    pub fn div_real(self, s: ScaledReal) -> Self {
        self.scale_real(s.recip())
    }

    pub fn abs(&self) -> ScaledReal {
        if self.is_zero() {
            ScaledReal::ZERO
        } else {
            ScaledReal::new(self.re.hypot(self.im), self.e)
        }
    }

    pub fn re_part(&self) -> ScaledReal {
        ScaledReal::new(self.re, self.e)
    }

    pub fn im_part(&self) -> ScaledReal {
        ScaledReal::new(self.im, self.e)
    }

    /// Saturating conversion to a plain complex pair.
    pub fn to_complex(&self) -> (f64, f64) {
        (
            assemble_saturating(self.re, self.e),
            assemble_saturating(self.im, self.e),
        )
    }

    pub fn dist(&self, o: &Self) -> ScaledReal {
        self.sub(*o).abs()
    }
}

impl fmt::Display for Scaled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if (-900..=900).contains(&self.e) {
            let (re, im) = self.to_complex();
            write!(f, "{re}{im:+}i")
        } else {
            write!(f, "({}{:+}i)*2^{}", self.re, self.im, self.e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn split_reassembles_exactly() {
        for x in [1.0, -3.5, 0.001, 12.0, f64::MAX, f64::MIN_POSITIVE, 2.0f64.powi(-1060)] {
            let (m, e) = split(x);
            assert!(m == 0.0 || (1.0..2.0).contains(&m.abs()), "mantissa {m}");
            assert_eq!(mul_pow2(m, e), x);
        }
        assert_eq!(split(0.0), (0.0, 0));
    }

    #[test]
    fn two_pow_is_exact() {
        let x = ScaledReal::two_pow(100_000);
        let y = x.mul(ScaledReal::two_pow(-100_000));
        assert_eq!(y, ScaledReal::ONE);
    }

    #[test]
    fn powi_matches_repeated_multiplication() {
        let lam = ScaledReal::from_f64(12.0);
        let mut acc = ScaledReal::ONE;
        for _ in 0..37 {
            acc = acc.mul(lam);
        }
        let fast = lam.powi(37);
        let rel = acc.sub(fast).abs().div(acc.abs()).to_f64();
        assert!(rel < 1e-13, "rel error {rel}");
        // inverse round trip at a scale far beyond f64
        let big = lam.powi(300_000);
        let round = big.mul(lam.powi(-300_000));
        let err = round.sub(ScaledReal::ONE).abs().to_f64();
        assert!(err < 1e-9, "round-trip error {err}");
    }

    #[test]
    fn powf_agrees_with_f64_in_range() {
        for x in [0.3, 1.7, 42.0] {
            for p in [1.0, 1.5, 2.0, 3.0] {
                let got = ScaledReal::from_f64(x).powf(p).to_f64();
                let want = x.powf(p);
                assert!((got - want).abs() <= 1e-14 * want.abs(), "{x}^{p}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn add_drops_terms_below_alignment() {
        let big = ScaledReal::two_pow(5000);
        let small = ScaledReal::ONE;
        assert_eq!(big.add(small), big);
        assert_eq!(small.add(big), big);
    }

    #[test]
    fn cmp_value_orders_across_scales() {
        let a = ScaledReal::from_f64(3.0);
        let b = ScaledReal::two_pow(90);
        let c = ScaledReal::from_f64(-1.0);
        assert_eq!(a.cmp_value(&b), Ordering::Less);
        assert_eq!(b.cmp_value(&a), Ordering::Greater);
        assert_eq!(c.cmp_value(&a), Ordering::Less);
        assert_eq!(a.cmp_value(&a), Ordering::Equal);
        assert_eq!(ScaledReal::ZERO.cmp_value(&c), Ordering::Greater);
    }

    #[test]
    fn to_f64_saturates() {
        assert_eq!(ScaledReal::two_pow(4000).to_f64(), f64::MAX);
        assert_eq!(ScaledReal::two_pow(-4000).to_f64(), 0.0);
        assert_eq!(ScaledReal::two_pow(4000).neg().to_f64(), -f64::MAX);
    }

    #[test]
    fn complex_abs_and_parts() {
        let z = Scaled::from_complex(3.0, -4.0);
        assert!((z.abs().to_f64() - 5.0).abs() < 1e-15);
        assert!((z.re_part().to_f64() - 3.0).abs() < 1e-15);
        assert!((z.im_part().to_f64() + 4.0).abs() < 1e-15);
    }

    #[test]
    fn complex_cancellation_is_exact() {
        let w = 0.57735026918962573f64;
        let a = Scaled::from_real(-1.0 / w);
        let b = Scaled::from_real(1.0 / w);
        assert!(a.add(b).is_zero());
    }

    proptest! {
        #[test]
        fn from_f64_roundtrips(x in -1e300f64..1e300) {
            prop_assume!(x.is_finite());
            let s = ScaledReal::from_f64(x);
            prop_assert_eq!(s.to_f64(), x);
        }

        #[test]
        fn add_commutes(a in -1e12f64..1e12, b in -1e12f64..1e12, ea in -600i64..600, eb in -600i64..600) {
            let x = ScaledReal::new(a, ea);
            let y = ScaledReal::new(b, eb);
            prop_assert_eq!(x.add(y), y.add(x));
        }

        #[test]
        fn mul_div_roundtrip(a in 1e-6f64..1e6, b in 1e-6f64..1e6, ea in -9000i64..9000) {
            let x = ScaledReal::new(a, ea);
            let y = ScaledReal::from_f64(b);
            let back = x.mul(y).div(y);
            let rel = back.sub(x).abs().div(x.abs()).to_f64();
            prop_assert!(rel < 1e-14);
        }

        #[test]
        fn complex_scale_matches_plain(re in -10.0f64..10.0, im in -10.0f64..10.0, s in -10.0f64..10.0) {
            prop_assume!(s != 0.0 && (re != 0.0 || im != 0.0));
            let z = Scaled::from_complex(re, im).scale_f64(s);
            let (zr, zi) = z.to_complex();
            prop_assert!((zr - re * s).abs() <= 1e-12 * (re * s).abs().max(1e-300));
            prop_assert!((zi - im * s).abs() <= 1e-12 * (im * s).abs().max(1e-300));
        }
    }
}
