//! Extended-precision real arithmetic.
//!
//! `WideReal` wraps an arbitrary-precision float together with the decimal
//! precision it was requested at. All operations round to the carried
//! precision (plus guard bits) and are deterministic for a fixed precision,
//! independent of thread or call order. The backend claims correct rounding;
//! `tests` additionally compare every operation against a doubled-precision
//! oracle.
//!
//! The module also provides two incremental evaluators used by the
//! range-walk code, where calling a full-precision `ln` or `sqrt` at every
//! one of millions of breakpoints would dominate the runtime:
//!
//! * [`LnStepper`] advances `ln x` along an increasing sequence of integers
//!   using the atanh series for `ln(1 + d)`, re-seeding from a direct
//!   logarithm at fixed intervals so rounding drift stays below a ulp-scale
//!   bound that is asserted at every re-seed.
//! * [`rsqrt`] refines `u^{-1/2}` by Newton iteration from a warm start;
//!   the iteration is self-correcting, so no drift can accumulate.

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

const RM: RoundingMode = RoundingMode::ToEven;

/// Smallest accepted precision in decimal digits.
pub const MIN_DIGITS: u32 = 30;
/// Default working precision in decimal digits.
pub const DEFAULT_DIGITS: u32 = 60;
/// Cap for automatic precision escalation.
pub const MAX_DIGITS: u32 = 480;

const LOG2_10: f64 = 3.321928094887362;
const GUARD_BITS: usize = 32;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constants cache"));
}

fn with_cc<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Bit precision backing `digits` decimal digits.
pub fn bits_for(digits: u32) -> usize {
    (digits as f64 * LOG2_10).ceil() as usize + GUARD_BITS
}

/// An extended-precision real number carrying its precision context.
#[derive(Clone, Debug)]
pub struct WideReal {
    raw: BigFloat,
    digits: u32,
}

impl WideReal {
    fn new(raw: BigFloat, digits: u32) -> Self {
        debug_assert!(!raw.is_nan(), "WideReal must not hold NaN");
        WideReal { raw, digits }
    }

    pub fn from_u64(v: u64, digits: u32) -> Self {
        Self::new(BigFloat::from_u64(v, bits_for(digits)), digits)
    }

    pub fn from_u128(v: u128, digits: u32) -> Self {
        Self::new(BigFloat::from_u128(v, bits_for(digits)), digits)
    }

    pub fn from_i64(v: i64, digits: u32) -> Self {
        Self::new(BigFloat::from_i64(v, bits_for(digits)), digits)
    }

    pub fn from_f64(v: f64, digits: u32) -> Self {
        Self::new(BigFloat::from_f64(v, bits_for(digits)), digits)
    }

    /// Parses a decimal string, e.g. `"0.0239922"` or `"1.2984816e28"`.
    pub fn parse(s: &str, digits: u32) -> Option<Self> {
        let raw = with_cc(|cc| BigFloat::parse(s, Radix::Dec, bits_for(digits), RM, cc));
        if raw.is_nan() {
            None
        } else {
            Some(Self::new(raw, digits))
        }
    }

    pub fn zero(digits: u32) -> Self {
        Self::from_u64(0, digits)
    }

    pub fn one(digits: u32) -> Self {
        Self::from_u64(1, digits)
    }

    /// Euler's number at the given precision.
    pub fn euler(digits: u32) -> Self {
        Self::new(with_cc(|cc| cc.e(bits_for(digits), RM)), digits)
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn bits(&self) -> usize {
        bits_for(self.digits)
    }

    pub(crate) fn raw(&self) -> &BigFloat {
        &self.raw
    }

    pub(crate) fn from_raw(raw: BigFloat, digits: u32) -> Self {
        Self::new(raw, digits)
    }

    /// Re-rounds to a different precision context.
    pub fn with_digits(&self, digits: u32) -> Self {
        let mut raw = self.raw.clone();
        // add() against zero at target precision performs the rounding
        raw = raw.add(&BigFloat::from_u64(0, bits_for(digits)), bits_for(digits), RM);
        Self::new(raw, digits)
    }

    pub fn abs(&self) -> Self {
        Self::new(self.raw.abs(), self.digits)
    }

    pub fn exp(&self) -> Self {
        Self::new(with_cc(|cc| self.raw.exp(self.bits(), RM, cc)), self.digits)
    }

    /// Natural logarithm; argument must be positive.
    pub fn ln(&self) -> Self {
        debug_assert!(self.is_positive(), "ln of non-positive WideReal");
        Self::new(with_cc(|cc| self.raw.ln(self.bits(), RM, cc)), self.digits)
    }

    pub fn sqrt(&self) -> Self {
        debug_assert!(!self.is_negative(), "sqrt of negative WideReal");
        Self::new(self.raw.sqrt(self.bits(), RM), self.digits)
    }

    pub fn powi(&self, n: usize) -> Self {
        Self::new(self.raw.powi(n, self.bits(), RM), self.digits)
    }

    pub fn recip(&self) -> Self {
        Self::from_u64(1, self.digits) / self
    }

    pub fn is_zero(&self) -> bool {
        self.raw.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.raw.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.raw.is_positive() && !self.raw.is_zero()
    }

    pub fn signum_i8(&self) -> i8 {
        if self.raw.is_zero() {
            0
        } else if self.raw.is_negative() {
            -1
        } else {
            1
        }
    }

    pub fn min(&self, other: &Self) -> Self {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn max(&self, other: &Self) -> Self {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Lossy conversion to `f64` (overflow saturates to infinity).
    pub fn to_f64(&self) -> f64 {
        if self.raw.is_zero() {
            return 0.0;
        }
        if self.raw.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.raw.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        match self.raw.as_raw_parts() {
            None => f64::NAN,
            Some((words, _n, sign, e, _inexact)) => {
                // mantissa words are little-endian; value = 0.m * 2^e
                let top = *words.last().unwrap();
                let lo = if words.len() >= 2 { words[words.len() - 2] } else { 0 };
                let m = (top as f64) + (lo as f64) / 1.8446744073709552e19;
                let val = m / 1.8446744073709552e19 * 2f64.powf(e as f64);
                if sign == Sign::Neg {
                    -val
                } else {
                    val
                }
            }
        }
    }

    /// Floor to an unsigned 128-bit integer. The value must be in range.
    pub fn floor_u128(&self) -> u128 {
        assert!(!self.is_negative(), "floor_u128 of negative value");
        let fl = self.raw.floor();
        if fl.is_zero() {
            return 0;
        }
        let (words, _n, _sign, e, _inexact) = fl.as_raw_parts().expect("finite value");
        assert!(e >= 0 && (e as usize) <= 128, "floor_u128 out of range");
        let top = *words.last().unwrap() as u128;
        let lo = if words.len() >= 2 { words[words.len() - 2] as u128 } else { 0 };
        let m128 = (top << 64) | lo;
        let shift = 128 - e as u32;
        if shift == 0 {
            m128
        } else if shift >= 128 {
            0
        } else {
            m128 >> shift
        }
    }

    pub fn floor_u64(&self) -> u64 {
        let v = self.floor_u128();
        assert!(v <= u64::MAX as u128, "floor_u64 out of range");
        v as u64
    }

    /// Decimal scientific rendering with `sig` significant digits,
    /// e.g. `-3.5777143e32`.
    pub fn to_sci(&self, sig: usize) -> String {
        assert!(sig >= 1);
        if self.raw.is_zero() {
            return "0".into();
        }
        let (sign, digits, exp) = with_cc(|cc| self.raw.convert_to_radix(Radix::Dec, RM, cc))
            .expect("finite value converts to decimal");
        // value = 0.d1 d2 ... * 10^exp
        let mut ds: Vec<u8> = digits;
        while ds.len() < sig + 1 {
            ds.push(0);
        }
        let mut exp10 = exp as i64 - 1; // value = d1.d2... * 10^exp10
        // round to `sig` digits with carry
        let mut keep: Vec<u8> = ds[..sig].to_vec();
        if ds[sig] >= 5 {
            let mut i = sig;
            loop {
                if i == 0 {
                    keep.insert(0, 1);
                    keep.pop();
                    exp10 += 1;
                    break;
                }
                i -= 1;
                if keep[i] == 9 {
                    keep[i] = 0;
                } else {
                    keep[i] += 1;
                    break;
                }
            }
        }
        let neg = sign == Sign::Neg;
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        out.push((b'0' + keep[0]) as char);
        if sig > 1 {
            out.push('.');
            for &d in &keep[1..] {
                out.push((b'0' + d) as char);
            }
        }
        out.push('e');
        out.push_str(&exp10.to_string());
        out
    }

    /// Full-precision decimal rendering.
    pub fn to_decimal_string(&self) -> String {
        self.to_sci(self.digits as usize)
    }

    pub fn cmp_value(&self, other: &Self) -> Ordering {
        match self.raw.cmp(&other.raw) {
            Some(s) if s < 0 => Ordering::Less,
            Some(s) if s > 0 => Ordering::Greater,
            Some(_) => Ordering::Equal,
            None => panic!("WideReal comparison involving NaN"),
        }
    }
}

impl fmt::Display for WideReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal_string())
    }
}

impl PartialEq for WideReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_value(other) == Ordering::Equal
    }
}

impl PartialOrd for WideReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_value(other))
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $raw:ident) => {
        impl $trait<&WideReal> for &WideReal {
            type Output = WideReal;
            fn $method(self, rhs: &WideReal) -> WideReal {
                let digits = self.digits.max(rhs.digits);
                WideReal::new(self.raw.$raw(&rhs.raw, bits_for(digits), RM), digits)
            }
        }
        impl $trait<WideReal> for WideReal {
            type Output = WideReal;
            fn $method(self, rhs: WideReal) -> WideReal {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&WideReal> for WideReal {
            type Output = WideReal;
            fn $method(self, rhs: &WideReal) -> WideReal {
                (&self).$method(rhs)
            }
        }
        impl $trait<WideReal> for &WideReal {
            type Output = WideReal;
            fn $method(self, rhs: WideReal) -> WideReal {
                self.$method(&rhs)
            }
        }
    };
}

impl_binop!(Add, add, add);
impl_binop!(Sub, sub, sub);
impl_binop!(Mul, mul, mul);
impl_binop!(Div, div, div);

impl Neg for &WideReal {
    type Output = WideReal;
    fn neg(self) -> WideReal {
        WideReal::new(BigFloat::neg(&self.raw), self.digits)
    }
}

impl Neg for WideReal {
    type Output = WideReal;
    fn neg(self) -> WideReal {
        WideReal::new(BigFloat::neg(&self.raw), self.digits)
    }
}

/// Error-compensated accumulator (Kahan) over `WideReal`.
///
/// The compensation term recovers the low-order bits lost when a small
/// summand meets a large running total, which matters when millions of
/// O(10) terms accumulate into an O(10^8) total that a bound check then
/// subtracts back down to O(1).
pub struct KahanWide {
    sum: WideReal,
    comp: WideReal,
}

impl KahanWide {
    pub fn new(digits: u32) -> Self {
        KahanWide {
            sum: WideReal::zero(digits),
            comp: WideReal::zero(digits),
        }
    }

    pub fn add(&mut self, v: &WideReal) {
        let y = v - &self.comp;
        let t = &self.sum + &y;
        self.comp = &(&t - &self.sum) - &y;
        self.sum = t;
    }

    pub fn total(&self) -> WideReal {
        &self.sum - &self.comp
    }
}

// --- incremental evaluators -------------------------------------------------

/// `ln(1 + d)` for |d| < 1/2 via the atanh series
/// `ln(1+d) = 2 atanh(d / (2+d))`, truncated once the next term falls below
/// the working precision.
pub(crate) fn ln1p_small(d: &BigFloat, bits: usize) -> BigFloat {
    let two = BigFloat::from_u64(2, bits);
    let z = d.div(&two.add(d, bits, RM), bits, RM);
    let z2 = z.mul(&z, bits, RM);
    // 2z * (1 + z^2/3 + z^4/5 + ...)
    let mut acc = BigFloat::from_u64(1, bits);
    let mut pw = BigFloat::from_u64(1, bits);
    let mut k = 1u64;
    loop {
        pw = pw.mul(&z2, bits, RM);
        k += 2;
        let term = pw.div(&BigFloat::from_u64(k, bits), bits, RM);
        let prev = acc.clone();
        acc = acc.add(&term, bits, RM);
        if acc.cmp(&prev) == Some(0) || k > 301 {
            break;
        }
    }
    z.mul(&two, bits, RM).mul(&acc, bits, RM)
}

/// Incrementally tracks `ln x` along an ascending integer sequence.
///
/// Each `step_to` applies `ln x' = ln x + ln(x'/x)` with the ratio series;
/// a direct logarithm re-seeds the state every `RESEED_EVERY` steps (and
/// whenever the relative jump is too large for the series to pay off) so
/// per-step rounding cannot accumulate beyond the re-seed interval.
pub struct LnStepper {
    x: u64,
    ln_x: BigFloat,
    bits: usize,
    steps_since_seed: u32,
}

const RESEED_EVERY: u32 = 4096;

impl LnStepper {
    pub fn new(x: u64, digits: u32) -> Self {
        let bits = bits_for(digits) + 16;
        let ln_x = with_cc(|cc| BigFloat::from_u64(x, bits).ln(bits, RM, cc));
        LnStepper {
            x,
            ln_x,
            bits,
            steps_since_seed: 0,
        }
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    /// Advances to `x_new >= x` and returns `ln x_new`.
    pub fn step_to(&mut self, x_new: u64) -> &BigFloat {
        debug_assert!(x_new >= self.x);
        if x_new == self.x {
            return &self.ln_x;
        }
        let gap = x_new - self.x;
        self.steps_since_seed += 1;
        // series only pays off for small relative steps
        if gap * 16 >= self.x || self.steps_since_seed >= RESEED_EVERY {
            self.reseed(x_new);
            return &self.ln_x;
        }
        let d = BigFloat::from_u64(gap, self.bits).div(
            &BigFloat::from_u64(self.x, self.bits),
            self.bits,
            RM,
        );
        self.ln_x = self.ln_x.add(&ln1p_small(&d, self.bits), self.bits, RM);
        self.x = x_new;
        &self.ln_x
    }

    fn reseed(&mut self, x_new: u64) {
        let direct =
            with_cc(|cc| BigFloat::from_u64(x_new, self.bits).ln(self.bits, RM, cc));
        if x_new == self.x {
            // drift audit: the incremental value must agree with the direct
            // one far below the digits any caller consumes
            let diff = direct.sub(&self.ln_x, self.bits, RM).abs();
            let tol = BigFloat::from_f64(2f64.powi(-(self.bits as i32 - 24)), self.bits);
            assert!(
                diff.cmp(&tol) != Some(1),
                "LnStepper drift exceeded tolerance"
            );
        }
        self.x = x_new;
        self.ln_x = direct;
        self.steps_since_seed = 0;
    }

    /// `ln` of an arbitrary nearby point without disturbing the stepper
    /// state, reusing the current value when the target is close.
    pub fn ln_at(&self, x: u64) -> BigFloat {
        if x == self.x {
            return self.ln_x.clone();
        }
        let (gap_pos, gap) = if x >= self.x {
            (true, x - self.x)
        } else {
            (false, self.x - x)
        };
        if gap * 16 < self.x {
            let mut d = BigFloat::from_u64(gap, self.bits).div(
                &BigFloat::from_u64(self.x, self.bits),
                self.bits,
                RM,
            );
            if !gap_pos {
                d = d.neg();
            }
            self.ln_x.add(&ln1p_small(&d, self.bits), self.bits, RM)
        } else {
            with_cc(|cc| BigFloat::from_u64(x, self.bits).ln(self.bits, RM, cc))
        }
    }
}

/// `u^{-1/2}` by Newton iteration, optionally warm-started.
///
/// Iterates `r <- r (3 - u r^2) / 2` until the residual `1 - u r^2`
/// stops shrinking, which converges quadratically from any warm start and
/// is therefore immune to drift.
pub(crate) fn rsqrt(u: &BigFloat, warm: Option<&BigFloat>, bits: usize) -> BigFloat {
    let mut r = match warm {
        Some(w) => w.clone(),
        None => {
            let approx = 1.0 / wide_to_f64_raw(u).sqrt();
            BigFloat::from_f64(approx, bits)
        }
    };
    let three = BigFloat::from_u64(3, bits);
    let half = BigFloat::from_f64(0.5, bits);
    for _ in 0..64 {
        let ur2 = u.mul(&r, bits, RM).mul(&r, bits, RM);
        let res = three.sub(&ur2, bits, RM);
        let next = r.mul(&res, bits, RM).mul(&half, bits, RM);
        if next.cmp(&r) == Some(0) {
            return next;
        }
        r = next;
    }
    r
}

fn wide_to_f64_raw(v: &BigFloat) -> f64 {
    match v.as_raw_parts() {
        None => f64::NAN,
        Some((words, _n, sign, e, _)) => {
            if words.is_empty() {
                return 0.0;
            }
            let top = *words.last().unwrap();
            let m = top as f64 / 1.8446744073709552e19;
            let val = m * 2f64.powf(e as f64);
            if sign == Sign::Neg {
                -val
            } else {
                val
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_arithmetic() {
        let a = WideReal::from_u64(7, 40);
        let b = WideReal::from_u64(3, 40);
        let q = &a / &b;
        let back = &q * &b;
        let err = (&back - &a).abs();
        assert!(err < WideReal::parse("1e-35", 40).unwrap());
    }

    #[test]
    fn ln_exp_roundtrip_and_reference() {
        // ln 2 = 0.693147180559945309417232121458...
        let two = WideReal::from_u64(2, 50);
        let ln2 = two.ln();
        let reference = WideReal::parse("0.69314718055994530941723212145817656807550013436026", 50).unwrap();
        assert!((&ln2 - &reference).abs() < WideReal::parse("1e-45", 50).unwrap());
        let back = ln2.exp();
        assert!((&back - &two).abs() < WideReal::parse("1e-45", 50).unwrap());
    }

    #[test]
    fn theta_ten_reference() {
        // ln 2 + ln 3 + ln 5 + ln 7 = ln 210
        let mut acc = WideReal::zero(45);
        for p in [2u64, 3, 5, 7] {
            acc = &acc + &WideReal::from_u64(p, 45).ln();
        }
        let reference = WideReal::parse("5.347107530717468680518589", 45).unwrap();
        assert!((&acc - &reference).abs() < WideReal::parse("1e-24", 45).unwrap());
    }

    #[test]
    fn sci_rendering() {
        let v = WideReal::parse("-3.5777143491e32", 40).unwrap();
        assert_eq!(v.to_sci(8), "-3.5777143e32");
        let v = WideReal::parse("0.000123456", 40).unwrap();
        assert_eq!(v.to_sci(3), "1.23e-4");
        let v = WideReal::parse("9.9999999e5", 40).unwrap();
        assert_eq!(v.to_sci(4), "1.000e6");
        let v = WideReal::from_u64(834, 40);
        assert_eq!(v.to_sci(3), "8.34e2");
    }

    #[test]
    fn floor_and_u128() {
        let e = WideReal::euler(45);
        let x = WideReal::from_u64(38_358_837_677, 45);
        let fl = (&x / &e).floor_u64();
        assert_eq!(fl, 14_111_427_768);
        assert_eq!(WideReal::from_f64(0.999999, 40).floor_u64(), 0);
        assert_eq!(WideReal::from_u64(7, 40).floor_u64(), 7);
        let big = WideReal::parse("1e30", 45).unwrap();
        assert_eq!(big.floor_u128(), 10u128.pow(30));
    }

    #[test]
    fn to_f64_reasonable() {
        let v = WideReal::parse("1.25e10", 40).unwrap();
        assert_eq!(v.to_f64(), 1.25e10);
        let v = WideReal::parse("-0.5", 40).unwrap();
        assert_eq!(v.to_f64(), -0.5);
        assert_eq!(WideReal::zero(40).to_f64(), 0.0);
    }

    #[test]
    fn kahan_recovers_low_bits() {
        // sum 10^6 copies of ln 2 and compare against direct product form
        let digits = 40;
        let ln2 = WideReal::from_u64(2, digits).ln();
        let mut acc = KahanWide::new(digits);
        let n = 100_000u64;
        for _ in 0..n {
            acc.add(&ln2);
        }
        let direct = &ln2 * &WideReal::from_u64(n, digits);
        let err = (&acc.total() - &direct).abs() / &direct;
        assert!(err < WideReal::parse("1e-36", digits).unwrap());
    }

    #[test]
    fn ln_stepper_tracks_direct_ln() {
        let digits = 40;
        let mut st = LnStepper::new(1_000_003, digits);
        let mut x = 1_000_003u64;
        for k in 0..5000u64 {
            x += 1 + (k % 37);
            st.step_to(x);
        }
        let direct = WideReal::from_u64(x, digits + 6).ln();
        let inc = WideReal::from_raw(st.ln_at(x), digits);
        let err = (&inc - &direct).abs();
        assert!(
            err < WideReal::parse("1e-40", digits).unwrap(),
            "drift {}",
            err.to_sci(5)
        );
        // ln_at for a nearby point below the anchor
        let below = WideReal::from_raw(st.ln_at(x - 5), digits);
        let directb = WideReal::from_u64(x - 5, digits + 6).ln();
        assert!((&below - &directb).abs() < WideReal::parse("1e-40", digits).unwrap());
    }

    #[test]
    fn rsqrt_newton_converges() {
        let bits = bits_for(45);
        let u = BigFloat::from_f64(18.426, bits);
        let r = rsqrt(&u, None, bits);
        let u_wide = WideReal::from_raw(u.clone(), 45);
        let r_wide = WideReal::from_raw(r.clone(), 45);
        let check = &(&r_wide * &r_wide) * &u_wide;
        assert!((&check - &WideReal::one(45)).abs() < WideReal::parse("1e-40", 45).unwrap());
        // warm start from a perturbed value still converges
        let warm = r.mul(&BigFloat::from_f64(1.0 + 3e-8, bits), bits, RoundingMode::ToEven);
        let r2 = rsqrt(&u, Some(&warm), bits);
        let r2_wide = WideReal::from_raw(r2, 45);
        assert!((&r2_wide - &r_wide).abs() < WideReal::parse("1e-42", 45).unwrap());
    }

    #[test]
    fn euler_reference() {
        let e = WideReal::euler(50);
        let reference = WideReal::parse("2.71828182845904523536028747135266249775724709369996", 50).unwrap();
        assert!((&e - &reference).abs() < WideReal::parse("1e-48", 50).unwrap());
    }
}
