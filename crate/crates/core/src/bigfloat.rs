//! Binary floating point with an arbitrary-size mantissa.
//!
//! A value is `mant · 2^exp` where `|mant|` carries at most `prec` bits.
//! Every result is rounded to nearest (ties away from zero) and stored with
//! trailing zero bits stripped, so equal values have identical
//! representations and `==` compares bit patterns.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{Float, One, Signed, ToPrimitive, Zero};

/// Smallest working precision accepted anywhere in the crate.
pub const MIN_PRECISION: u32 = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BigFloat {
    mant: BigInt,
    exp: i64,
    prec: u32,
}

fn round_shift(mag: &BigUint, shift: u64) -> BigUint {
    if shift == 0 {
        return mag.clone();
    }
    let half = BigUint::one() << (shift - 1);
    (mag + half) >> shift
}

impl BigFloat {
    pub fn zero(prec: u32) -> Self {
        Self {
            mant: BigInt::zero(),
            exp: 0,
            prec,
        }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_int(1, prec)
    }

    pub fn from_int(v: i64, prec: u32) -> Self {
        Self::from_parts(BigInt::from(v), 0, prec)
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> Self {
        Self::from_parts(v.clone(), 0, prec)
    }

    /// `2^e` exactly.
    pub fn pow2(e: i64, prec: u32) -> Self {
        Self::from_parts(BigInt::one(), e, prec)
    }

    /// Exact conversion of a finite `f64` (then rounded to `prec`).
    pub fn from_f64(v: f64, prec: u32) -> Self {
        assert!(v.is_finite(), "BigFloat::from_f64 on non-finite value");
        let (m, e, s) = v.integer_decode();
        let mant = BigInt::from(m) * i64::from(s);
        Self::from_parts(mant, i64::from(e), prec)
    }

    /// Rounds `mant · 2^exp` to `prec` bits.
    pub fn from_parts(mant: BigInt, exp: i64, prec: u32) -> Self {
        if mant.is_zero() {
            return Self::zero(prec);
        }
        let (sign, mut mag) = (mant.sign(), mant.magnitude().clone());
        let mut exp = exp;
        let bits = mag.bits();
        if bits > u64::from(prec) {
            let shift = bits - u64::from(prec);
            mag = round_shift(&mag, shift);
            exp += shift as i64;
        }
        let tz = mag.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            mag >>= tz;
            exp += tz as i64;
        }
        Self {
            mant: BigInt::from_biguint(sign, mag),
            exp,
            prec,
        }
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Same value re-rounded to a new precision.
    pub fn with_precision(&self, prec: u32) -> Self {
        Self::from_parts(self.mant.clone(), self.exp, prec)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn abs(&self) -> Self {
        Self {
            mant: self.mant.abs(),
            exp: self.exp,
            prec: self.prec,
        }
    }

    /// Position one past the most significant bit, i.e. `floor(log2|x|) + 1`.
    /// `None` for zero.
    pub fn magnitude_bits(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exp + self.mant.bits() as i64)
        }
    }

    fn top(&self) -> i64 {
        self.magnitude_bits().unwrap_or(i64::MIN)
    }

    fn add_impl(&self, other: &Self, negate_other: bool) -> Self {
        let prec = self.prec.min(other.prec);
        let b_mant = if negate_other {
            -other.mant.clone()
        } else {
            other.mant.clone()
        };
        if other.is_zero() {
            return self.with_precision(prec);
        }
        if self.is_zero() {
            return Self::from_parts(b_mant, other.exp, prec);
        }
        // An operand entirely below the rounding position of the other only
        // matters for ties, which we ignore.
        let guard = i64::from(prec) + 2;
        if self.top() - other.top() > guard {
            return self.with_precision(prec);
        }
        if other.top() - self.top() > guard {
            return Self::from_parts(b_mant, other.exp, prec);
        }
        let exp = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - exp) as u64;
        let b = b_mant << (other.exp - exp) as u64;
        Self::from_parts(a + b, exp, prec)
    }

    fn mul_impl(&self, other: &Self) -> Self {
        let prec = self.prec.min(other.prec);
        Self::from_parts(&self.mant * &other.mant, self.exp + other.exp, prec)
    }

    fn div_impl(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "BigFloat division by zero");
        let prec = self.prec.min(other.prec);
        if self.is_zero() {
            return Self::zero(prec);
        }
        let want = u64::from(prec) + other.mant.bits() + 2;
        let shift = want.saturating_sub(self.mant.bits());
        let num = &self.mant << shift;
        let q = num / &other.mant;
        Self::from_parts(q, self.exp - shift as i64 - other.exp, prec)
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "BigFloat sqrt of negative value");
        if self.is_zero() {
            return self.clone();
        }
        let want = 2 * u64::from(self.prec) + 4;
        let mut shift = want.saturating_sub(self.mant.bits());
        if (self.exp - shift as i64).rem_euclid(2) != 0 {
            shift += 1;
        }
        let m = self.mant.magnitude() << shift;
        let r = m.sqrt();
        Self::from_parts(BigInt::from(r), (self.exp - shift as i64) / 2, self.prec)
    }

    /// Integer power by repeated squaring.
    pub fn powu(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.prec);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Nearest integer (ties away from zero).
    pub fn round_to_int(&self) -> BigInt {
        if self.exp >= 0 {
            return &self.mant << self.exp as u64;
        }
        let shift = (-self.exp) as u64;
        let mag = round_shift(self.mant.magnitude(), shift);
        BigInt::from_biguint(self.mant.sign(), mag)
    }

    /// `|self − round(self)|`, computed exactly.
    pub fn distance_to_int(&self, nearest: &BigInt) -> Self {
        if self.exp >= 0 {
            return Self::zero(self.prec);
        }
        let shift = (-self.exp) as u64;
        let diff = &self.mant - (nearest << shift);
        Self::from_parts(diff.abs(), self.exp, self.prec.max(64))
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits();
        let (m, e) = if bits > 64 {
            let s = bits - 64;
            (&self.mant >> s, self.exp + s as i64)
        } else {
            (self.mant.clone(), self.exp)
        };
        let f = m.to_f64().unwrap_or(0.0);
        if e > 2100 {
            return f * f64::INFINITY;
        }
        if e < -2200 {
            return 0.0 * f;
        }
        let e = e as i32;
        let half = e / 2;
        f * 2f64.powi(half) * 2f64.powi(e - half)
    }

    /// Approximate `log2|x|`; `-inf` for zero.
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.mant.bits();
        let take = bits.min(60);
        let top = (self.mant.magnitude() >> (bits - take))
            .to_f64()
            .unwrap_or(1.0);
        top.log2() + (self.exp + (bits - take) as i64) as f64
    }

    /// Fixed-point decimal rendering with exactly `digits` fractional digits.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let scale = num_traits::pow(BigInt::from(10), digits);
        let scaled = &self.mant * scale;
        let n = if self.exp >= 0 {
            scaled << self.exp as u64
        } else {
            let mag = round_shift(scaled.magnitude(), (-self.exp) as u64);
            BigInt::from_biguint(scaled.sign(), mag)
        };
        let neg = n.sign() == Sign::Minus;
        let mut s = n.magnitude().to_string();
        if digits > 0 {
            if s.len() <= digits {
                s = format!("{}{}", "0".repeat(digits + 1 - s.len()), s);
            }
            s.insert(s.len() - digits, '.');
        }
        if neg {
            s.insert(0, '-');
        }
        s
    }
}

impl PartialOrd for BigFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.total_cmp(other))
    }
}

impl BigFloat {
    /// Exact comparison of the represented values (precision ignored).
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        let sa = self.mant.sign();
        let sb = other.mant.sign();
        let rank = |s: Sign| match s {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        };
        match rank(sa).cmp(&rank(sb)) {
            Ordering::Equal => {}
            o => return o,
        }
        if sa == Sign::NoSign {
            return Ordering::Equal;
        }
        let mag = match self.top().cmp(&other.top()) {
            Ordering::Equal => {
                let exp = self.exp.min(other.exp);
                let a = self.mant.magnitude() << (self.exp - exp) as u64;
                let b = other.mant.magnitude() << (other.exp - exp) as u64;
                a.cmp(&b)
            }
            o => o,
        };
        if sa == Sign::Minus {
            mag.reverse()
        } else {
            mag
        }
    }
}

impl fmt::Debug for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigFloat({:e} @{}b)", self.to_f64(), self.prec)
    }
}

impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        f.write_str(&self.to_decimal_string(digits))
    }
}

impl Neg for &BigFloat {
    type Output = BigFloat;
    fn neg(self) -> BigFloat {
        BigFloat {
            mant: -self.mant.clone(),
            exp: self.exp,
            prec: self.prec,
        }
    }
}

impl Neg for BigFloat {
    type Output = BigFloat;
    fn neg(self) -> BigFloat {
        BigFloat {
            mant: -self.mant,
            exp: self.exp,
            prec: self.prec,
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&BigFloat> for &BigFloat {
            type Output = BigFloat;
            fn $method(self, rhs: &BigFloat) -> BigFloat {
                let f: fn(&BigFloat, &BigFloat) -> BigFloat = $body;
                f(self, rhs)
            }
        }
        impl $tr<BigFloat> for BigFloat {
            type Output = BigFloat;
            fn $method(self, rhs: BigFloat) -> BigFloat {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&BigFloat> for BigFloat {
            type Output = BigFloat;
            fn $method(self, rhs: &BigFloat) -> BigFloat {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a, b| a.add_impl(b, false));
forward_binop!(Sub, sub, |a, b| a.add_impl(b, true));
forward_binop!(Mul, mul, |a, b| a.mul_impl(b));
forward_binop!(Div, div, |a, b| a.div_impl(b));
