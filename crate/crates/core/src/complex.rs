//! Complex numbers over [`BigFloat`].

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;

use crate::bigfloat::BigFloat;

/// Complex value at a fixed binary precision. Binary operations produce a
/// result at the smaller of the two operand precisions.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct HpComplex {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl HpComplex {
    pub fn new(re: BigFloat, im: BigFloat) -> Self {
        Self { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        Self::new(BigFloat::zero(prec), BigFloat::zero(prec))
    }

    pub fn one(prec: u32) -> Self {
        Self::from_real(BigFloat::one(prec))
    }

    pub fn from_real(re: BigFloat) -> Self {
        let prec = re.precision();
        Self::new(re, BigFloat::zero(prec))
    }

    pub fn from_int(v: i64, prec: u32) -> Self {
        Self::from_real(BigFloat::from_int(v, prec))
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> Self {
        Self::from_real(BigFloat::from_bigint(v, prec))
    }

    pub fn from_f64(re: f64, im: f64, prec: u32) -> Self {
        Self::new(BigFloat::from_f64(re, prec), BigFloat::from_f64(im, prec))
    }

    pub fn precision(&self) -> u32 {
        self.re.precision().min(self.im.precision())
    }

    pub fn with_precision(&self, prec: u32) -> Self {
        Self::new(self.re.with_precision(prec), self.im.with_precision(prec))
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -&self.im)
    }

    pub fn norm_sqr(&self) -> BigFloat {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn abs(&self) -> BigFloat {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn scale(&self, s: &BigFloat) -> Self {
        Self::new(&self.re * s, &self.im * s)
    }

    pub fn mul_int(&self, v: &BigInt) -> Self {
        let s = BigFloat::from_bigint(v, self.precision());
        self.scale(&s)
    }

    pub fn recip(&self) -> Self {
        let d = self.norm_sqr();
        Self::new(&self.re / &d, -(&self.im / &d))
    }

    /// `self^e` by repeated squaring.
    pub fn powu(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.precision());
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

    /// `self^e` for any sign of `e`; negative powers go through the reciprocal.
    pub fn powi(&self, e: i64) -> Self {
        if e >= 0 {
            self.powu(e as u64)
        } else {
            self.recip().powu(e.unsigned_abs())
        }
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl fmt::Debug for HpComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.to_f64_pair();
        write!(f, "HpComplex({re:e} {im:+e}i @{}b)", self.precision())
    }
}

impl fmt::Display for HpComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        let im = self.im.to_decimal_string(digits);
        if let Some(mag) = im.strip_prefix('-') {
            write!(f, "{} - {}i", self.re.to_decimal_string(digits), mag)
        } else {
            write!(f, "{} + {}i", self.re.to_decimal_string(digits), im)
        }
    }
}

impl Neg for &HpComplex {
    type Output = HpComplex;
    fn neg(self) -> HpComplex {
        HpComplex::new(-&self.re, -&self.im)
    }
}

impl Neg for HpComplex {
    type Output = HpComplex;
    fn neg(self) -> HpComplex {
        HpComplex::new(-self.re, -self.im)
    }
}

fn add(a: &HpComplex, b: &HpComplex) -> HpComplex {
    HpComplex::new(&a.re + &b.re, &a.im + &b.im)
}

fn sub(a: &HpComplex, b: &HpComplex) -> HpComplex {
    HpComplex::new(&a.re - &b.re, &a.im - &b.im)
}

fn mul(a: &HpComplex, b: &HpComplex) -> HpComplex {
    HpComplex::new(&a.re * &b.re - &a.im * &b.im, &a.re * &b.im + &a.im * &b.re)
}

fn div(a: &HpComplex, b: &HpComplex) -> HpComplex {
    let d = b.norm_sqr();
    assert!(!d.is_zero(), "HpComplex division by zero");
    let re = &a.re * &b.re + &a.im * &b.im;
    let im = &a.im * &b.re - &a.re * &b.im;
    HpComplex::new(re / &d, im / &d)
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $f:ident) => {
        impl $tr<&HpComplex> for &HpComplex {
            type Output = HpComplex;
            fn $method(self, rhs: &HpComplex) -> HpComplex {
                $f(self, rhs)
            }
        }
        impl $tr<HpComplex> for HpComplex {
            type Output = HpComplex;
            fn $method(self, rhs: HpComplex) -> HpComplex {
                $f(&self, &rhs)
            }
        }
        impl $tr<&HpComplex> for HpComplex {
            type Output = HpComplex;
            fn $method(self, rhs: &HpComplex) -> HpComplex {
                $f(&self, rhs)
            }
        }
    };
}

forward_binop!(Add, add, add);
forward_binop!(Sub, sub, sub);
forward_binop!(Mul, mul, mul);
forward_binop!(Div, div, div);
