//! Scalar abstraction shared by every numeric kernel.
//!
//! All analytic code is written against [`Real`], which is implemented for
//! `f64` (fast, 53-bit, used for coarse searches and quick property tests)
//! and for [`Mp`], an MPFR float carrying its own precision.
//!
//! `Mp` arithmetic takes the larger precision of its two operands, so the
//! precision-free identities returned by `Zero::zero()` / `One::one()` mix
//! correctly with context-precision values.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Zero};
use rug::float::Constant;
use rug::Float;

/// Real scalar usable by the analytic kernels.
pub trait Real:
    Clone + fmt::Debug + fmt::Display + PartialOrd + Num + Neg<Output = Self> + Send + Sync + 'static
{
    /// Mantissa bits carried natively (53 for `f64`).
    fn precision(&self) -> u32;
    fn from_f64_prec(x: f64, bits: u32) -> Self;
    fn from_i64_prec(x: i64, bits: u32) -> Self;
    fn from_bigint(x: &BigInt, bits: u32) -> Self;
    fn from_decimal(s: &str, bits: u32) -> Option<Self>;
    fn pi(bits: u32) -> Self;
    fn to_f64(&self) -> f64;
    /// Nearest integer, `None` for non-finite values.
    fn round_to_bigint(&self) -> Option<BigInt>;
    fn floor(&self) -> Self;
    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin_cos(&self) -> (Self, Self);
    fn atan2(&self, x: &Self) -> Self;
    fn is_finite(&self) -> bool;
    /// Decimal rendering with `digits` significant digits.
    fn to_decimal(&self, digits: usize) -> String;

    fn from_ratio(x: &BigRational, bits: u32) -> Self {
        Self::from_bigint(x.numer(), bits) / Self::from_bigint(x.denom(), bits)
    }

    fn hypot(&self, other: &Self) -> Self {
        let a = self.abs();
        let b = other.abs();
        let (big, small) = if a >= b { (a, b) } else { (b, a) };
        if big.is_zero() {
            return big;
        }
        let r = small / big.clone();
        big * (Self::one() + r.clone() * r).sqrt()
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// `2^e` at the requested precision.
    fn pow2(e: i32, bits: u32) -> Self {
        Self::from_f64_prec(2f64.powi(e), bits)
    }
}

impl Real for f64 {
    fn precision(&self) -> u32 {
        53
    }
    fn from_f64_prec(x: f64, _bits: u32) -> Self {
        x
    }
    fn from_i64_prec(x: i64, _bits: u32) -> Self {
        x as f64
    }
    fn from_bigint(x: &BigInt, _bits: u32) -> Self {
        num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::NAN)
    }
    fn from_decimal(s: &str, _bits: u32) -> Option<Self> {
        s.trim().parse().ok()
    }
    fn pi(_bits: u32) -> Self {
        std::f64::consts::PI
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn round_to_bigint(&self) -> Option<BigInt> {
        if self.is_finite() {
            num_traits::FromPrimitive::from_f64(self.round())
        } else {
            None
        }
    }
    fn floor(&self) -> Self {
        f64::floor(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin_cos(&self) -> (Self, Self) {
        f64::sin_cos(*self)
    }
    fn atan2(&self, x: &Self) -> Self {
        f64::atan2(*self, *x)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn to_decimal(&self, digits: usize) -> String {
        format!("{:.*e}", digits.saturating_sub(1).min(17), self)
    }
    fn hypot(&self, other: &Self) -> Self {
        f64::hypot(*self, *other)
    }
}

/// MPFR-backed real with per-value precision.
#[derive(Clone)]
pub struct Mp(Float);

impl Mp {
    pub fn new(bits: u32, x: f64) -> Self {
        Mp(Float::with_val(bits, x))
    }

    pub fn inner(&self) -> &Float {
        &self.0
    }

    pub fn into_inner(self) -> Float {
        self.0
    }

    pub fn from_float(f: Float) -> Self {
        Mp(f)
    }

    /// Copy at a different precision (rounding to nearest).
    pub fn with_prec(&self, bits: u32) -> Self {
        Mp(Float::with_val(bits, &self.0))
    }
}

impl fmt::Debug for Mp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mp({})", self.to_decimal(20))
    }
}

impl fmt::Display for Mp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(((self.0.prec() as f64) * 0.30103) as usize + 1);
        f.write_str(&self.to_decimal(digits))
    }
}

impl PartialEq for Mp {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for Mp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

macro_rules! mp_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr for Mp {
            type Output = Mp;
            fn $method(self, rhs: Mp) -> Mp {
                let prec = self.0.prec().max(rhs.0.prec());
                Mp(Float::with_val(prec, &self.0 $op &rhs.0))
            }
        }
        impl<'a> $tr<&'a Mp> for &'a Mp {
            type Output = Mp;
            fn $method(self, rhs: &'a Mp) -> Mp {
                let prec = self.0.prec().max(rhs.0.prec());
                Mp(Float::with_val(prec, &self.0 $op &rhs.0))
            }
        }
    };
}

mp_binop!(Add, add, +);
mp_binop!(Sub, sub, -);
mp_binop!(Mul, mul, *);
mp_binop!(Div, div, /);
mp_binop!(Rem, rem, %);

impl Neg for Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp(-self.0)
    }
}

impl Zero for Mp {
    fn zero() -> Self {
        Mp(Float::with_val(rug::float::prec_min(), 0))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for Mp {
    fn one() -> Self {
        Mp(Float::with_val(rug::float::prec_min(), 1))
    }
}

impl Num for Mp {
    type FromStrRadixErr = rug::float::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        let parsed = Float::parse_radix(s, radix as i32)?;
        Ok(Mp(Float::with_val(53, parsed)))
    }
}

fn rug_to_bigint(i: &rug::Integer) -> BigInt {
    BigInt::parse_bytes(i.to_string_radix(16).as_bytes(), 16).expect("hex digits")
}

fn bigint_to_rug(i: &BigInt) -> rug::Integer {
    rug::Integer::from_str_radix(&i.to_str_radix(16), 16).expect("hex digits")
}

impl Real for Mp {
    fn precision(&self) -> u32 {
        self.0.prec()
    }
    fn from_f64_prec(x: f64, bits: u32) -> Self {
        Mp(Float::with_val(bits, x))
    }
    fn from_i64_prec(x: i64, bits: u32) -> Self {
        Mp(Float::with_val(bits, x))
    }
    fn from_bigint(x: &BigInt, bits: u32) -> Self {
        Mp(Float::with_val(bits, bigint_to_rug(x)))
    }
    fn from_decimal(s: &str, bits: u32) -> Option<Self> {
        Float::parse(s.trim()).ok().map(|p| Mp(Float::with_val(bits, p)))
    }
    fn pi(bits: u32) -> Self {
        Mp(Float::with_val(bits, Constant::Pi))
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn round_to_bigint(&self) -> Option<BigInt> {
        let r = self.0.clone().round();
        r.to_integer().map(|i| rug_to_bigint(&i))
    }
    fn floor(&self) -> Self {
        Mp(self.0.clone().floor())
    }
    fn abs(&self) -> Self {
        Mp(self.0.clone().abs())
    }
    fn sqrt(&self) -> Self {
        Mp(self.0.clone().sqrt())
    }
    fn exp(&self) -> Self {
        Mp(self.0.clone().exp())
    }
    fn ln(&self) -> Self {
        Mp(self.0.clone().ln())
    }
    fn sin_cos(&self) -> (Self, Self) {
        let prec = self.0.prec();
        let (s, c) = self.0.clone().sin_cos(Float::new(prec));
        (Mp(s), Mp(c))
    }
    fn atan2(&self, x: &Self) -> Self {
        let prec = self.0.prec().max(x.0.prec());
        Mp(Float::with_val(prec, &self.0).atan2(&x.0))
    }
    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
    fn to_decimal(&self, digits: usize) -> String {
        self.0.to_string_radix(10, Some(digits.max(1)))
    }
    fn pow2(e: i32, bits: u32) -> Self {
        let mut f = Float::with_val(bits, 1);
        f <<= e;
        Mp(f)
    }
}
