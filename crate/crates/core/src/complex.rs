//! Complex helpers over a generic [`Real`].
//!
//! `num_complex::Complex<R>` supplies the field operations; the elementary
//! functions it gates behind `Float` are provided here instead.

use num_complex::Complex;

use crate::context::PrecisionContext;
use crate::scalar::Real;

pub trait ComplexExt<R: Real>: Sized {
    fn abs(&self) -> R;
    fn arg(&self) -> R;
    fn exp(&self) -> Self;
    /// Principal logarithm.
    fn ln(&self) -> Self;
    /// Principal square root (non-negative real part).
    fn sqrt(&self) -> Self;
    fn powu(&self, e: u32) -> Self;
    fn scale_by(&self, r: &R) -> Self;
    fn is_finite(&self) -> bool;
    fn max_abs(&self) -> R;
}

impl<R: Real> ComplexExt<R> for Complex<R> {
    fn abs(&self) -> R {
        self.re.hypot(&self.im)
    }

    fn arg(&self) -> R {
        self.im.atan2(&self.re)
    }

    fn exp(&self) -> Self {
        let m = self.re.exp();
        let (s, c) = self.im.sin_cos();
        Complex::new(m.clone() * c, m * s)
    }

    fn ln(&self) -> Self {
        Complex::new(ComplexExt::abs(self).ln(), self.arg())
    }

    fn sqrt(&self) -> Self {
        if self.re.is_zero() && self.im.is_zero() {
            return self.clone();
        }
        let two = R::one() + R::one();
        let m = ComplexExt::abs(self);
        let a = ((m.clone() + self.re.abs()) / two.clone()).sqrt();
        let b = self.im.abs() / (two * a.clone());
        let neg_im = self.im < R::zero();
        if self.re >= R::zero() {
            Complex::new(a, if neg_im { -b } else { b })
        } else {
            Complex::new(b, if neg_im { -a } else { a })
        }
    }

    fn powu(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Complex::new(R::one(), R::zero());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    fn scale_by(&self, r: &R) -> Self {
        Complex::new(self.re.clone() * r.clone(), self.im.clone() * r.clone())
    }

    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn max_abs(&self) -> R {
        self.re.abs().max_of(self.im.abs())
    }
}

pub fn cx<R: Real>(ctx: &PrecisionContext, re: f64, im: f64) -> Complex<R> {
    Complex::new(ctx.lift(re), ctx.lift(im))
}

pub fn cint<R: Real>(ctx: &PrecisionContext, n: i64) -> Complex<R> {
    Complex::new(ctx.int(n), R::zero())
}

pub fn czero<R: Real>() -> Complex<R> {
    Complex::new(R::zero(), R::zero())
}

pub fn cone<R: Real>() -> Complex<R> {
    Complex::new(R::one(), R::zero())
}

/// `2πi` at the context precision.
pub fn two_pi_i<R: Real>(ctx: &PrecisionContext) -> Complex<R> {
    Complex::new(R::zero(), ctx.pi::<R>() * ctx.int::<R>(2))
}

/// `i` at the context precision.
pub fn imag_unit<R: Real>(ctx: &PrecisionContext) -> Complex<R> {
    Complex::new(ctx.int(0), ctx.int(1))
}

/// Nearest integer to the real part.
pub fn round_re<R: Real>(z: &Complex<R>) -> Option<num_bigint::BigInt> {
    z.re.round_to_bigint()
}

/// Convert between scalar types through a decimal string of sufficient length.
pub fn convert<R: Real, S: Real>(z: &Complex<R>, bits: u32) -> Complex<S> {
    let digits = (z.re.precision() as f64 * 0.30103) as usize + 3;
    let re = S::from_decimal(&z.re.to_decimal(digits), bits).unwrap_or_else(|| S::from_f64_prec(z.re.to_f64(), bits));
    let im = S::from_decimal(&z.im.to_decimal(digits), bits).unwrap_or_else(|| S::from_f64_prec(z.im.to_f64(), bits));
    Complex::new(re, im)
}

pub fn is_one<R: Real>(z: &Complex<R>) -> bool {
    z.re.is_one() && z.im.is_zero()
}

pub fn to_c64<R: Real>(z: &Complex<R>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}
