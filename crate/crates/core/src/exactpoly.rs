//! Dense univariate polynomials over ℤ: subresultant gcd and resultant,
//! squarefree parts, exact rational roots and Mahler-measure heights.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::complex::ComplexExt;
use crate::context::PrecisionContext;
use crate::error::{Error, Result};
use crate::kernel::polyroots;
use crate::scalar::Real;

/// Integer polynomial, coefficients constant-first with no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().map_or(false, Zero::is_zero) {
            coeffs.pop();
        }
        IntPoly { coeffs }
    }

    pub fn from_i64(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn zero() -> Self {
        IntPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: BigInt) -> Self {
        Self::new(vec![c])
    }

    /// The polynomial `t`.
    pub fn x() -> Self {
        Self::from_i64(&[0, 1])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn deg(&self) -> usize {
        self.degree().unwrap_or(0)
    }

    pub fn lead(&self) -> BigInt {
        self.coeffs.last().cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn content(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Primitive part with positive leading coefficient.
    pub fn primitive(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = self.content();
        if self.lead().is_negative() {
            c = -c;
        }
        Self::new(self.coeffs.iter().map(|x| x / &c).collect())
    }

    pub fn neg(&self) -> Self {
        Self::new(self.coeffs.iter().map(|x| -x).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(BigInt::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c * BigInt::from(i)).collect())
    }

    /// `p(−x)`.
    pub fn reflect(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| if i % 2 == 1 { -c } else { c.clone() })
                .collect(),
        )
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + BigRational::from_integer(c.clone());
        }
        acc
    }

    pub fn eval_int(&self, x: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_complex<R: Real>(&self, x: &Complex<R>, ctx: &PrecisionContext) -> Complex<R> {
        let mut acc = Complex::new(R::zero(), R::zero());
        for c in self.coeffs.iter().rev() {
            acc = acc * x.clone() + Complex::new(R::from_bigint(c, ctx.bits), R::zero());
        }
        acc
    }

    pub fn to_complex<R: Real>(&self, ctx: &PrecisionContext) -> Vec<Complex<R>> {
        self.coeffs.iter().map(|c| Complex::new(R::from_bigint(c, ctx.bits), R::zero())).collect()
    }

    /// Pseudo-remainder `lc(q)^{deg p − deg q + 1}·p mod q`.
    pub fn pseudo_rem(&self, q: &Self) -> Self {
        assert!(!q.is_zero(), "division by zero polynomial");
        let mut r = self.clone();
        let dq = q.deg();
        let lq = q.lead();
        if self.is_zero() || self.deg() < dq {
            return r;
        }
        let mut steps = self.deg() - dq + 1;
        while !r.is_zero() && r.deg() >= dq {
            let shift = r.deg() - dq;
            let lr = r.lead();
            let mut t = vec![BigInt::zero(); shift];
            t.extend(q.coeffs.iter().map(|c| c * &lr));
            r = r.scale(&lq).sub(&Self::new(t));
            steps -= 1;
        }
        r.scale(&lq.pow(steps as u32))
    }

    /// Exact quotient and remainder when `q` divides over ℤ step by step;
    /// `None` when a non-integral quotient coefficient appears.
    pub fn div_rem_exact(&self, q: &Self) -> Option<(Self, Self)> {
        assert!(!q.is_zero(), "division by zero polynomial");
        let mut r = self.clone();
        let dq = q.deg();
        let lq = q.lead();
        let mut quot = vec![BigInt::zero(); self.deg().saturating_sub(dq) + 1];
        while !r.is_zero() && r.deg() >= dq {
            let (c, rem) = r.lead().div_rem(&lq);
            if !rem.is_zero() {
                return None;
            }
            let shift = r.deg() - dq;
            quot[shift] = c.clone();
            let mut t = vec![BigInt::zero(); shift];
            t.extend(q.coeffs.iter().map(|x| x * &c));
            r = r.sub(&Self::new(t));
        }
        Some((Self::new(quot), r))
    }

    /// `self / q` when the division is exact over ℤ.
    pub fn div_exact(&self, q: &Self) -> Option<Self> {
        match self.div_rem_exact(q) {
            Some((quot, r)) if r.is_zero() => Some(quot),
            _ => None,
        }
    }

    pub fn divides(&self, p: &Self) -> bool {
        p.is_zero() || (!self.is_zero() && self.div_exact_rational(p))
    }

    fn div_exact_rational(&self, p: &Self) -> bool {
        // divisibility over ℚ: pseudo-remainder vanishes
        p.pseudo_rem(self).is_zero()
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            let unit = a.is_one() && i > 0;
            if !unit {
                write!(f, "{a}")?;
            }
            match i {
                0 => {}
                1 => f.write_str(if unit { "t" } else { "*t" })?,
                _ => write!(f, "{}t^{i}", if unit { "" } else { "*" })?,
            }
        }
        Ok(())
    }
}

/// `h^{1−δ}·g^δ`, exact in the subresultant recurrence.
fn next_h(h: &BigInt, g: &BigInt, delta: u32) -> BigInt {
    if delta == 0 {
        h.clone()
    } else {
        g.pow(delta) / h.pow(delta - 1)
    }
}

/// Primitive, positive-leading gcd (subresultant remainder sequence).
pub fn gcd(p: &IntPoly, q: &IntPoly) -> IntPoly {
    assert!(!(p.is_zero() && q.is_zero()), "gcd of two zero polynomials");
    if q.is_zero() {
        return p.primitive();
    }
    if p.is_zero() {
        return q.primitive();
    }
    let (mut a, mut b) = if p.deg() >= q.deg() { (p.primitive(), q.primitive()) } else { (q.primitive(), p.primitive()) };
    let (mut g, mut h) = (BigInt::one(), BigInt::one());
    loop {
        let delta = (a.deg() - b.deg()) as u32;
        let r = a.pseudo_rem(&b);
        if r.is_zero() {
            return b.primitive();
        }
        if r.deg() == 0 {
            return IntPoly::constant(BigInt::one());
        }
        let denom = &g * h.pow(delta);
        a = b;
        b = IntPoly::new(r.coeffs.iter().map(|c| c / &denom).collect());
        g = a.lead();
        h = next_h(&h, &g, delta);
    }
}

/// Resultant, equal to the Sylvester determinant with `p`-rows first.
pub fn resultant(p: &IntPoly, q: &IntPoly) -> BigInt {
    if p.is_zero() || q.is_zero() {
        return BigInt::zero();
    }
    let (ca, cb) = (p.content(), q.content());
    let t = ca.pow(q.deg() as u32) * cb.pow(p.deg() as u32);
    let (mut a, mut b) = (IntPoly::new(p.coeffs.iter().map(|c| c / &ca).collect()), IntPoly::new(q.coeffs.iter().map(|c| c / &cb).collect()));
    let mut s = BigInt::one();
    if a.deg() < b.deg() {
        std::mem::swap(&mut a, &mut b);
        if a.deg() % 2 == 1 && b.deg() % 2 == 1 {
            s = -s;
        }
    }
    let (mut g, mut h) = (BigInt::one(), BigInt::one());
    while !b.is_zero() && b.deg() > 0 {
        let delta = (a.deg() - b.deg()) as u32;
        if a.deg() % 2 == 1 && b.deg() % 2 == 1 {
            s = -s;
        }
        let r = a.pseudo_rem(&b);
        let denom = &g * h.pow(delta);
        a = b;
        b = IntPoly::new(r.coeffs.iter().map(|c| c / &denom).collect());
        g = a.lead();
        h = next_h(&h, &g, delta);
    }
    if b.is_zero() {
        return BigInt::zero();
    }
    let da = a.deg() as u32;
    let hf = if da == 0 { BigInt::one() } else { b.lead().pow(da) / h.pow(da - 1) };
    s * t * hf
}

/// Product of the distinct irreducible factors (primitive, positive lead).
pub fn squarefree(p: &IntPoly) -> IntPoly {
    assert!(!p.is_zero(), "squarefree part of zero");
    if p.deg() == 0 {
        return IntPoly::constant(BigInt::one());
    }
    let g = gcd(p, &p.derivative());
    let pp = p.primitive();
    let q = if g.deg() == 0 {
        pp
    } else {
        // exact over ℚ; rescale to stay in ℤ
        let scaled = pp.scale(&g.lead().pow((pp.deg() - g.deg() + 1) as u32));
        scaled.div_exact(&g).expect("gcd divides").primitive()
    };
    q.primitive()
}

/// Roots in ℚ found by recognizing real numerical roots and confirming them
/// exactly; each returned value satisfies `p(x) = 0` in exact arithmetic.
pub fn rational_roots(p: &IntPoly, ctx: &PrecisionContext) -> Result<Vec<BigRational>> {
    if p.deg() == 0 {
        return Ok(Vec::new());
    }
    let sf = squarefree(p);
    let mut out: Vec<BigRational> = Vec::new();
    if sf.coeff(0).is_zero() {
        out.push(BigRational::zero());
    }
    let roots = polyroots::<crate::scalar::Mp>(&sf.to_complex(ctx), ctx)?;
    let lead = sf.lead();
    for z in roots {
        if z.im.abs().to_f64() > ctx.sqrt_tol() * (1.0 + z.abs().to_f64()) {
            continue;
        }
        for cand in convergents(&z.re, 64) {
            if !(&lead % cand.denom()).is_zero() {
                continue;
            }
            if sf.eval(&cand).is_zero() {
                if !out.contains(&cand) {
                    out.push(cand);
                }
                break;
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Continued-fraction convergents of a real number.
fn convergents<R: Real>(x: &R, max: usize) -> Vec<BigRational> {
    let mut out = Vec::new();
    let mut y = x.clone();
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    for _ in 0..max {
        let a = y.floor();
        let Some(ai) = a.round_to_bigint() else { break };
        let h2 = &ai * &h1 + &h0;
        let k2 = &ai * &k1 + &k0;
        out.push(BigRational::new(h2.clone(), k2.clone()));
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = y - a;
        if frac.to_f64().abs() < 1e-30 {
            break;
        }
        y = R::one() / frac;
    }
    out
}

/// Linear factor `den·t − num` of a rational root.
pub fn linear_factor(r: &BigRational) -> IntPoly {
    IntPoly::new(vec![-r.numer().clone(), r.denom().clone()])
}

/// Absolute logarithmic height `(1/deg)·(log|lead| + Σ log max(1, |root|))`
/// of the primitive part.
pub fn mahler_height(p: &IntPoly, ctx: &PrecisionContext) -> Result<f64> {
    let p = &p.primitive();
    if p.deg() == 0 {
        return Err(Error::DomainError("height of a constant polynomial".into()));
    }
    let roots = polyroots::<crate::scalar::Mp>(&p.to_complex(ctx), ctx)?;
    let mut s = crate::scalar::Mp::from_bigint(&p.lead().abs(), ctx.bits).ln();
    for z in &roots {
        let m = z.abs();
        if m > crate::scalar::Mp::one() {
            s = s + m.ln();
        }
    }
    Ok(s.to_f64() / p.deg() as f64)
}

/// Height of a rational number `n/d` in lowest terms: `log max(|n|, |d|)`.
pub fn rational_height(r: &BigRational) -> f64 {
    let m = r.numer().abs().max(r.denom().abs());
    let bits = m.bits();
    if bits < 1000 {
        m.to_f64().unwrap_or(f64::INFINITY).ln()
    } else {
        let shift = bits - 60;
        let top: BigInt = &m >> shift;
        top.to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Characteristic polynomial in `Y` of `num(t)/den(t)` over the roots of
/// `p`: `Res_t(p(t), den(t)·Y − num(t))`, interpolated from integer `Y`.
pub fn image_charpoly(p: &IntPoly, num: &IntPoly, den: &IntPoly) -> IntPoly {
    let n = p.deg();
    let m = num.deg().max(den.deg());
    let mut xs: Vec<BigInt> = Vec::new();
    let mut ys: Vec<BigInt> = Vec::new();
    let mut y = 0i64;
    while xs.len() < n + 1 {
        let yb = BigInt::from(y);
        let q = den.scale(&yb).sub(num);
        if q.deg() == m && !q.is_zero() {
            xs.push(yb);
            ys.push(resultant(p, &q));
        }
        y += 1;
    }
    interpolate(&xs, &ys)
}

/// Exact interpolation through integer nodes; the result is expected to have
/// integer coefficients.
pub fn interpolate(xs: &[BigInt], ys: &[BigInt]) -> IntPoly {
    let n = xs.len();
    let mut dd: Vec<BigRational> = ys.iter().map(|y| BigRational::from_integer(y.clone())).collect();
    for lvl in 1..n {
        for i in (lvl..n).rev() {
            let num = &dd[i] - &dd[i - 1];
            let den = BigRational::from_integer(&xs[i] - &xs[i - lvl]);
            dd[i] = num / den;
        }
    }
    // Newton form to monomial basis
    let mut coeffs = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        // coeffs ← coeffs·(x − xs[i]) + dd[i]
        let mut next = vec![BigRational::zero(); n];
        for j in 0..n {
            if j + 1 < n {
                next[j + 1] += &coeffs[j];
            }
            next[j] -= &coeffs[j] * BigRational::from_integer(xs[i].clone());
        }
        next[0] += &dd[i];
        coeffs = next;
    }
    IntPoly::new(
        coeffs
            .into_iter()
            .map(|c| {
                assert!(c.is_integer(), "interpolant is not integral");
                c.to_integer()
            })
            .collect(),
    )
}
