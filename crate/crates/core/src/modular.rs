//! Classical modular polynomials `Φ_N(X, Y)`: numeric evaluation through
//! cyclic sublattices, exact recovery for small levels, and specialization
//! along rational curves.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::complex::{cone, czero, ComplexExt};
use crate::context::PrecisionContext;
use crate::error::{Error, Result};
use crate::exactpoly::IntPoly;
use crate::isogeny::{cyclic_sublattices, psi};
use crate::kernel::{j_inverse, j_invariant, poly_from_roots};
use crate::scalar::{Mp, Real};

/// Largest level recovered exactly by default.
pub const MAX_EXACT_LEVEL: u32 = 5;
/// Precision ceiling for exact recovery.
pub const MAX_RECOVERY_BITS: u32 = 4096;
/// Radius of the circle of sample `Y` values used in recovery.
const SAMPLE_RADIUS: f64 = 3000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Recovered,
    Supplied,
}

/// `Φ_N(X, Y) = Σ c[i][k] Xⁱ Yᵏ` with exact integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModularPolynomial {
    pub level: u32,
    /// `coeffs[i][k]` multiplies `Xⁱ·Yᵏ`; square of side `ψ(N) + 1`.
    pub coeffs: Vec<Vec<BigInt>>,
    pub provenance: Provenance,
}

impl ModularPolynomial {
    /// `X − Y`, the level-one analogue.
    pub fn level_one() -> Self {
        let z = BigInt::zero;
        ModularPolynomial {
            level: 1,
            coeffs: vec![vec![z(), -BigInt::one()], vec![BigInt::one(), z()]],
            provenance: Provenance::Supplied,
        }
    }

    pub fn supplied(level: u32, coeffs: Vec<Vec<BigInt>>) -> Self {
        ModularPolynomial { level, coeffs, provenance: Provenance::Supplied }
    }

    /// Degree in each variable.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn degree_in_x(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|row| row.iter().any(|c| !c.is_zero()))
            .unwrap_or(0)
    }

    pub fn is_symmetric(&self) -> bool {
        is_symmetric_table(&self.coeffs)
    }

    pub fn coeff(&self, i: usize, k: usize) -> &BigInt {
        &self.coeffs[i][k]
    }

    pub fn eval_exact(&self, x: &BigRational, y: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for row in self.coeffs.iter().rev() {
            let mut inner = BigRational::zero();
            for c in row.iter().rev() {
                inner = inner * y + BigRational::from_integer(c.clone());
            }
            acc = acc * x + inner;
        }
        acc
    }

    pub fn eval_complex<R: Real>(&self, x: &Complex<R>, y: &Complex<R>, ctx: &PrecisionContext) -> Complex<R> {
        let mut acc = czero::<R>();
        for row in self.coeffs.iter().rev() {
            let mut inner = czero::<R>();
            for c in row.iter().rev() {
                inner = inner * y.clone() + Complex::new(R::from_bigint(c, ctx.bits), R::zero());
            }
            acc = acc * x.clone() + inner;
        }
        acc
    }

    /// `Σ |c| |x|ⁱ |y|ᵏ`, the natural scale for a numeric evaluation.
    pub fn eval_scale(&self, x: f64, y: f64) -> f64 {
        let mut s = 0.0;
        for (i, row) in self.coeffs.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    s += c.abs().to_f64().unwrap_or(f64::INFINITY) * x.abs().powi(i as i32) * y.abs().powi(k as i32);
                }
            }
        }
        s
    }

    /// Polynomial in `X` after substituting an integer for `Y`.
    pub fn in_x_at(&self, y: &BigInt) -> IntPoly {
        IntPoly::new(
            self.coeffs
                .iter()
                .map(|row| row.iter().rev().fold(BigInt::zero(), |acc, c| acc * y + c))
                .collect(),
        )
    }
}

/// `∏ (x − j(τ_L))` over the `ψ(N)` cyclic sublattices `L` of `ℤ + ℤτ`.
pub fn phi_eval_numeric<R: Real>(n: u32, x: &Complex<R>, tau: &Complex<R>, ctx: &PrecisionContext) -> Result<Complex<R>> {
    let mut acc = cone::<R>();
    for j in sublattice_j_values(n, tau, ctx)? {
        acc = acc * (x.clone() - j);
    }
    Ok(acc)
}

/// `j` of every cyclic index-`N` sublattice of `ℤ + ℤτ`.
pub fn sublattice_j_values<R: Real>(n: u32, tau: &Complex<R>, ctx: &PrecisionContext) -> Result<Vec<Complex<R>>> {
    cyclic_sublattices(n as i64)
        .iter()
        .map(|s| j_invariant(&s.tau_image(tau, ctx), ctx))
        .collect()
}

/// Recover `Φ_N` with exact integer coefficients.
///
/// The coefficients of `Φ_N(X, Y)` as polynomials in `Y` are sampled at
/// `ψ(N) + 1` points on a circle `|Y| = const` (each lifted to τ by
/// inverting `j`), interpolated by a discrete Fourier transform and rounded.
/// Precision doubles until two consecutive tables agree.
pub fn phi_recover_exact(n: u32, ctx: &PrecisionContext) -> Result<ModularPolynomial> {
    if n == 0 {
        return Err(Error::DomainError("level must be positive".into()));
    }
    if n == 1 {
        return Ok(ModularPolynomial { provenance: Provenance::Recovered, ..ModularPolynomial::level_one() });
    }
    if n > MAX_EXACT_LEVEL {
        return Err(Error::DomainError(format!("exact recovery is limited to levels ≤ {MAX_EXACT_LEVEL}")));
    }
    let mut c = PrecisionContext::new(ctx.bits.max(256));
    c.max_terms = ctx.max_terms;
    let mut prev = recover_at(n, &c).ok();
    while c.bits < MAX_RECOVERY_BITS {
        c = c.doubled();
        let next = recover_at(n, &c).ok();
        if let (Some(a), Some(b)) = (&prev, &next) {
            if a == b && is_symmetric_table(a) {
                return Ok(ModularPolynomial {
                    level: n,
                    coeffs: b.clone(),
                    provenance: Provenance::Recovered,
                });
            }
        }
        prev = next;
    }
    Err(Error::NonConvergence(format!("Φ_{n} coefficients unstable up to {MAX_RECOVERY_BITS} bits")))
}

fn is_symmetric_table(t: &[Vec<BigInt>]) -> bool {
    (0..t.len()).all(|i| (0..t.len()).all(|k| t[i][k] == t[k][i]))
}

/// One recovery pass; `Err` when rounding is not clean.
fn recover_at(n: u32, ctx: &PrecisionContext) -> Result<Vec<Vec<BigInt>>> {
    let deg = psi(n as u64) as usize;
    let k = deg + 1;
    let two_pi = ctx.pi::<Mp>() * ctx.int::<Mp>(2);
    let radius: Mp = ctx.lift(SAMPLE_RADIUS);
    // columns[s][i] = coefficient of Xⁱ at sample s
    let mut columns: Vec<Vec<Complex<Mp>>> = Vec::with_capacity(k);
    for s in 0..k {
        let ang = two_pi.clone() * (ctx.int::<Mp>(2 * s as i64 + 1) / ctx.int::<Mp>(2 * k as i64));
        let (sn, cs) = ang.sin_cos();
        let y = Complex::new(radius.clone() * cs, radius.clone() * sn);
        let tau = j_inverse(&y, ctx)?;
        let roots = sublattice_j_values(n, &tau, ctx)?;
        columns.push(poly_from_roots(&roots));
    }
    let mut table = vec![vec![BigInt::zero(); k]; k];
    let inv_k: Mp = ctx.int::<Mp>(1) / ctx.int::<Mp>(k as i64);
    for i in 0..k {
        for m in 0..k {
            let mut acc = czero::<Mp>();
            for (s, col) in columns.iter().enumerate() {
                let ang = -(two_pi.clone() * ctx.int::<Mp>(m as i64) * (ctx.int::<Mp>(2 * s as i64 + 1) / ctx.int::<Mp>(2 * k as i64)));
                let (sn, cs) = ang.sin_cos();
                acc = acc + col[i].clone() * Complex::new(cs, sn);
            }
            let mut rm = Mp::one();
            for _ in 0..m {
                rm = rm * radius.clone();
            }
            let v = acc.scale_by(&(inv_k.clone() / rm));
            let r = v.re.round_to_bigint().ok_or_else(|| Error::NonConvergence("non-finite coefficient".into()))?;
            let frac = (v.re.clone() - Mp::from_bigint(&r, ctx.bits)).abs().to_f64();
            if frac > 1e-3 || v.im.abs().to_f64() > 1e-3 {
                return Err(Error::NonConvergence("coefficient rounding not clean".into()));
            }
            table[i][m] = r;
        }
    }
    Ok(table)
}

/// Rational function `num(t)/den(t)` over ℤ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMap {
    pub num: IntPoly,
    pub den: IntPoly,
}

impl RationalMap {
    pub fn new(num: IntPoly, den: IntPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DegenerateInput("zero denominator".into()));
        }
        Ok(RationalMap { num, den })
    }

    pub fn polynomial(num: IntPoly) -> Self {
        RationalMap { num, den: IntPoly::constant(BigInt::one()) }
    }

    pub fn eval(&self, t: &BigRational) -> Option<BigRational> {
        let d = self.den.eval(t);
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval(t) / d)
        }
    }

    pub fn eval_complex<R: Real>(&self, t: &Complex<R>, ctx: &PrecisionContext) -> Complex<R> {
        self.num.eval_complex(t, ctx) / self.den.eval_complex(t, ctx)
    }

    pub fn is_constant(&self) -> bool {
        self.num.deg() == 0 && self.den.deg() == 0 || self.num.is_zero()
    }
}

/// Numerator of `Φ(f(t), g(t))` after clearing denominators, primitive with
/// positive leading coefficient.
pub fn phi_specialize(phi: &ModularPolynomial, f: &RationalMap, g: &RationalMap) -> Result<IntPoly> {
    let d = phi.degree() as u32;
    let pow_list = |p: &IntPoly| -> Vec<IntPoly> {
        let mut v = vec![IntPoly::constant(BigInt::one())];
        for _ in 0..d {
            let last = v.last().unwrap().mul(p);
            v.push(last);
        }
        v
    };
    let (fn_, fd) = (pow_list(&f.num), pow_list(&f.den));
    let (gn, gd) = (pow_list(&g.num), pow_list(&g.den));
    let dd = d as usize;
    let mut acc = IntPoly::zero();
    for i in 0..=dd {
        let fi = fn_[i].mul(&fd[dd - i]);
        let mut inner = IntPoly::zero();
        for k in 0..=dd {
            let c = phi.coeff(i, k);
            if c.is_zero() {
                continue;
            }
            inner = inner.add(&gn[k].mul(&gd[dd - k]).scale(c));
        }
        acc = acc.add(&fi.mul(&inner));
    }
    if acc.is_zero() {
        return Err(Error::DegenerateInput("Φ vanishes identically along the curve".into()));
    }
    Ok(acc.primitive())
}

/// Numeric `Φ_N(x, y)` for levels without an exact table: choose τ with
/// `j(τ) = y` and evaluate the sublattice product at `x`.
pub fn phi_eval_at_values<R: Real>(n: u32, x: &Complex<R>, y: &Complex<R>, ctx: &PrecisionContext) -> Result<Complex<R>> {
    let tau = j_inverse(y, ctx)?;
    phi_eval_numeric(n, x, &tau, ctx)
}

/// Coefficient scale of the numeric product, used to judge its residuals:
/// `∏ (|x| + |j_L|)`.
pub fn numeric_scale<R: Real>(n: u32, x: &Complex<R>, tau: &Complex<R>, ctx: &PrecisionContext) -> Result<f64> {
    let xa = x.abs().to_f64();
    Ok(sublattice_j_values(n, tau, ctx)?
        .iter()
        .map(|j| xa + j.abs().to_f64())
        .product())
}
