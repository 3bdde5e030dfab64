//! Lattices, full period matrices with quasi-periods, CM detection and the
//! structural decompositions of period matrices.

use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::complex::{cint, cone, convert, czero, two_pi_i, ComplexExt};
use crate::context::PrecisionContext;
use crate::error::{Error, Result};
use crate::kernel::{eisenstein, reduce_to_fundamental, Sl2};
use crate::matrix::Mat2;
use crate::scalar::Real;

pub type CMat<R> = Mat2<Complex<R>>;

/// Oriented lattice basis `(ω₁, ω₂)` with `Im(ω₂/ω₁) > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice<R: Real> {
    pub omega1: Complex<R>,
    pub omega2: Complex<R>,
}

impl<R: Real> Lattice<R> {
    pub fn new(omega1: Complex<R>, omega2: Complex<R>) -> Result<Self> {
        if omega1.is_zero() {
            return Err(Error::DegenerateInput("omega1 is zero".into()));
        }
        let l = Lattice { omega1, omega2 };
        if l.tau().im <= R::zero() {
            return Err(Error::DomainError("basis is not positively oriented".into()));
        }
        Ok(l)
    }

    /// The lattice `ℤ + ℤτ`.
    pub fn from_tau(tau: Complex<R>, ctx: &PrecisionContext) -> Result<Self> {
        Self::new(cint(ctx, 1), tau)
    }

    pub fn tau(&self) -> Complex<R> {
        self.omega2.clone() / self.omega1.clone()
    }

    pub fn scaled(&self, lambda: &Complex<R>) -> Self {
        Lattice {
            omega1: self.omega1.clone() * lambda.clone(),
            omega2: self.omega2.clone() * lambda.clone(),
        }
    }

    /// Basis change `(ω₁', ω₂') = (ω₁, ω₂)·G`.
    pub fn rebased(&self, g: &Mat2<i64>, ctx: &PrecisionContext) -> Self {
        let gc = g.to_complex::<R>(ctx.bits);
        let [w1, w2] = gc.left_mul_row(&[self.omega1.clone(), self.omega2.clone()]);
        Lattice { omega1: w1, omega2: w2 }
    }
}

/// Basis matrix `G` with `(ω₁', ω₂') = (ω₁, ω₂)·G` realizing `τ' = γ·τ`.
pub fn basis_change(gamma: &Sl2) -> Mat2<i64> {
    let [[a, b], [c, d]] = *gamma;
    Mat2::new(d, b, c, a)
}

/// Rows: first-kind integrals `(ω₁, ω₂)`, second-kind integrals of `x dx/y`.
#[derive(Clone, Debug, PartialEq)]
pub struct FullPeriodMatrix<R: Real> {
    pub p: CMat<R>,
    /// `|det p − 2πi|`.
    pub legendre_residual: f64,
}

impl<R: Real> FullPeriodMatrix<R> {
    pub fn omega(&self) -> [Complex<R>; 2] {
        self.p.row(0)
    }

    /// Quasi-periods `η(γ) = −∫_γ x dx/y`.
    pub fn eta(&self) -> [Complex<R>; 2] {
        let [a, b] = self.p.row(1);
        [-a, -b]
    }
}

/// `(τ_reduced, γ)` with `τ_reduced = γ·τ`.
pub fn reduce_tau<R: Real>(tau: &Complex<R>, ctx: &PrecisionContext) -> Result<(Complex<R>, Sl2)> {
    reduce_to_fundamental(tau, ctx)
}

/// `η(ω₁) = π²·E₂(τ)/(3ω₁)` for the oriented basis with ratio τ.
fn eta_first<R: Real>(omega1: &Complex<R>, tau: &Complex<R>, ctx: &PrecisionContext) -> Result<Complex<R>> {
    let pi = ctx.pi::<R>();
    let e2 = eisenstein(2, tau, ctx)?;
    Ok(e2.scale_by(&(pi.clone() * pi)) / (omega1.clone() * cint::<R>(ctx, 3)))
}

/// Full period matrix of `ℂ/Λ` for the curve `y² = 4x³ − g₂x − g₃`.
///
/// Both quasi-periods are evaluated on the reduced basis from their own
/// q-series (`E₂(τ')` and `E₂(−1/τ')`), so the Legendre relation is a check
/// on the result rather than an input to it.
pub fn full_period_matrix<R: Real>(lat: &Lattice<R>, ctx: &PrecisionContext) -> Result<FullPeriodMatrix<R>> {
    let (tau_r, gamma) = reduce_tau(&lat.tau(), ctx)?;
    let g = basis_change(&gamma);
    let red = lat.rebased(&g, ctx);
    let eta1 = eta_first(&red.omega1, &tau_r, ctx)?;
    // (ω₂', −ω₁') is again oriented with ratio −1/τ'
    let tau_s = -(cone::<R>() / tau_r);
    let eta2 = eta_first(&red.omega2, &tau_s, ctx)?;
    let ginv = g.adjugate().to_complex::<R>(ctx.bits);
    let [q1, q2] = ginv.left_mul_row(&[-eta1, -eta2]);
    let p = Mat2::new(lat.omega1.clone(), lat.omega2.clone(), q1, q2);
    let legendre_residual = (p.det() - two_pi_i::<R>(ctx)).abs().to_f64();
    Ok(FullPeriodMatrix { p, legendre_residual })
}

/// Weierstrass invariants `(g₂, g₃) = (60·G₄, 140·G₆)` of the lattice.
pub fn weierstrass_invariants<R: Real>(lat: &Lattice<R>, ctx: &PrecisionContext) -> Result<(Complex<R>, Complex<R>)> {
    let (tau_r, gamma) = reduce_tau(&lat.tau(), ctx)?;
    let w = lat.rebased(&basis_change(&gamma), ctx).omega1;
    let pi = ctx.pi::<R>();
    let pi2 = pi.clone() * pi;
    let pi4 = pi2.clone() * pi2.clone();
    let pi6 = pi4.clone() * pi2;
    let e4 = eisenstein(4, &tau_r, ctx)?;
    let e6 = eisenstein(6, &tau_r, ctx)?;
    let c4 = pi4 * ctx.int::<R>(4) / ctx.int::<R>(3);
    let c6 = pi6 * ctx.int::<R>(8) / ctx.int::<R>(27);
    Ok((e4.scale_by(&c4) / w.powu(4), e6.scale_by(&c6) / w.powu(6)))
}

/// Integral binary quadratic form `Aτ² + Bτ + C` vanishing at τ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmCertificate {
    pub disc: i64,
    pub coeffs: (i64, i64, i64),
    pub residual: f64,
}

/// Search for a primitive form with `A ≤ bound` (and `|B|, |C| ≤ bound`)
/// vanishing at τ up to `√tol·max(|A|,|B|,|C|)`; the smallest `|D|` wins.
pub fn detect_cm<R: Real>(tau: &Complex<R>, bound: i64, ctx: &PrecisionContext) -> Option<CmCertificate> {
    if tau.im <= R::zero() || bound < 1 {
        return None;
    }
    let norm = tau.norm_sqr();
    let twice_re = tau.re.clone() * ctx.int::<R>(2);
    let mut best: Option<CmCertificate> = None;
    for a in 1..=bound {
        let ar = ctx.int::<R>(a);
        let b = (-(ar.clone() * twice_re.clone())).round_to_bigint().and_then(|x| x.to_i64());
        let c = (ar.clone() * norm.clone()).round_to_bigint().and_then(|x| x.to_i64());
        let (Some(b), Some(c)) = (b, c) else { continue };
        if b.abs() > bound || c.abs() > bound || a.gcd(&b).gcd(&c) != 1 {
            continue;
        }
        let disc = b * b - 4 * a * c;
        if disc >= 0 {
            continue;
        }
        let val = tau.clone() * tau.clone() * cint::<R>(ctx, a) + tau.clone() * cint::<R>(ctx, b) + cint(ctx, c);
        let residual = val.abs().to_f64();
        let scale = a.max(b.abs()).max(c.abs()) as f64;
        if residual < ctx.sqrt_tol() * scale && best.as_ref().map_or(true, |x| disc.abs() < x.disc.abs()) {
            best = Some(CmCertificate { disc, coeffs: (a, b, c), residual });
        }
    }
    best
}

/// Structural factor a value matrix was peeled from.
#[derive(Clone, Debug, PartialEq)]
pub enum PeriodKind<R: Real> {
    /// Factor `diag(ϖ/2πi, 1/ϖ)`.
    Cm { varpi: Complex<R> },
    /// Factor `(d, e₀; d′, e₀′)`.
    Singular { d: Complex<R>, dprime: Complex<R>, e0: Complex<R>, e0prime: Complex<R> },
    Generic,
}

/// Value matrix `h` (det 1) together with its structural factor.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuredPeriod<R: Real> {
    pub h: CMat<R>,
    pub kind: PeriodKind<R>,
}

impl<R: Real> StructuredPeriod<R> {
    pub fn structural_factor(&self, ctx: &PrecisionContext) -> CMat<R> {
        match &self.kind {
            PeriodKind::Cm { varpi } => cm_factor(varpi, ctx),
            PeriodKind::Singular { d, dprime, e0, e0prime } => {
                Mat2::new(d.clone(), e0.clone(), dprime.clone(), e0prime.clone())
            }
            PeriodKind::Generic => Mat2::identity(),
        }
    }

    /// `h · (structural factor)`.
    pub fn reassemble(&self, ctx: &PrecisionContext) -> CMat<R> {
        &self.h * &self.structural_factor(ctx)
    }

    pub fn varpi(&self) -> Option<&Complex<R>> {
        match &self.kind {
            PeriodKind::Cm { varpi } => Some(varpi),
            _ => None,
        }
    }

    pub fn convert<S: Real>(&self, bits: u32) -> StructuredPeriod<S> {
        let c = |z: &Complex<R>| convert::<R, S>(z, bits);
        let kind = match &self.kind {
            PeriodKind::Cm { varpi } => PeriodKind::Cm { varpi: c(varpi) },
            PeriodKind::Singular { d, dprime, e0, e0prime } => PeriodKind::Singular {
                d: c(d),
                dprime: c(dprime),
                e0: c(e0),
                e0prime: c(e0prime),
            },
            PeriodKind::Generic => PeriodKind::Generic,
        };
        StructuredPeriod { h: self.h.map(c), kind }
    }
}

/// `diag(ϖ/2πi, 1/ϖ)`.
pub fn cm_factor<R: Real>(varpi: &Complex<R>, ctx: &PrecisionContext) -> CMat<R> {
    Mat2::diag(varpi.clone() / two_pi_i::<R>(ctx), cone::<R>() / varpi.clone())
}

/// Peel `P/(2πi) = h·diag(ϖ/2πi, 1/ϖ)` with `ϖ = ω₁`, so `h₁₁ = 1`.
pub fn decompose_cm<R: Real>(pm: &FullPeriodMatrix<R>, ctx: &PrecisionContext) -> Result<StructuredPeriod<R>> {
    let tpi = two_pi_i::<R>(ctx);
    let scaled = pm.p.map(|z| z.clone() / tpi.clone());
    if scaled.get(0, 0).abs().to_f64() <= ctx.tol {
        return Err(Error::DegenerateInput("first-kind period vanishes".into()));
    }
    let varpi = scaled.get(0, 0).clone() * tpi.clone();
    let right = Mat2::diag(tpi / varpi.clone(), varpi.clone());
    let mut h = &scaled * &right;
    h.m[0][0] = cone();
    Ok(StructuredPeriod { h, kind: PeriodKind::Cm { varpi } })
}

/// `(d, e₀; d′, e₀′)` with `e₀ = d·N·log x + e`, `e₀′ = d′·N·log x + e′`.
pub fn make_singular_structure<R: Real>(
    d: &Complex<R>,
    dprime: &Complex<R>,
    e: &Complex<R>,
    eprime: &Complex<R>,
    n: &BigRational,
    logx: &Complex<R>,
    ctx: &PrecisionContext,
) -> Result<CMat<R>> {
    let nl = logx.scale_by(&R::from_ratio(n, ctx.bits));
    let e0 = d.clone() * nl.clone() + e.clone();
    let e0p = dprime.clone() * nl + eprime.clone();
    let s = Mat2::new(d.clone(), e0, dprime.clone(), e0p);
    if s.det().abs().to_f64() <= ctx.tol {
        return Err(Error::DegenerateInput("singular structural matrix".into()));
    }
    Ok(s)
}

/// Wrap a value matrix and a singular structural matrix.
pub fn singular_period<R: Real>(h: CMat<R>, s: &CMat<R>) -> StructuredPeriod<R> {
    StructuredPeriod {
        h,
        kind: PeriodKind::Singular {
            d: s.get(0, 0).clone(),
            dprime: s.get(1, 0).clone(),
            e0: s.get(0, 1).clone(),
            e0prime: s.get(1, 1).clone(),
        },
    }
}

/// Zero matrix helper for callers assembling matrices entrywise.
pub fn zero_mat<R: Real>() -> CMat<R> {
    Mat2::new(czero(), czero(), czero(), czero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::cx;
    use crate::scalar::Mp;

    #[test]
    fn reduce_tau_examples() {
        let c = PrecisionContext::default();
        let (t, g) = reduce_tau::<Mp>(&cx(&c, 0.0, 0.5), &c).unwrap();
        assert!((t - cx::<Mp>(&c, 0.0, 2.0)).abs().to_f64() < c.tol);
        assert_eq!(g, [[0, -1], [1, 0]]);
    }

    #[test]
    fn square_lattice_cm_and_gauge() {
        let c = PrecisionContext::default();
        let lat = Lattice::<Mp>::from_tau(cx(&c, 0.0, 1.0), &c).unwrap();
        let pm = full_period_matrix(&lat, &c).unwrap();
        assert!(pm.legendre_residual < c.tol);
        let sp = decompose_cm(&pm, &c).unwrap();
        assert_eq!(sp.varpi().unwrap(), &lat.omega1);
        assert!((sp.h.det() - cone::<Mp>()).abs().to_f64() < c.tol);
        let cert = detect_cm(&lat.tau(), 10, &c).unwrap();
        assert_eq!((cert.disc, cert.coeffs), (-4, (1, 0, 1)));
    }

    #[test]
    fn singular_structure_identity_and_log_term() {
        let c = PrecisionContext::default();
        let one: Complex<Mp> = cx(&c, 1.0, 0.0);
        let zero: Complex<Mp> = cx(&c, 0.0, 0.0);
        let s = make_singular_structure(&one, &zero, &zero, &one, &BigRational::zero(), &cx(&c, 3.0, 1.0), &c).unwrap();
        assert_eq!(s, Mat2::identity().map(|z: &Complex<Mp>| z.clone() + zero.clone()));
        let l: Complex<Mp> = cx(&c, 0.25, -2.0);
        let s = make_singular_structure(&one, &zero, &zero, &one, &BigRational::from_integer(1.into()), &l, &c).unwrap();
        assert!((s.get(0, 1).clone() - l.clone()).abs().to_f64() < c.tol);
        let err = make_singular_structure(&zero, &zero, &one, &one, &BigRational::zero(), &l, &c);
        assert!(matches!(err, Err(Error::DegenerateInput(_))));
    }
}
