//! Cyclic isogenies realized as lattice inclusions, with the integer
//! homology matrix and the triangular de Rham matrix relating the two full
//! period matrices through `A·P₁ = P₂·B`.
//!
//! For a cyclic sublattice `Λ′ ⊂ Λ` of index `M` the isogeny used is
//! `ℂ/Λ → ℂ/Λ′, z ↦ Mz`. It pulls back `dz` to `M·dz`, so `a = M` in the de
//! Rham matrix, and `B` expresses `M·(ω₁, ω₂)` in the target basis.

use num_complex::Complex;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::complex::ComplexExt;
use crate::context::PrecisionContext;
use crate::error::{Error, Result};
use crate::kernel::reduce_to_fundamental;
use crate::matrix::{IntMat2, Mat2};
use crate::periods::{basis_change, full_period_matrix, CMat, FullPeriodMatrix, Lattice};
use crate::scalar::Real;

/// Hermite normal form `(a, b; 0, d)` of a cyclic index-`M` sublattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CyclicSublattice {
    pub a: i64,
    pub b: i64,
    pub d: i64,
}

impl CyclicSublattice {
    pub fn degree(&self) -> i64 {
        self.a * self.d
    }

    /// Generators `(aω₁ + bω₂, dω₂)`.
    pub fn basis<R: Real>(&self, lat: &Lattice<R>, ctx: &PrecisionContext) -> Lattice<R> {
        let g = IntMat2::new(self.a, 0, self.b, self.d);
        lat.rebased(&g, ctx)
    }

    /// `τ` of the sublattice of `ℤ + ℤτ`: `dτ/(a + bτ)`.
    pub fn tau_image<R: Real>(&self, tau: &Complex<R>, ctx: &PrecisionContext) -> Complex<R> {
        let num = tau.scale_by(&ctx.int::<R>(self.d));
        let den = tau.scale_by(&ctx.int::<R>(self.b)) + Complex::new(ctx.int::<R>(self.a), R::zero());
        num / den
    }
}

/// `ψ(M) = M·∏_{p|M} (1 + 1/p)`.
pub fn psi(m: u64) -> u64 {
    let mut n = m;
    let mut out = m;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out = out / p * (p + 1);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out = out / n * (n + 1);
    }
    out
}

/// All primitive HNF triples with `a·d = M`, `0 ≤ b < d`.
pub fn cyclic_sublattices(m: i64) -> Vec<CyclicSublattice> {
    assert!(m >= 1, "degree must be positive");
    let mut out = Vec::new();
    for a in 1..=m {
        if m % a != 0 {
            continue;
        }
        let d = m / a;
        for b in 0..d {
            if a.gcd(&b).gcd(&d) == 1 {
                out.push(CyclicSublattice { a, b, d });
            }
        }
    }
    out
}

/// Target lattice with a reduced oriented basis, and the homology matrix
/// `B = (p, q; r, s)` with `M·(ω₁, ω₂) = (ω₁′, ω₂′)·B`.
pub fn isogeny_pair<R: Real>(
    lat: &Lattice<R>,
    sub: &CyclicSublattice,
    ctx: &PrecisionContext,
) -> Result<(Lattice<R>, IntMat2)> {
    let hnf = sub.basis(lat, ctx);
    let b_hnf = IntMat2::new(sub.d, 0, -sub.b, sub.a);
    let (_, gamma) = reduce_to_fundamental(&hnf.tau(), ctx)?;
    let g = basis_change(&gamma);
    let target = hnf.rebased(&g, ctx);
    Ok((target, &g.adjugate() * &b_hnf))
}

/// Isogeny data for `A·P₁ = P₂·B` with `A = (a, 0; b, c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsogenyWitness<R: Real> {
    pub degree: i64,
    pub de_rham: [Complex<R>; 3],
    pub homology: IntMat2,
    pub residual: f64,
}

impl<R: Real> IsogenyWitness<R> {
    pub fn a_matrix(&self) -> CMat<R> {
        let [a, b, c] = self.de_rham.clone();
        Mat2::new(a, Complex::new(R::zero(), R::zero()), b, c)
    }

    pub fn b_matrix(&self, ctx: &PrecisionContext) -> CMat<R> {
        self.homology.to_complex(ctx.bits)
    }

    /// Witness for the dual direction: `adj(A)·P₂ = P₁·adj(B)`.
    pub fn dual(&self) -> Self {
        let [a, b, c] = self.de_rham.clone();
        IsogenyWitness {
            degree: self.degree,
            de_rham: [c, -b, a],
            homology: self.homology.adjugate(),
            residual: self.residual,
        }
    }

    pub fn pqrs(&self) -> [i64; 4] {
        self.homology.entries()
    }
}

/// Solve `A = P₂·B·P₁⁻¹` and check it is lower triangular.
pub fn solve_de_rham<R: Real>(
    p1: &FullPeriodMatrix<R>,
    p2: &FullPeriodMatrix<R>,
    homology: &IntMat2,
    ctx: &PrecisionContext,
) -> Result<[Complex<R>; 3]> {
    if p1.p.det().abs().to_f64() <= ctx.tol {
        return Err(Error::DegenerateInput("source period matrix is singular".into()));
    }
    let inv = p1.p.inverse().ok_or_else(|| Error::DegenerateInput("singular P1".into()))?;
    let a = &(&p2.p * &homology.to_complex(ctx.bits)) * &inv;
    let scale = a.max_norm().to_f64().max(1.0);
    let upper = a.get(0, 1).abs().to_f64();
    if upper > ctx.tol * scale {
        return Err(Error::StructureViolation(format!(
            "de Rham matrix has (1,2) entry {upper:e}; homology does not match the lattices"
        )));
    }
    Ok([a.get(0, 0).clone(), a.get(1, 0).clone(), a.get(1, 1).clone()])
}

/// Outcome of checking `A·P₁ = P₂·B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsogenyCheck {
    /// `‖A·P₁ − P₂·B‖_max`.
    pub residual: f64,
    /// `‖P₂‖_max`, the scale the residual is judged against.
    pub p2_norm: f64,
    /// `|a·c − M|`.
    pub de_rham_det_defect: f64,
    /// `p·s − q·r`, exact.
    pub homology_det: i64,
}

impl IsogenyCheck {
    pub fn passes(&self, degree: i64, tol: f64) -> bool {
        self.residual < tol * self.p2_norm.max(1.0) && self.de_rham_det_defect < tol && self.homology_det == degree
    }
}

pub fn verify_isogeny<R: Real>(
    w: &IsogenyWitness<R>,
    p1: &FullPeriodMatrix<R>,
    p2: &FullPeriodMatrix<R>,
    ctx: &PrecisionContext,
) -> IsogenyCheck {
    let a = w.a_matrix();
    let lhs = &a * &p1.p;
    let rhs = &p2.p * &w.b_matrix(ctx);
    let m = Complex::new(ctx.int::<R>(w.degree), R::zero());
    IsogenyCheck {
        residual: lhs.sub(&rhs).max_norm().to_f64(),
        p2_norm: p2.p.max_norm().to_f64(),
        de_rham_det_defect: (a.det() - m).abs().to_f64(),
        homology_det: w.homology.det(),
    }
}

/// Everything produced for one sublattice of one lattice.
#[derive(Clone, Debug)]
pub struct IsogenyRun<R: Real> {
    pub sub: CyclicSublattice,
    pub target: Lattice<R>,
    pub p1: FullPeriodMatrix<R>,
    pub p2: FullPeriodMatrix<R>,
    pub witness: IsogenyWitness<R>,
    pub check: IsogenyCheck,
}

/// Full pipeline: target lattice, both period matrices, `A`, and the check.
pub fn isogeny_witness<R: Real>(
    lat: &Lattice<R>,
    sub: &CyclicSublattice,
    ctx: &PrecisionContext,
) -> Result<IsogenyRun<R>> {
    let p1 = full_period_matrix(lat, ctx)?;
    isogeny_witness_with(lat, &p1, sub, ctx)
}

/// As [`isogeny_witness`] with the source period matrix already known.
pub fn isogeny_witness_with<R: Real>(
    lat: &Lattice<R>,
    p1: &FullPeriodMatrix<R>,
    sub: &CyclicSublattice,
    ctx: &PrecisionContext,
) -> Result<IsogenyRun<R>> {
    let (target, homology) = isogeny_pair(lat, sub, ctx)?;
    let p2 = full_period_matrix(&target, ctx)?;
    let de_rham = solve_de_rham(p1, &p2, &homology, ctx)?;
    let mut witness = IsogenyWitness { degree: sub.degree(), de_rham, homology, residual: 0.0 };
    let check = verify_isogeny(&witness, p1, &p2, ctx);
    witness.residual = check.residual;
    Ok(IsogenyRun { sub: *sub, target, p1: p1.clone(), p2, witness, check })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_values() {
        assert_eq!(psi(1), 1);
        assert_eq!(psi(2), 3);
        assert_eq!(psi(12), 24);
        assert_eq!(cyclic_sublattices(12).len(), 24);
    }

    #[test]
    fn dual_composes_to_scalar() {
        let b = IntMat2::new(2, 0, -1, 1);
        let w = IsogenyWitness::<f64> {
            degree: 2,
            de_rham: [Complex::new(2.0, 0.0), Complex::new(0.3, 0.1), Complex::new(1.0, 0.0)],
            homology: b,
            residual: 0.0,
        };
        let d = w.dual();
        assert_eq!(&d.homology * &w.homology, IntMat2::diag(2, 2));
        let prod = &d.a_matrix() * &w.a_matrix();
        assert!(prod.sub(&Mat2::diag(Complex::new(2.0, 0.0), Complex::new(2.0, 0.0))).max_norm() < 1e-15);
    }
}
