//! JSON forms of instances and check results. Complex numbers are written as
//! `[re, im]` decimal strings carrying the full working precision.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::complex::ComplexExt;
use crate::context::PrecisionContext;
use crate::error::{Error, Result};
use crate::isogeny::IsogenyWitness;
use crate::matrix::{IntMat2, Mat2};
use crate::periods::{CMat, PeriodKind, StructuredPeriod};
use crate::polyrel::{not_in_i0, relation_polynomial, IdealI0, NonMembership};
use crate::relations::{
    dispatch_case, Coordinate, DegenerateFlag, Gauge, IsogenyLink, RelationInstance, RelationWitness, Role, Way,
};
use crate::scalar::Real;

pub type CNum = [String; 2];
pub type CMatrix = [[CNum; 2]; 2];

/// Significant digits that round-trip a value of `bits` precision.
pub fn digits_for(bits: u32) -> usize {
    (bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 3
}

pub fn c_out<R: Real>(z: &Complex<R>, bits: u32) -> CNum {
    let d = digits_for(bits);
    [z.re.to_decimal(d), z.im.to_decimal(d)]
}

pub fn c_in<R: Real>(z: &CNum, bits: u32) -> Result<Complex<R>> {
    let p = |s: &str| R::from_decimal(s, bits).ok_or_else(|| Error::Parse(format!("not a decimal number: `{s}`")));
    Ok(Complex::new(p(&z[0])?, p(&z[1])?))
}

pub fn m_out<R: Real>(m: &CMat<R>, bits: u32) -> CMatrix {
    [
        [c_out(m.get(0, 0), bits), c_out(m.get(0, 1), bits)],
        [c_out(m.get(1, 0), bits), c_out(m.get(1, 1), bits)],
    ]
}

pub fn m_in<R: Real>(m: &CMatrix, bits: u32) -> Result<CMat<R>> {
    Ok(Mat2::new(c_in(&m[0][0], bits)?, c_in(&m[0][1], bits)?, c_in(&m[1][0], bits)?, c_in(&m[1][1], bits)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FactorDto {
    Cm { varpi: CNum },
    Singular { d: CNum, dprime: CNum, e0: CNum, e0prime: CNum },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateDto {
    pub index: usize,
    /// Value matrix, det 1.
    pub h: CMatrix,
    pub factor: FactorDto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkDto {
    pub source: usize,
    pub target: usize,
    pub degree: i64,
    /// `[a, b, c]` of `A = (a, 0; b, c)`.
    pub de_rham: [CNum; 3],
    /// `[[p, q], [r, s]]`.
    pub homology: [[i64; 2]; 2],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GaugeDto {
    #[serde(default)]
    pub outer: BTreeMap<usize, CMatrix>,
    #[serde(default)]
    pub inner: BTreeMap<usize, CMatrix>,
}

/// A relation instance: coordinates with their period data and two isogenies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDto {
    pub precision_bits: u32,
    pub coords: Vec<CoordinateDto>,
    pub links: Vec<LinkDto>,
    #[serde(default)]
    pub gauge: GaugeDto,
}

impl InstanceDto {
    pub fn from_instance<R: Real>(inst: &RelationInstance<R>, bits: u32) -> Result<Self> {
        let coords = inst
            .coords
            .iter()
            .map(|c| {
                let factor = match &c.period.kind {
                    PeriodKind::Cm { varpi } => FactorDto::Cm { varpi: c_out(varpi, bits) },
                    PeriodKind::Singular { d, dprime, e0, e0prime } => FactorDto::Singular {
                        d: c_out(d, bits),
                        dprime: c_out(dprime, bits),
                        e0: c_out(e0, bits),
                        e0prime: c_out(e0prime, bits),
                    },
                    PeriodKind::Generic => {
                        return Err(Error::UnsupportedConfiguration(format!(
                            "coordinate {} has no structural factor",
                            c.index
                        )))
                    }
                };
                Ok(CoordinateDto { index: c.index, h: m_out(&c.period.h, bits), factor })
            })
            .collect::<Result<Vec<_>>>()?;
        let links = inst
            .links
            .iter()
            .map(|l| LinkDto {
                source: l.source,
                target: l.target,
                degree: l.witness.degree,
                de_rham: [
                    c_out(&l.witness.de_rham[0], bits),
                    c_out(&l.witness.de_rham[1], bits),
                    c_out(&l.witness.de_rham[2], bits),
                ],
                homology: l.witness.homology.m,
            })
            .collect();
        let gauge = GaugeDto {
            outer: inst.gauge.outer.iter().map(|(k, m)| (*k, m_out(m, bits))).collect(),
            inner: inst.gauge.inner.iter().map(|(k, m)| (*k, m_out(m, bits))).collect(),
        };
        Ok(InstanceDto { precision_bits: bits, coords, links, gauge })
    }

    pub fn to_instance<R: Real>(&self, ctx: &PrecisionContext) -> Result<RelationInstance<R>> {
        let bits = ctx.bits;
        let coords = self
            .coords
            .iter()
            .map(|c| {
                let (kind, role) = match &c.factor {
                    FactorDto::Cm { varpi } => (PeriodKind::Cm { varpi: c_in(varpi, bits)? }, Role::Cm),
                    FactorDto::Singular { d, dprime, e0, e0prime } => (
                        PeriodKind::Singular {
                            d: c_in(d, bits)?,
                            dprime: c_in(dprime, bits)?,
                            e0: c_in(e0, bits)?,
                            e0prime: c_in(e0prime, bits)?,
                        },
                        Role::Singular,
                    ),
                };
                Ok(Coordinate { index: c.index, period: StructuredPeriod { h: m_in(&c.h, bits)?, kind }, role })
            })
            .collect::<Result<Vec<_>>>()?;
        let links = self
            .links
            .iter()
            .map(|l| {
                let homology = IntMat2 { m: l.homology };
                if homology.det() != l.degree {
                    return Err(Error::DegenerateInput(format!(
                        "link {}→{}: det of homology is {}, degree is {}",
                        l.source,
                        l.target,
                        homology.det(),
                        l.degree
                    )));
                }
                let de_rham = [c_in(&l.de_rham[0], bits)?, c_in(&l.de_rham[1], bits)?, c_in(&l.de_rham[2], bits)?];
                Ok(IsogenyLink {
                    source: l.source,
                    target: l.target,
                    witness: IsogenyWitness { degree: l.degree, de_rham, homology, residual: 0.0 },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let gauge = Gauge {
            outer: self.gauge.outer.iter().map(|(k, m)| Ok((*k, m_in(m, bits)?))).collect::<Result<_>>()?,
            inner: self.gauge.inner.iter().map(|(k, m)| Ok((*k, m_in(m, bits)?))).collect::<Result<_>>()?,
        };
        RelationInstance::new(coords, links, gauge)
    }
}

/// Polynomial side of a relation check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialSummary {
    pub degree: usize,
    pub homogeneous: bool,
    pub terms: usize,
    pub variables: Vec<String>,
    /// `|R(values)| / Σ|c|·|monomial(values)|`.
    pub vanishing_residual: f64,
    pub non_membership: NonMembership,
}

/// Outcome of [`check_relation`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    /// Case of the two-isogeny classification; absent for a single link.
    pub case: Option<u8>,
    pub way: Way,
    pub h: Vec<CNum>,
    pub rhs_integers: Vec<i64>,
    pub residual: f64,
    pub entry_residuals: Vec<f64>,
    pub degenerate: Vec<DegenerateFlag>,
    pub tolerance: f64,
    /// Identity (or, for a degenerate pair, the vanishing `H`) within tolerance.
    pub holds: bool,
    pub dichotomy_holds: bool,
    /// Absent for a single non-degenerate first-way pair, which has no
    /// homogeneous relation of its own.
    pub polynomial: Option<PolynomialSummary>,
    pub polynomial_note: Option<String>,
}

impl RelationReport {
    /// Every numeric check passed.
    pub fn passes(&self) -> bool {
        let poly_ok = self.polynomial.as_ref().map_or(true, |p| {
            p.homogeneous && p.vanishing_residual < self.tolerance && p.non_membership.is_certificate()
        });
        self.holds && self.dichotomy_holds && poly_ok
    }
}

/// Dispatch an instance, check the identities, build the relation polynomial,
/// check that it vanishes at the instance, and look for a non-membership witness.
pub fn check_relation<R: Real>(
    inst: &RelationInstance<R>,
    attempts: usize,
    seed: u64,
    ctx: &PrecisionContext,
) -> Result<RelationReport> {
    let (case, w) = dispatch_case(inst, ctx)?;
    report_for_witness(Some(case), &w, inst, attempts, seed, ctx)
}

/// As [`check_relation`] for a witness computed directly.
pub fn report_for_witness<R: Real>(
    case: Option<u8>,
    w: &RelationWitness<R>,
    inst: &RelationInstance<R>,
    attempts: usize,
    seed: u64,
    ctx: &PrecisionContext,
) -> Result<RelationReport> {
    let tol = ctx.tol;
    let holds = if w.is_degenerate() {
        w.degenerate.iter().all(|f| f.h_abs < tol) && w.entry_residuals.iter().all(|&e| e < tol)
    } else {
        w.holds(tol)
    };
    let (polynomial, polynomial_note) = match relation_polynomial(w, &inst.gauge, ctx) {
        Ok(r) => {
            let vals = inst.values(ctx)?;
            let scale = r.eval_scale(&vals)?;
            let v = r.evaluate(&vals)?.abs().to_f64();
            let ideal = IdealI0::new(inst.cm_coords());
            (
                Some(PolynomialSummary {
                    degree: r.total_degree(),
                    homogeneous: r.is_homogeneous(),
                    terms: r.len(),
                    variables: r.variables().iter().map(|v| v.to_string()).collect(),
                    vanishing_residual: if scale > 0.0 { v / scale } else { v },
                    non_membership: not_in_i0(&r, &ideal, attempts, seed, ctx)?,
                }),
                None,
            )
        }
        Err(Error::UnsupportedConfiguration(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    Ok(RelationReport {
        case,
        way: w.way,
        h: w.h.iter().map(|z| c_out(z, ctx.bits)).collect(),
        rhs_integers: w.rhs_integers.clone(),
        residual: w.residual,
        entry_residuals: w.entry_residuals.clone(),
        degenerate: w.degenerate.clone(),
        tolerance: tol,
        holds,
        dichotomy_holds: w.dichotomy_holds(tol),
        polynomial,
        polynomial_note,
    })
}
