//! H-vector relations at points with unlikely isogenies.
//!
//! Value matrices `h_k` (det 1) are the period data of each coordinate with
//! its structural factor peeled off: `diag(ϖ/2πi, 1/ϖ)` for CM coordinates
//! and `S_k = (d, e₀; d′, e₀′)` (det `1/2πi`) for singular ones. An isogeny
//! from coordinate `k` to coordinate `l` with de Rham matrix `A = (a,0;b,c)`
//! and homology matrix `B` gives `A·h_k·F_k = h_l·F_l·B`.
//!
//! * first way (singular `k`, CM source `3`): `A·h₃·D₀ = h_k·S_k·B`. The
//!   cofactor row `ρ = (−u₂, u₁)` of the first column `u` of `h_k·S_k` kills
//!   that column, so `H = ρ·A·h₃` satisfies `H₁ϖ₀/2πi = r/2πi`,
//!   `H₂/ϖ₀ = s/2πi` and `H₁H₂ = rs/2πi`.
//! * second way (both CM): rows `(h₃₂₂, −h₃₁₂)` and `(−h₃₂₁, h₃₁₁)` give
//!   `H₁H₂H₃H₄ = pqrs`.
//!
//! `H` depends only on `u` and `h₃`, never on how `h` is split as `Π·h̃`, so
//! gauge changes move the variable values `h̃` and the polynomial
//! coefficients but not `H`.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complex::{cint, cone, czero, two_pi_i, ComplexExt};
use crate::context::PrecisionContext;
use crate::error::{Error, Result};
use crate::isogeny::{cyclic_sublattices, isogeny_witness, IsogenyRun, IsogenyWitness};
use crate::kernel::j_invariant;
use crate::matrix::{IntMat2, Mat2};
use crate::periods::{
    cm_factor, decompose_cm, make_singular_structure, singular_period, CMat, Lattice, PeriodKind, StructuredPeriod,
};
use crate::polyrel::{assign_column, assign_matrix, Var};
use crate::scalar::Real;

/// Ring operations needed to evaluate the H formulas both on numbers and on
/// polynomials.
pub trait RingOps: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {}
impl<T: Clone + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>> RingOps for T {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GVariant {
    /// Row `(h₂₂, −h₁₂)` through `A`: `(a·h₂₂ − b·h₁₂, −c·h₁₂)`.
    Top,
    /// Row `(−h₂₁, h₁₁)` through `A`: `(−a·h₂₁ + b·h₁₁, c·h₁₁)`.
    Bottom,
}

pub fn g_vector<T: RingOps>(h: &[[T; 2]; 2], a: &T, b: &T, c: &T, variant: GVariant) -> [T; 2] {
    match variant {
        GVariant::Top => [
            a.clone() * h[1][1].clone() - b.clone() * h[0][1].clone(),
            -(c.clone() * h[0][1].clone()),
        ],
        GVariant::Bottom => [
            b.clone() * h[0][0].clone() - a.clone() * h[1][0].clone(),
            c.clone() * h[0][0].clone(),
        ],
    }
}

fn row_times<T: RingOps>(g: &[T; 2], m: &[[T; 2]; 2]) -> [T; 2] {
    [
        g[0].clone() * m[0][0].clone() + g[1].clone() * m[1][0].clone(),
        g[0].clone() * m[0][1].clone() + g[1].clone() * m[1][1].clone(),
    ]
}

/// `(H₁, H₂) = ρ·A·h₃` with `ρ = (−u₂, u₁)`.
pub fn first_way_h<T: RingOps>(u: &[T; 2], abc: &[T; 3], h3: &[[T; 2]; 2]) -> [T; 2] {
    let [a, b, c] = abc;
    let rho_a = [b.clone() * u[0].clone() - a.clone() * u[1].clone(), c.clone() * u[0].clone()];
    row_times(&rho_a, h3)
}

/// `[H₁, H₂, H₃, H₄]`: `(H₃, H₄)` from the top g-vector, `(H₁, H₂)` from the
/// bottom one, both against `h₂`.
pub fn second_way_h<T: RingOps>(h2: &[[T; 2]; 2], h3: &[[T; 2]; 2], abc: &[T; 3]) -> [T; 4] {
    let [a, b, c] = abc;
    let [h3v, h4v] = row_times(&g_vector(h3, a, b, c, GVariant::Top), h2);
    let [h1v, h2v] = row_times(&g_vector(h3, a, b, c, GVariant::Bottom), h2);
    [h1v, h2v, h3v, h4v]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Cm,
    Singular,
}

/// One coordinate of the point: index `k`, value matrix and role.
#[derive(Clone, Debug, PartialEq)]
pub struct Coordinate<R: Real> {
    pub index: usize,
    pub period: StructuredPeriod<R>,
    pub role: Role,
}

/// Isogeny from coordinate `source` to `target`:
/// `A·P_source = P_target·B`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsogenyLink<R: Real> {
    pub source: usize,
    pub target: usize,
    pub witness: IsogenyWitness<R>,
}

/// Change-of-basis matrices `Π_{k,1}` (outer) and `Π_{k,2}` (inner) with
/// `h_k = Π_{k,1}·Π_{k,2}·h̃_k`; missing entries are the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Gauge<R: Real> {
    pub outer: BTreeMap<usize, CMat<R>>,
    pub inner: BTreeMap<usize, CMat<R>>,
}

impl<R: Real> Default for Gauge<R> {
    fn default() -> Self {
        Gauge { outer: BTreeMap::new(), inner: BTreeMap::new() }
    }
}

impl<R: Real> Gauge<R> {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Independent random `SL₂(ℂ)` matrices for every listed coordinate.
    pub fn random(coords: impl IntoIterator<Item = usize>, seed: u64, ctx: &PrecisionContext) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = Self::default();
        for k in coords {
            g.outer.insert(k, random_sl2(&mut rng, ctx));
            g.inner.insert(k, random_sl2(&mut rng, ctx));
        }
        g
    }

    pub fn outer(&self, k: usize) -> CMat<R> {
        self.outer.get(&k).cloned().unwrap_or_else(Mat2::identity)
    }

    pub fn inner(&self, k: usize) -> CMat<R> {
        self.inner.get(&k).cloned().unwrap_or_else(Mat2::identity)
    }

    /// `Π_k = Π_{k,1}·Π_{k,2}`.
    pub fn pi(&self, k: usize) -> CMat<R> {
        &self.outer(k) * &self.inner(k)
    }
}

/// A point with unlikely isogenies, reduced to the data the relations use.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationInstance<R: Real> {
    pub coords: Vec<Coordinate<R>>,
    pub links: Vec<IsogenyLink<R>>,
    pub gauge: Gauge<R>,
}

impl<R: Real> RelationInstance<R> {
    pub fn new(coords: Vec<Coordinate<R>>, links: Vec<IsogenyLink<R>>, gauge: Gauge<R>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for c in &coords {
            if !seen.insert(c.index) {
                return Err(Error::DegenerateInput(format!("coordinate {} listed twice", c.index)));
            }
            let consistent = matches!(
                (&c.role, &c.period.kind),
                (Role::Cm, PeriodKind::Cm { .. }) | (Role::Singular, PeriodKind::Singular { .. })
            );
            if !consistent {
                return Err(Error::StructureViolation(format!(
                    "coordinate {} has role {:?} but a different structural factor",
                    c.index, c.role
                )));
            }
        }
        for l in &links {
            if l.source == l.target {
                return Err(Error::DegenerateInput("an isogeny must connect two distinct coordinates".into()));
            }
            if !seen.contains(&l.source) || !seen.contains(&l.target) {
                return Err(Error::DegenerateInput(format!("isogeny {}→{} names an unknown coordinate", l.source, l.target)));
            }
        }
        Ok(RelationInstance { coords, links, gauge })
    }

    pub fn coord(&self, k: usize) -> Result<&Coordinate<R>> {
        self.coords
            .iter()
            .find(|c| c.index == k)
            .ok_or_else(|| Error::DegenerateInput(format!("no coordinate {k}")))
    }

    pub fn with_gauge(&self, gauge: Gauge<R>) -> Self {
        RelationInstance { gauge, ..self.clone() }
    }

    pub fn cm_coords(&self) -> BTreeSet<usize> {
        self.coords.iter().filter(|c| c.role == Role::Cm).map(|c| c.index).collect()
    }

    /// Values of the variables `X_{i,j,k}`: `h̃_k = Π_k⁻¹·h_k` for CM
    /// coordinates and `Π_{k,1}⁻¹·(first column of h_k·S_k)` for singular ones.
    pub fn values(&self, ctx: &PrecisionContext) -> Result<BTreeMap<Var, Complex<R>>> {
        let mut out = BTreeMap::new();
        for c in &self.coords {
            match c.role {
                Role::Cm => {
                    let inv = inverse(&self.gauge.pi(c.index))?;
                    assign_matrix(c.index, &(&inv * &c.period.h), &mut out);
                }
                Role::Singular => {
                    let inv = inverse(&self.gauge.outer(c.index))?;
                    let col = c.period.reassemble(ctx).col(0);
                    assign_column(c.index, &inv.left_mul_col(&col), &mut out);
                }
            }
        }
        Ok(out)
    }
}

trait ColMul<R: Real> {
    fn left_mul_col(&self, v: &[Complex<R>; 2]) -> [Complex<R>; 2];
}

impl<R: Real> ColMul<R> for CMat<R> {
    fn left_mul_col(&self, v: &[Complex<R>; 2]) -> [Complex<R>; 2] {
        let m = &self.m;
        [
            m[0][0].clone() * v[0].clone() + m[0][1].clone() * v[1].clone(),
            m[1][0].clone() * v[0].clone() + m[1][1].clone() * v[1].clone(),
        ]
    }
}

fn inverse<R: Real>(m: &CMat<R>) -> Result<CMat<R>> {
    if m.det().abs().is_zero() {
        return Err(Error::DegenerateInput("gauge matrix is singular".into()));
    }
    m.inverse().ok_or_else(|| Error::DegenerateInput("gauge matrix is singular".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Way {
    FirstWay,
    SecondWay,
    FourCoordinate,
}

/// An integer on the right-hand side that vanished, with the H it forces to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerateFlag {
    /// Name of the vanishing integer (`p`, `q`, `r` or `s`, with a pair
    /// suffix for combined relations).
    pub integer: String,
    /// 1-based index into [`RelationWitness::h`].
    pub h_index: usize,
    pub h_abs: f64,
}

/// First-way data needed to rebuild the relation as a polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct PairData<R: Real> {
    pub sing: usize,
    pub cm: usize,
    pub abc: [Complex<R>; 3],
    pub r: i64,
    pub s: i64,
}

/// Second-way data: isogeny from `source` (periods `ϖ′`) to `target` (`ϖ`).
#[derive(Clone, Debug, PartialEq)]
pub struct CmPairData<R: Real> {
    pub source: usize,
    pub target: usize,
    pub abc: [Complex<R>; 3],
    pub pqrs: [i64; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub enum Construction<R: Real> {
    FirstWay(PairData<R>),
    SecondWay(CmPairData<R>),
    FourCoordinate(PairData<R>, PairData<R>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationWitness<R: Real> {
    pub way: Way,
    pub h: Vec<Complex<R>>,
    pub rhs_integers: Vec<i64>,
    /// `|lhs − rhs|` of the product identity.
    pub residual: f64,
    /// Residuals of the entrywise identities the product is built from.
    pub entry_residuals: Vec<f64>,
    pub degenerate: Vec<DegenerateFlag>,
    pub construction: Construction<R>,
}

impl<R: Real> RelationWitness<R> {
    /// Product identity and every entry identity within `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.residual < tol && self.entry_residuals.iter().all(|&e| e < tol)
    }

    /// Either a vanishing integer forced its H to vanish, or the product
    /// identity holds.
    pub fn dichotomy_holds(&self, tol: f64) -> bool {
        self.degenerate.iter().any(|f| f.h_abs < tol) || self.residual < tol
    }

    pub fn is_degenerate(&self) -> bool {
        !self.degenerate.is_empty()
    }
}

fn abc_of<R: Real>(w: &IsogenyWitness<R>) -> [Complex<R>; 3] {
    w.de_rham.clone()
}

fn check_det_one<R: Real>(c: &Coordinate<R>, ctx: &PrecisionContext) -> Result<()> {
    let defect = (c.period.h.det() - cone::<R>()).abs().to_f64();
    if defect > ctx.sqrt_tol() {
        return Err(Error::DegenerateInput(format!(
            "value matrix of coordinate {} has det − 1 = {defect:e}",
            c.index
        )));
    }
    Ok(())
}

/// First-way relation for a singular coordinate and a CM coordinate.
///
/// `iso` must satisfy `A·P_cm = P_sing·B`; use [`IsogenyWitness::dual`] for
/// the opposite direction.
pub fn first_way<R: Real>(
    sing: &Coordinate<R>,
    cm: &Coordinate<R>,
    iso: &IsogenyWitness<R>,
    ctx: &PrecisionContext,
) -> Result<RelationWitness<R>> {
    if sing.role != Role::Singular || cm.role != Role::Cm {
        return Err(Error::StructureViolation("first way needs a singular and a CM coordinate".into()));
    }
    let s_mat = sing.period.structural_factor(ctx);
    if s_mat.det().abs().to_f64() <= ctx.tol {
        return Err(Error::DegenerateInput("singular structural matrix".into()));
    }
    check_det_one(sing, ctx)?;
    check_det_one(cm, ctx)?;
    let varpi0 = cm.period.varpi().cloned().expect("CM coordinate carries ϖ");
    let tpi = two_pi_i::<R>(ctx);
    let u = sing.period.reassemble(ctx).col(0);
    let abc = abc_of(iso);
    let [h1, h2] = first_way_h(&u, &abc, &cm.period.h.m);
    let [_, _, r, s] = iso.pqrs();
    let (rc, sc) = (cint::<R>(ctx, r), cint::<R>(ctx, s));
    let entry_residuals = vec![
        (h1.clone() * varpi0.clone() / tpi.clone() - rc.clone() / tpi.clone()).abs().to_f64(),
        (h2.clone() / varpi0 - sc.clone() / tpi.clone()).abs().to_f64(),
    ];
    let residual = (h1.clone() * h2.clone() - rc * sc / tpi).abs().to_f64();
    let mut degenerate = Vec::new();
    if r == 0 {
        degenerate.push(DegenerateFlag { integer: "r".into(), h_index: 1, h_abs: h1.abs().to_f64() });
    }
    if s == 0 {
        degenerate.push(DegenerateFlag { integer: "s".into(), h_index: 2, h_abs: h2.abs().to_f64() });
    }
    Ok(RelationWitness {
        way: Way::FirstWay,
        h: vec![h1, h2],
        rhs_integers: vec![r, s],
        residual,
        entry_residuals,
        degenerate,
        construction: Construction::FirstWay(PairData { sing: sing.index, cm: cm.index, abc, r, s }),
    })
}

/// Second-way relation for an isogeny `A·P₂ = P₃·B` between CM coordinates
/// (`h2` with period `ϖ′`, `h3` with period `ϖ`).
pub fn second_way<R: Real>(
    h2: &Coordinate<R>,
    h3: &Coordinate<R>,
    iso: &IsogenyWitness<R>,
    ctx: &PrecisionContext,
) -> Result<RelationWitness<R>> {
    if h2.role != Role::Cm || h3.role != Role::Cm {
        return Err(Error::StructureViolation("second way needs two CM coordinates".into()));
    }
    check_det_one(h2, ctx)?;
    check_det_one(h3, ctx)?;
    let vp = h2.period.varpi().cloned().expect("CM coordinate carries ϖ");
    let v = h3.period.varpi().cloned().expect("CM coordinate carries ϖ");
    let tpi = two_pi_i::<R>(ctx);
    let abc = abc_of(iso);
    let [x1, x2, x3, x4] = second_way_h(&h2.period.h.m, &h3.period.h.m, &abc);
    let pqrs = iso.pqrs();
    let [p, q, r, s] = pqrs.map(|n| cint::<R>(ctx, n));
    let d = |x: Complex<R>, y: Complex<R>| (x - y).abs().to_f64();
    let entry_residuals = vec![
        d(vp.clone() * x3.clone() / tpi.clone(), v.clone() * p / tpi.clone()),
        d(x4.clone() / vp.clone(), v.clone() * q / tpi.clone()),
        d(vp.clone() * x1.clone() / tpi, r / v.clone()),
        d(x2.clone() / vp, s / v),
    ];
    let prod = pqrs.iter().fold(BigInt::from(1), |acc, &x| acc * x);
    let rhs = Complex::new(R::from_bigint(&prod, ctx.bits), R::zero());
    let residual = (x1.clone() * x2.clone() * x3.clone() * x4.clone() - rhs).abs().to_f64();
    let hs = [x1, x2, x3, x4];
    // p ↔ H₃, q ↔ H₄, r ↔ H₁, s ↔ H₂
    let mut degenerate = Vec::new();
    for (name, n, hi) in [("p", pqrs[0], 3), ("q", pqrs[1], 4), ("r", pqrs[2], 1), ("s", pqrs[3], 2)] {
        if n == 0 {
            degenerate.push(DegenerateFlag { integer: name.into(), h_index: hi, h_abs: hs[hi - 1].abs().to_f64() });
        }
    }
    let worst = entry_residuals.iter().cloned().fold(0.0, f64::max);
    if residual < ctx.tol && worst > ctx.tol {
        return Err(Error::StructureViolation(format!(
            "product identity holds but an entry identity is off by {worst:e}; value matrices are in mismatched gauges"
        )));
    }
    Ok(RelationWitness {
        way: Way::SecondWay,
        h: hs.to_vec(),
        rhs_integers: pqrs.to_vec(),
        residual,
        entry_residuals,
        degenerate,
        construction: Construction::SecondWay(CmPairData { source: h2.index, target: h3.index, abc, pqrs }),
    })
}

/// Combine two first-way pairs: `r₂s₂·H₁⁽¹⁾H₂⁽¹⁾ = r₁s₁·H₁⁽²⁾H₂⁽²⁾`.
/// A degenerate pair is returned unchanged instead.
pub fn four_coordinate<R: Real>(
    pair1: &RelationWitness<R>,
    pair2: &RelationWitness<R>,
    ctx: &PrecisionContext,
) -> Result<RelationWitness<R>> {
    let (Construction::FirstWay(d1), Construction::FirstWay(d2)) = (&pair1.construction, &pair2.construction) else {
        return Err(Error::StructureViolation("four-coordinate relation combines two first-way pairs".into()));
    };
    if pair1.is_degenerate() {
        return Ok(pair1.clone());
    }
    if pair2.is_degenerate() {
        return Ok(pair2.clone());
    }
    let k1 = cint::<R>(ctx, d1.r * d1.s);
    let k2 = cint::<R>(ctx, d2.r * d2.s);
    let lhs = k2 * pair1.h[0].clone() * pair1.h[1].clone();
    let rhs = k1 * pair2.h[0].clone() * pair2.h[1].clone();
    let mut entry_residuals = pair1.entry_residuals.clone();
    entry_residuals.extend(pair2.entry_residuals.iter().cloned());
    Ok(RelationWitness {
        way: Way::FourCoordinate,
        h: pair1.h.iter().chain(pair2.h.iter()).cloned().collect(),
        rhs_integers: vec![d1.r, d1.s, d2.r, d2.s],
        residual: (lhs - rhs).abs().to_f64(),
        entry_residuals,
        degenerate: Vec::new(),
        construction: Construction::FourCoordinate(d1.clone(), d2.clone()),
    })
}

/// Run the first way on a link, orienting it from the CM coordinate.
pub fn first_way_on_link<R: Real>(
    inst: &RelationInstance<R>,
    link: &IsogenyLink<R>,
    ctx: &PrecisionContext,
) -> Result<RelationWitness<R>> {
    let (src, tgt) = (inst.coord(link.source)?, inst.coord(link.target)?);
    match (src.role, tgt.role) {
        (Role::Cm, Role::Singular) => first_way(tgt, src, &link.witness, ctx),
        (Role::Singular, Role::Cm) => first_way(src, tgt, &link.witness.dual(), ctx),
        _ => Err(Error::StructureViolation("link is not singular–CM".into())),
    }
}

/// Select and run the relation prescribed for the fiber types of the
/// isogenous coordinates. Returns the case number (1–6) and the witness.
///
/// | isogenous coordinates | CM | case | relation |
/// |---|---|---|---|
/// | 3 (one shared) | 1 | 1 | combined first way, or one first-way pair |
/// | 3 | 2 | 2 | second way on a CM–CM link, else first way |
/// | 3 | 3 | 6 | second way |
/// | 4 | 1 | 3 | first way on the singular–CM link |
/// | 4 | 2 | 4 | second way on a CM–CM link, else combined first way |
/// | 4 | 3 | 5 | second way |
/// | 4 | 4 | 6 | second way |
pub fn dispatch_case<R: Real>(inst: &RelationInstance<R>, ctx: &PrecisionContext) -> Result<(u8, RelationWitness<R>)> {
    if inst.links.len() != 2 {
        return Err(Error::DegenerateInput(format!("expected two isogenies, found {}", inst.links.len())));
    }
    let (l1, l2) = (&inst.links[0], &inst.links[1]);
    let same_pair = |a: &IsogenyLink<R>, b: &IsogenyLink<R>| {
        (a.source == b.source && a.target == b.target) || (a.source == b.target && a.target == b.source)
    };
    if same_pair(l1, l2) {
        return Err(Error::DegenerateInput("the two isogenies connect the same pair".into()));
    }
    let iso_coords: BTreeSet<usize> = [l1.source, l1.target, l2.source, l2.target].into_iter().collect();
    let cm = inst.cm_coords();
    let n_cm = iso_coords.iter().filter(|k| cm.contains(k)).count();
    if n_cm == 0 {
        return Err(Error::UnsupportedConfiguration("all isogenous coordinates are singular".into()));
    }
    let case = match (iso_coords.len(), n_cm) {
        (3, 1) => 1,
        (3, 2) => 2,
        (3, 3) => 6,
        (4, 1) => 3,
        (4, 2) => 4,
        (4, 3) => 5,
        (4, 4) => 6,
        _ => unreachable!("two links touch three or four coordinates"),
    };
    let is_cm = |k: usize| cm.contains(&k);
    if let Some(link) = inst.links.iter().find(|l| is_cm(l.source) && is_cm(l.target)) {
        let w = second_way(inst.coord(link.source)?, inst.coord(link.target)?, &link.witness, ctx)?;
        return Ok((case, w));
    }
    let mixed: Vec<&IsogenyLink<R>> = inst.links.iter().filter(|l| is_cm(l.source) != is_cm(l.target)).collect();
    let w = match mixed.as_slice() {
        [a, b] => four_coordinate(&first_way_on_link(inst, a, ctx)?, &first_way_on_link(inst, b, ctx)?, ctx)?,
        [a] => first_way_on_link(inst, a, ctx)?,
        _ => {
            return Err(Error::UnsupportedConfiguration(
                "no isogeny touches a CM coordinate".into(),
            ))
        }
    };
    Ok((case, w))
}

/// Genuine CM pair: the lattice and its cyclic sublattice `sub`, as
/// coordinates `2` (source) and `3` (target).
pub fn cm_pair_instance<R: Real>(
    lat: &Lattice<R>,
    sub: &crate::isogeny::CyclicSublattice,
    ctx: &PrecisionContext,
) -> Result<(RelationInstance<R>, IsogenyRun<R>)> {
    let run = isogeny_witness(lat, sub, ctx)?;
    let c2 = Coordinate { index: 2, period: decompose_cm(&run.p1, ctx)?, role: Role::Cm };
    let c3 = Coordinate { index: 3, period: decompose_cm(&run.p2, ctx)?, role: Role::Cm };
    let link = IsogenyLink { source: 2, target: 3, witness: run.witness.clone() };
    let inst = RelationInstance::new(vec![c2, c3], vec![link], Gauge::identity())?;
    Ok((inst, run))
}

/// Cyclic sublattice of `ℤ + ℤτ₂` of index `m` whose `j` matches `j(τ₃)`.
pub fn find_isogenous_sublattice<R: Real>(
    tau2: &Complex<R>,
    tau3: &Complex<R>,
    m: i64,
    ctx: &PrecisionContext,
) -> Result<crate::isogeny::CyclicSublattice> {
    let j3 = j_invariant(tau3, ctx)?;
    let scale = 1.0 + j3.abs().to_f64();
    let mut best: Option<(f64, crate::isogeny::CyclicSublattice)> = None;
    for sub in cyclic_sublattices(m) {
        let j = j_invariant(&sub.tau_image(tau2, ctx), ctx)?;
        let d = (j - j3.clone()).abs().to_f64() / scale;
        if best.as_ref().map_or(true, |(b, _)| d < *b) {
            best = Some((d, sub));
        }
    }
    match best {
        Some((d, sub)) if d < ctx.sqrt_tol() => Ok(sub),
        _ => Err(Error::DegenerateInput(format!("no cyclic {m}-isogeny from τ₂ reaches j(τ₃)"))),
    }
}

// ---------------------------------------------------------------------------
// Synthetic instances, consistent by construction.

fn random_c<R: Real>(rng: &mut ChaCha8Rng, ctx: &PrecisionContext) -> Complex<R> {
    loop {
        let (re, im): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if re.hypot(im) > 0.3 {
            return Complex::new(ctx.lift(re), ctx.lift(im));
        }
    }
}

/// Random `(a, b; c, d)` with `d = (1 + bc)/a`.
pub fn random_sl2<R: Real>(rng: &mut ChaCha8Rng, ctx: &PrecisionContext) -> CMat<R> {
    let a = random_c::<R>(rng, ctx);
    let b = random_c::<R>(rng, ctx);
    let c = random_c::<R>(rng, ctx);
    let d = (cone::<R>() + b.clone() * c.clone()) / a.clone();
    Mat2::new(a, b, c, d)
}

/// Which homology entry a synthetic instance forces to zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForceZero {
    R,
    S,
}

/// Integer matrix of determinant `m`, optionally with `r = 0` or `s = 0`;
/// otherwise all four entries are nonzero.
pub fn random_homology(rng: &mut ChaCha8Rng, m: i64, force: Option<ForceZero>) -> IntMat2 {
    let divisors: Vec<i64> = (1..=m).filter(|d| m % d == 0).collect();
    let pick = |rng: &mut ChaCha8Rng| divisors[rng.gen_range(0..divisors.len())];
    let nonzero = |rng: &mut ChaCha8Rng| {
        let x: i64 = rng.gen_range(1..=3);
        if rng.gen_bool(0.5) {
            x
        } else {
            -x
        }
    };
    match force {
        Some(ForceZero::R) => {
            let p = pick(rng);
            IntMat2::new(p, nonzero(rng), 0, m / p)
        }
        Some(ForceZero::S) => {
            let r = pick(rng);
            IntMat2::new(nonzero(rng), -m / r, r, 0)
        }
        None => loop {
            let subs = cyclic_sublattices(m);
            let sub = subs[rng.gen_range(0..subs.len())];
            let mut b = IntMat2::new(sub.d, 0, -sub.b, sub.a);
            for _ in 0..3 {
                let k: i64 = rng.gen_range(-2..=2);
                let u = if rng.gen_bool(0.5) { IntMat2::new(1, k, 0, 1) } else { IntMat2::new(1, 0, k, 1) };
                b = if rng.gen_bool(0.5) { &u * &b } else { &b * &u };
            }
            if b.entries().iter().all(|&x| x != 0) {
                return b;
            }
        },
    }
}

/// Random lower-triangular `(a, 0; b, c)` with `a·c = m`.
fn random_de_rham<R: Real>(rng: &mut ChaCha8Rng, m: i64, ctx: &PrecisionContext) -> [Complex<R>; 3] {
    let a = random_c::<R>(rng, ctx);
    let b = random_c::<R>(rng, ctx);
    let c = cint::<R>(ctx, m) / a.clone();
    [a, b, c]
}

fn lower<R: Real>(abc: &[Complex<R>; 3]) -> CMat<R> {
    Mat2::new(abc[0].clone(), czero(), abc[1].clone(), abc[2].clone())
}

/// CM coordinate with a random det-1 value matrix and period `ϖ`.
fn random_cm_coordinate<R: Real>(index: usize, rng: &mut ChaCha8Rng, ctx: &PrecisionContext) -> Coordinate<R> {
    let h = random_sl2::<R>(rng, ctx);
    let varpi = random_c::<R>(rng, ctx) + cint::<R>(ctx, 1);
    Coordinate { index, period: StructuredPeriod { h, kind: PeriodKind::Cm { varpi } }, role: Role::Cm }
}

/// Random singular structural matrix with determinant `1/2πi`.
fn random_singular_structure<R: Real>(rng: &mut ChaCha8Rng, ctx: &PrecisionContext) -> Result<CMat<R>> {
    let d = random_c::<R>(rng, ctx);
    let dp = random_c::<R>(rng, ctx);
    let e = random_c::<R>(rng, ctx);
    let ep = (cone::<R>() / two_pi_i::<R>(ctx) + dp.clone() * e.clone()) / d.clone();
    let n = BigRational::new(rng.gen_range(1..=6).into(), rng.gen_range(1..=3).into());
    let logx = random_c::<R>(rng, ctx) * cint::<R>(ctx, 3);
    make_singular_structure(&d, &dp, &e, &ep, &n, &logx, ctx)
}

/// Singular coordinate `k` and the link from the CM coordinate `cm`
/// realizing `A·h₃·D₀ = h_k·S·B`; stored reversed (dual) when `reverse`.
fn synthetic_singular_partner<R: Real>(
    k: usize,
    cm: &Coordinate<R>,
    rng: &mut ChaCha8Rng,
    force: Option<ForceZero>,
    reverse: bool,
    ctx: &PrecisionContext,
) -> Result<(Coordinate<R>, IsogenyLink<R>)> {
    let m = rng.gen_range(1..=12);
    let b = random_homology(rng, m, force);
    let abc = random_de_rham::<R>(rng, m, ctx);
    let s = random_singular_structure::<R>(rng, ctx)?;
    let d0 = cm_factor(cm.period.varpi().expect("CM"), ctx);
    let b_inv = inverse(&b.to_complex::<R>(ctx.bits))?;
    let s_inv = inverse(&s)?;
    let h = &(&(&(&lower(&abc) * &cm.period.h) * &d0) * &b_inv) * &s_inv;
    let coord = Coordinate { index: k, period: singular_period(h, &s), role: Role::Singular };
    let witness = IsogenyWitness { degree: m, de_rham: abc, homology: b, residual: 0.0 };
    let link = if reverse {
        IsogenyLink { source: k, target: cm.index, witness: witness.dual() }
    } else {
        IsogenyLink { source: cm.index, target: k, witness }
    };
    Ok((coord, link))
}

fn pick_force(rng: &mut ChaCha8Rng) -> Option<ForceZero> {
    match rng.gen_range(0..10) {
        0 | 1 => Some(ForceZero::R),
        2 => Some(ForceZero::S),
        _ => None,
    }
}

/// Synthetic knobs shared by the generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SyntheticOptions {
    /// Random `SL₂` gauge instead of the identity.
    pub random_gauge: bool,
    /// Allow forced `r = 0` / `s = 0` pairs.
    pub allow_degenerate: bool,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        SyntheticOptions { random_gauge: false, allow_degenerate: true }
    }
}

fn gauge_for<R: Real>(coords: &[Coordinate<R>], seed: u64, opts: SyntheticOptions, ctx: &PrecisionContext) -> Gauge<R> {
    if opts.random_gauge {
        Gauge::random(coords.iter().map(|c| c.index), seed ^ 0x9e37_79b9_7f4a_7c15, ctx)
    } else {
        Gauge::identity()
    }
}

/// `G_m² × E` with `E` CM: singular coordinates 1 and 2 each isogenous to
/// the CM coordinate 3.
pub fn synthetic_first_way<R: Real>(seed: u64, opts: SyntheticOptions, ctx: &PrecisionContext) -> Result<RelationInstance<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cm = random_cm_coordinate::<R>(3, &mut rng, ctx);
    let f1 = if opts.allow_degenerate { pick_force(&mut rng) } else { None };
    let f2 = if opts.allow_degenerate { pick_force(&mut rng) } else { None };
    let rev1 = rng.gen_bool(0.5);
    let rev2 = rng.gen_bool(0.5);
    let (c1, l1) = synthetic_singular_partner(1, &cm, &mut rng, f1, rev1, ctx)?;
    let (c2, l2) = synthetic_singular_partner(2, &cm, &mut rng, f2, rev2, ctx)?;
    let coords = vec![c1, c2, cm];
    let gauge = gauge_for(&coords, seed, opts, ctx);
    RelationInstance::new(coords, vec![l1, l2], gauge)
}

/// Four coordinates, 1 and 3 singular, 2 and 4 CM, isogenies 1–2 and 3–4.
pub fn synthetic_n4<R: Real>(seed: u64, opts: SyntheticOptions, ctx: &PrecisionContext) -> Result<RelationInstance<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cm2 = random_cm_coordinate::<R>(2, &mut rng, ctx);
    let cm4 = random_cm_coordinate::<R>(4, &mut rng, ctx);
    let f1 = if opts.allow_degenerate { pick_force(&mut rng) } else { None };
    let f2 = if opts.allow_degenerate { pick_force(&mut rng) } else { None };
    let (c1, l1) = synthetic_singular_partner(1, &cm2, &mut rng, f1, true, ctx)?;
    let (c3, l2) = synthetic_singular_partner(3, &cm4, &mut rng, f2, true, ctx)?;
    let coords = vec![c1, cm2, c3, cm4];
    let gauge = gauge_for(&coords, seed, opts, ctx);
    RelationInstance::new(coords, vec![l1, l2], gauge)
}

/// Two CM coordinates 2 and 3 with `h₂ = A⁻¹·h₃·D·B·D′⁻¹`, plus a singular
/// coordinate 1 isogenous to 2 so the instance is a Case 2 point.
pub fn synthetic_second_way<R: Real>(seed: u64, opts: SyntheticOptions, ctx: &PrecisionContext) -> Result<RelationInstance<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c3 = random_cm_coordinate::<R>(3, &mut rng, ctx);
    let varpi2 = random_c::<R>(&mut rng, ctx) + cint::<R>(ctx, 1);
    let m = rng.gen_range(1..=12);
    let force = if opts.allow_degenerate { pick_force(&mut rng) } else { None };
    let b = random_homology(&mut rng, m, force);
    let abc = random_de_rham::<R>(&mut rng, m, ctx);
    let d = cm_factor(c3.period.varpi().expect("CM"), ctx);
    let dp_inv = inverse(&cm_factor(&varpi2, ctx))?;
    let a_inv = inverse(&lower(&abc))?;
    let h2 = &(&(&(&a_inv * &c3.period.h) * &d) * &b.to_complex::<R>(ctx.bits)) * &dp_inv;
    let c2 = Coordinate { index: 2, period: StructuredPeriod { h: h2, kind: PeriodKind::Cm { varpi: varpi2 } }, role: Role::Cm };
    let link = IsogenyLink { source: 2, target: 3, witness: IsogenyWitness { degree: m, de_rham: abc, homology: b, residual: 0.0 } };
    let (c1, l1) = synthetic_singular_partner(1, &c2, &mut rng, None, false, ctx)?;
    let coords = vec![c1, c2, c3];
    let gauge = gauge_for(&coords, seed, opts, ctx);
    RelationInstance::new(coords, vec![link, l1], gauge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Mp;

    #[test]
    fn g_vector_on_identity() {
        let one = 1.0f64;
        let z = 0.0f64;
        let h = [[one, z], [z, one]];
        assert_eq!(g_vector(&h, &one, &z, &one, GVariant::Top), [1.0, 0.0]);
        assert_eq!(g_vector(&h, &one, &z, &one, GVariant::Bottom), [0.0, 1.0]);
    }

    #[test]
    fn homology_has_requested_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in 1..=12 {
            let b = random_homology(&mut rng, m, None);
            assert_eq!(b.det(), m);
            assert!(b.entries().iter().all(|&x| x != 0));
            let b = random_homology(&mut rng, m, Some(ForceZero::R));
            assert_eq!((b.det(), b.m[1][0]), (m, 0));
            let b = random_homology(&mut rng, m, Some(ForceZero::S));
            assert_eq!((b.det(), b.m[1][1]), (m, 0));
        }
    }

    #[test]
    fn identity_isogeny_second_way() {
        let c = PrecisionContext::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c3 = random_cm_coordinate::<Mp>(3, &mut rng, &c);
        let c2 = Coordinate { index: 2, ..c3.clone() };
        let iso = IsogenyWitness { degree: 1, de_rham: [cone(), czero(), cone()], homology: IntMat2::identity(), residual: 0.0 };
        let w = second_way(&c2, &c3, &iso, &c).unwrap();
        assert!(w.h[0].abs().to_f64() < c.tol);
        assert!(w.residual < c.tol);
        assert!(w.dichotomy_holds(c.tol));
    }

    #[test]
    fn synthetic_instances_dispatch() {
        let c = PrecisionContext::default();
        let inst = synthetic_first_way::<Mp>(5, SyntheticOptions::default(), &c).unwrap();
        let (case, w) = dispatch_case(&inst, &c).unwrap();
        assert_eq!(case, 1);
        assert!(w.holds(c.tol), "{w:?}");
        let inst = synthetic_second_way::<Mp>(5, SyntheticOptions::default(), &c).unwrap();
        let (case, w) = dispatch_case(&inst, &c).unwrap();
        assert_eq!((case, w.way), (2, Way::SecondWay));
        assert!(w.holds(c.tol));
        let inst = synthetic_n4::<Mp>(5, SyntheticOptions { allow_degenerate: false, ..Default::default() }, &c).unwrap();
        let (case, w) = dispatch_case(&inst, &c).unwrap();
        assert_eq!((case, w.way), (4, Way::FourCoordinate));
        assert!(w.holds(c.tol));
    }

    #[test]
    fn all_singular_is_unsupported() {
        let c = PrecisionContext::default();
        let inst = synthetic_first_way::<Mp>(1, SyntheticOptions::default(), &c).unwrap();
        // drop the CM coordinate's links and connect the two singular ones
        let w = inst.links[0].witness.clone();
        let bad = RelationInstance {
            links: vec![
                IsogenyLink { source: 1, target: 2, witness: w.clone() },
                IsogenyLink { source: 2, target: 1, witness: w.dual() },
            ],
            ..inst.clone()
        };
        assert!(matches!(dispatch_case(&bad, &c), Err(Error::DegenerateInput(_))));
        let four = RelationInstance {
            coords: inst.coords.iter().filter(|x| x.role == Role::Singular).cloned().chain(
                inst.coords.iter().filter(|x| x.role == Role::Singular).map(|x| Coordinate { index: x.index + 10, ..x.clone() }),
            ).collect(),
            links: vec![
                IsogenyLink { source: 1, target: 2, witness: w.clone() },
                IsogenyLink { source: 11, target: 12, witness: w },
            ],
            gauge: Gauge::identity(),
        };
        assert!(matches!(dispatch_case(&four, &c), Err(Error::UnsupportedConfiguration(_))));
    }

    #[test]
    fn genuine_cm_pairs() {
        let c = PrecisionContext::default();
        let i = crate::complex::imag_unit::<Mp>(&c);
        let lat = Lattice::from_tau(i, &c).unwrap();
        for sub in cyclic_sublattices(2) {
            let (inst, run) = cm_pair_instance(&lat, &sub, &c).unwrap();
            assert!(run.check.passes(2, c.tol));
            let w = second_way(inst.coord(2).unwrap(), inst.coord(3).unwrap(), &inst.links[0].witness, &c).unwrap();
            assert!(w.holds(2f64.powi(-100)), "{sub:?}: {} {:?}", w.residual, w.entry_residuals);
        }
    }
}
