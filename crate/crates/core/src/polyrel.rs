//! Homogeneous polynomials in the value-matrix variables `X_{i,j,k}`, the
//! relation polynomials attached to verified H-vector identities, and
//! non-membership certificates for the ideal `I₀ = (det X_k − 1 : k smooth)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complex::{cint, cone, czero, ComplexExt};
use crate::context::PrecisionContext;
use crate::error::{Error, Result};
use crate::periods::CMat;
use crate::relations::{first_way_h, second_way_h, CmPairData, Construction, Gauge, PairData, RelationWitness};
use crate::scalar::Real;

/// Variable `X_{i,j,k}`: entry `(i, j)` (1-based) of the value matrix of
/// coordinate `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Var {
    pub i: u8,
    pub j: u8,
    pub k: usize,
}

impl Var {
    pub fn new(i: u8, j: u8, k: usize) -> Self {
        assert!((1..=2).contains(&i) && (1..=2).contains(&j), "matrix indices are 1 or 2");
        Var { i, j, k }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X_{}{}{}", self.i, self.j, self.k)
    }
}

/// Sorted `(variable, exponent)` pairs with positive exponents.
pub type Monomial = Vec<(Var, u32)>;

fn monomial_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn monomial_degree(m: &Monomial) -> usize {
    m.iter().map(|&(_, e)| e as usize).sum()
}

/// Sparse polynomial with complex coefficients; exact zeros are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly<R: Real> {
    terms: BTreeMap<Monomial, Complex<R>>,
}

impl<R: Real> MultiPoly<R> {
    pub fn zero() -> Self {
        MultiPoly { terms: BTreeMap::new() }
    }

    pub fn constant(c: Complex<R>) -> Self {
        let mut p = Self::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn var(v: Var) -> Self {
        let mut p = Self::zero();
        p.add_term(vec![(v, 1)], cone());
        p
    }

    /// `Σ cᵥ·v`.
    pub fn linear(terms: &[(Complex<R>, Var)]) -> Self {
        let mut p = Self::zero();
        for (c, v) in terms {
            p.add_term(vec![(*v, 1)], c.clone());
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Complex<R>) {
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                if !c.is_zero() {
                    v.insert(c);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().clone() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex<R>)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> Complex<R> {
        self.terms.get(m).cloned().unwrap_or_else(czero)
    }

    pub fn scale(&self, c: &Complex<R>) -> Self {
        let mut p = Self::zero();
        for (m, x) in &self.terms {
            p.add_term(m.clone(), x.clone() * c.clone());
        }
        p
    }

    /// Largest total degree; 0 for the zero polynomial.
    pub fn total_degree(&self) -> usize {
        self.terms.keys().map(monomial_degree).max().unwrap_or(0)
    }

    /// Common degree of all monomials, if there is one.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut degs = self.terms.keys().map(monomial_degree);
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.is_zero() || self.homogeneous_degree().is_some()
    }

    pub fn variables(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.iter().map(|&(v, _)| v)).collect()
    }

    /// Largest coefficient modulus.
    pub fn coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c.abs().to_f64()).fold(0.0, f64::max)
    }

    /// `Σ |c|·∏|xᵥ|^e`, the scale a numeric evaluation is judged against.
    pub fn eval_scale(&self, assignment: &BTreeMap<Var, Complex<R>>) -> Result<f64> {
        let mut s = 0.0;
        for (m, c) in &self.terms {
            let mut t = c.abs().to_f64();
            for (v, e) in m {
                let x = assignment.get(v).ok_or_else(|| Error::MissingAssignment(v.to_string()))?;
                t *= x.abs().to_f64().powi(*e as i32);
            }
            s += t;
        }
        Ok(s)
    }

    pub fn evaluate(&self, assignment: &BTreeMap<Var, Complex<R>>) -> Result<Complex<R>> {
        let mut acc = czero::<R>();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m {
                let x = assignment.get(v).ok_or_else(|| Error::MissingAssignment(v.to_string()))?;
                t = t * x.powu(*e);
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(cone());
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }
}

impl<R: Real> Add for MultiPoly<R> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for (m, c) in o.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl<R: Real> Neg for MultiPoly<R> {
    type Output = Self;
    fn neg(self) -> Self {
        MultiPoly { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl<R: Real> Sub for MultiPoly<R> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<R: Real> Mul for MultiPoly<R> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut p = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                p.add_term(monomial_mul(ma, mb), ca.clone() * cb.clone());
            }
        }
        p
    }
}

/// The ideal generated by `det(X_{·,·,k}) − 1` over the smooth coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealI0 {
    pub smooth_coords: BTreeSet<usize>,
}

impl IdealI0 {
    pub fn new(smooth_coords: impl IntoIterator<Item = usize>) -> Self {
        IdealI0 { smooth_coords: smooth_coords.into_iter().collect() }
    }

    pub fn generators<R: Real>(&self) -> Vec<MultiPoly<R>> {
        self.smooth_coords
            .iter()
            .map(|&k| det_poly::<R>(k) - MultiPoly::constant(cone()))
            .collect()
    }
}

/// `X₁₁X₂₂ − X₁₂X₂₁` for coordinate `k`.
pub fn det_poly<R: Real>(k: usize) -> MultiPoly<R> {
    let v = |i, j| MultiPoly::<R>::var(Var::new(i, j, k));
    v(1, 1) * v(2, 2) - v(1, 2) * v(2, 1)
}

/// Matrix of variables of coordinate `k`.
pub fn var_matrix<R: Real>(k: usize) -> [[MultiPoly<R>; 2]; 2] {
    let v = |i, j| MultiPoly::<R>::var(Var::new(i, j, k));
    [[v(1, 1), v(1, 2)], [v(2, 1), v(2, 2)]]
}

fn const_mat<R: Real>(m: &CMat<R>) -> [[MultiPoly<R>; 2]; 2] {
    let c = |i: usize, j: usize| MultiPoly::constant(m.get(i, j).clone());
    [[c(0, 0), c(0, 1)], [c(1, 0), c(1, 1)]]
}

fn poly_mat_mul<R: Real>(a: &[[MultiPoly<R>; 2]; 2], b: &[[MultiPoly<R>; 2]; 2]) -> [[MultiPoly<R>; 2]; 2] {
    let e = |i: usize, j: usize| a[i][0].clone() * b[0][j].clone() + a[i][1].clone() * b[1][j].clone();
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

/// `h_k = Π_k·X_k` for a CM coordinate.
fn cm_value_poly<R: Real>(k: usize, gauge: &Gauge<R>) -> [[MultiPoly<R>; 2]; 2] {
    poly_mat_mul(&const_mat(&gauge.pi(k)), &var_matrix(k))
}

/// First column of `h_k·S` for a singular coordinate: `Π_{k,1}·(X₁₁ₖ, X₂₁ₖ)`.
fn singular_column_poly<R: Real>(k: usize, gauge: &Gauge<R>) -> [MultiPoly<R>; 2] {
    let p = gauge.outer(k);
    let x1 = Var::new(1, 1, k);
    let x2 = Var::new(2, 1, k);
    let row = |i: usize| MultiPoly::linear(&[(p.get(i, 0).clone(), x1), (p.get(i, 1).clone(), x2)]);
    [row(0), row(1)]
}

fn abc_poly<R: Real>(abc: &[Complex<R>; 3]) -> [MultiPoly<R>; 3] {
    [
        MultiPoly::constant(abc[0].clone()),
        MultiPoly::constant(abc[1].clone()),
        MultiPoly::constant(abc[2].clone()),
    ]
}

/// `(H₁, H₂)` of a first-way pair as polynomials in the value variables.
pub fn first_way_h_polys<R: Real>(pair: &PairData<R>, gauge: &Gauge<R>) -> [MultiPoly<R>; 2] {
    let u = singular_column_poly(pair.sing, gauge);
    let h3 = cm_value_poly(pair.cm, gauge);
    first_way_h(&u, &abc_poly(&pair.abc), &h3)
}

/// `(H₁, …, H₄)` of a second-way pair as polynomials.
pub fn second_way_h_polys<R: Real>(pair: &CmPairData<R>, gauge: &Gauge<R>) -> [MultiPoly<R>; 4] {
    let h2 = cm_value_poly(pair.source, gauge);
    let h3 = cm_value_poly(pair.target, gauge);
    second_way_h(&h2, &h3, &abc_poly(&pair.abc))
}

/// Which H of a first-way pair vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VanishingH {
    /// `H₁ = 0`, forced by `r = 0`.
    H1,
    /// `H₂ = 0`, forced by `s = 0`.
    H2,
}

/// Degree-2 relation `H_j = 0` of a degenerate first-way pair.
///
/// For `H₁` this is
/// `c·u₁·w₂ + (b·u₁ − a·u₂)·w₁` with `u = Π_{k,1}·(X₁₁ₖ, X₂₁ₖ)` and
/// `w = Π₃·(X₁₁₃, X₂₁₃)`, a sum of two products of linear forms supported on
/// `{X_{i,1,k}·X_{j,1,3}}`. The `a·u₂` term enters with a minus sign: that
/// is the sign produced by the cofactor row `(−u₂, u₁)` which annihilates
/// the first column of `h_k·S`.
pub fn build_r_degenerate<R: Real>(pair: &PairData<R>, which: VanishingH, gauge: &Gauge<R>) -> Result<MultiPoly<R>> {
    if pair.abc[0].is_zero() || pair.abc[2].is_zero() {
        return Err(Error::DegenerateInput("isogeny matrix needs a ≠ 0 and c ≠ 0".into()));
    }
    let [h1, h2] = first_way_h_polys(pair, gauge);
    Ok(match which {
        VanishingH::H1 => h1,
        VanishingH::H2 => h2,
    })
}

/// Homogeneous product relation.
///
/// Combined first-way pairs: `r₂s₂·H₁⁽¹⁾H₂⁽¹⁾ − r₁s₁·H₁⁽²⁾H₂⁽²⁾`, degree 4.
/// Second way: `H₁H₂H₃H₄ − pqrs·det(X₂)²·det(X₃)²`, degree 8.
pub fn build_r_product<R: Real>(c: &Construction<R>, gauge: &Gauge<R>, ctx: &PrecisionContext) -> Result<MultiPoly<R>> {
    match c {
        Construction::FourCoordinate(p1, p2) => {
            if p1.r * p1.s * p2.r * p2.s == 0 {
                return Err(Error::DegenerateInput("product relation needs r₁s₁r₂s₂ ≠ 0".into()));
            }
            let [a1, a2] = first_way_h_polys(p1, gauge);
            let [b1, b2] = first_way_h_polys(p2, gauge);
            let k2 = cint::<R>(ctx, p2.r * p2.s);
            let k1 = cint::<R>(ctx, p1.r * p1.s);
            Ok((a1 * a2).scale(&k2) - (b1 * b2).scale(&k1))
        }
        Construction::SecondWay(pair) => {
            let [h1, h2, h3, h4] = second_way_h_polys(pair, gauge);
            let [p, q, r, s] = pair.pqrs;
            let k = BigInt::from(p) * q * r * s;
            let kc = Complex::new(R::from_bigint(&k, ctx.bits), R::zero());
            let dets = (det_poly::<R>(pair.source) * det_poly::<R>(pair.target)).pow(2);
            Ok(h1 * h2 * h3 * h4 - dets.scale(&kc))
        }
        Construction::FirstWay(_) => Err(Error::UnsupportedConfiguration(
            "a single non-degenerate first-way pair gives no homogeneous relation".into(),
        )),
    }
}

/// The relation polynomial of a witness: `H_j` for a degenerate first-way
/// pair, otherwise the homogeneous product relation.
pub fn relation_polynomial<R: Real>(
    w: &RelationWitness<R>,
    gauge: &Gauge<R>,
    ctx: &PrecisionContext,
) -> Result<MultiPoly<R>> {
    match (&w.construction, w.degenerate.first()) {
        (Construction::FirstWay(pair), Some(flag)) => {
            let which = if flag.h_index == 1 { VanishingH::H1 } else { VanishingH::H2 };
            build_r_degenerate(pair, which, gauge)
        }
        (c, _) => build_r_product(c, gauge, ctx),
    }
}

/// Outcome of the witness-point search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum NonMembership {
    /// A point of `Z(I₀)` where the polynomial is nonzero.
    Certificate {
        point: BTreeMap<String, String>,
        value_abs: f64,
        threshold: f64,
        attempts: usize,
    },
    /// No witness found; this does not certify membership.
    Inconclusive { attempts: usize },
}

impl NonMembership {
    pub fn is_certificate(&self) -> bool {
        matches!(self, NonMembership::Certificate { .. })
    }
}

fn small_rational(rng: &mut ChaCha8Rng) -> BigRational {
    loop {
        let n: i64 = rng.gen_range(-9..=9);
        let d: i64 = rng.gen_range(1..=5);
        if n != 0 {
            return BigRational::new(n.into(), d.into());
        }
    }
}

/// Search for a point of `Z(I₀)` with `|R| > √tol·‖coeffs‖`.
///
/// Smooth coordinates get rational `X₁₁, X₁₂, X₂₁` and `X₂₂` solved so that
/// the determinant is exactly 1; every other variable is a free rational.
pub fn not_in_i0<R: Real>(
    r: &MultiPoly<R>,
    ideal: &IdealI0,
    attempts: usize,
    seed: u64,
    ctx: &PrecisionContext,
) -> Result<NonMembership> {
    if r.is_zero() {
        return Err(Error::DegenerateInput("zero polynomial".into()));
    }
    let vars = r.variables();
    let smooth: BTreeSet<usize> = vars.iter().map(|v| v.k).filter(|k| ideal.smooth_coords.contains(k)).collect();
    let threshold = ctx.sqrt_tol() * r.coeff_norm();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=attempts {
        let mut point: BTreeMap<Var, BigRational> = BTreeMap::new();
        for &k in &smooth {
            let x11 = small_rational(&mut rng);
            let x12 = small_rational(&mut rng);
            let x21 = small_rational(&mut rng);
            let x22 = (BigRational::from_integer(1.into()) + &x12 * &x21) / &x11;
            point.insert(Var::new(1, 1, k), x11);
            point.insert(Var::new(1, 2, k), x12);
            point.insert(Var::new(2, 1, k), x21);
            point.insert(Var::new(2, 2, k), x22);
        }
        for v in &vars {
            if !point.contains_key(v) {
                point.insert(*v, small_rational(&mut rng));
            }
        }
        let assignment: BTreeMap<Var, Complex<R>> = point
            .iter()
            .map(|(v, q)| (*v, Complex::new(R::from_ratio(q, ctx.bits), R::zero())))
            .collect();
        let value_abs = r.evaluate(&assignment)?.abs().to_f64();
        if value_abs > threshold {
            return Ok(NonMembership::Certificate {
                point: point.iter().map(|(v, q)| (v.to_string(), q.to_string())).collect(),
                value_abs,
                threshold,
                attempts: attempt,
            });
        }
    }
    Ok(NonMembership::Inconclusive { attempts })
}

/// Value assignment for a whole matrix of variables.
pub fn assign_matrix<R: Real>(k: usize, m: &CMat<R>, out: &mut BTreeMap<Var, Complex<R>>) {
    for i in 0..2 {
        for j in 0..2 {
            out.insert(Var::new(i as u8 + 1, j as u8 + 1, k), m.get(i, j).clone());
        }
    }
}

/// Value assignment for the first column only.
pub fn assign_column<R: Real>(k: usize, col: &[Complex<R>; 2], out: &mut BTreeMap<Var, Complex<R>>) {
    out.insert(Var::new(1, 1, k), col[0].clone());
    out.insert(Var::new(2, 1, k), col[1].clone());
}
