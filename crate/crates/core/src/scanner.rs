//! Rational curves `t ↦ (j₁(t), …, jₙ(t))` in `Y(1)ⁿ`: modular strata
//! `Φ_M(j_a(t), j_b(t)) = 0`, exact detection of parameters lying on two
//! strata at once, and a height / degree / level report.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::ComplexExt;
use crate::context::PrecisionContext;
use crate::error::{Error, Result};
use crate::exactpoly::{gcd, image_charpoly, linear_factor, mahler_height, rational_height, rational_roots, squarefree, IntPoly};
use crate::kernel::{j_inverse, polyroots};
use crate::modular::{
    numeric_scale, phi_eval_numeric, phi_recover_exact, phi_specialize, ModularPolynomial, RationalMap, MAX_EXACT_LEVEL,
};
use crate::periods::detect_cm;
use crate::scalar::{Mp, Real};

/// Largest `|A|` searched when flagging a coordinate value as a singular
/// modulus.
pub const CM_FORM_BOUND: i64 = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordRole {
    Smooth,
    Cm,
    Singular,
}

impl FromStr for CoordRole {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "smooth" => Ok(CoordRole::Smooth),
            "cm" => Ok(CoordRole::Cm),
            "singular" => Ok(CoordRole::Singular),
            other => Err(Error::Parse(format!("unknown coordinate role `{other}`"))),
        }
    }
}

/// A curve given by one rational map per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveModel {
    pub n: usize,
    pub maps: Vec<RationalMap>,
    /// Boundary behaviour of each coordinate, when known.
    pub roles: Option<Vec<CoordRole>>,
    /// Permit two coordinates to be the same map.
    pub allow_equal: bool,
}

fn parse_coeffs(s: &str) -> Result<IntPoly> {
    let coeffs = s
        .split(',')
        .map(|c| c.trim())
        .filter(|c| !c.is_empty())
        .map(|c| c.parse::<BigInt>().map_err(|e| Error::Parse(format!("coefficient `{c}`: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if coeffs.is_empty() {
        return Err(Error::Parse("empty coefficient list".into()));
    }
    Ok(IntPoly::new(coeffs))
}

fn join_coeffs(p: &IntPoly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    p.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
}

impl CurveModel {
    pub fn new(maps: Vec<RationalMap>, roles: Option<Vec<CoordRole>>, allow_equal: bool) -> Result<Self> {
        let c = CurveModel { n: maps.len(), maps, roles, allow_equal };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.maps.len() != self.n {
            return Err(Error::DegenerateInput(format!("n = {} but {} maps given", self.n, self.maps.len())));
        }
        if let Some(r) = &self.roles {
            if r.len() != self.n {
                return Err(Error::DegenerateInput("one role per coordinate is required".into()));
            }
        }
        if self.maps.iter().filter(|m| !m.is_constant()).count() < 2 {
            return Err(Error::DegenerateInput("at least two coordinates must be nonconstant".into()));
        }
        if !self.allow_equal {
            for a in 0..self.n {
                for b in a + 1..self.n {
                    let (f, g) = (&self.maps[a], &self.maps[b]);
                    if f.num.mul(&g.den) == g.num.mul(&f.den) {
                        return Err(Error::DegenerateInput(format!(
                            "j{} and j{} are the same map (set allow_equal = true to permit)",
                            a + 1,
                            b + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Parse the text format:
    ///
    /// ```text
    /// n = 2
    /// j1 = 0, 1 / 1        # t
    /// j2 = 1, 1            # t + 1 (denominator defaults to 1)
    /// roles = smooth, cm   # optional
    /// allow_equal = false  # optional
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut maps: BTreeMap<usize, RationalMap> = BTreeMap::new();
        let mut roles = None;
        let mut allow_equal = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "n" => n = Some(value.parse().map_err(|e| Error::Parse(format!("line {}: n: {e}", lineno + 1)))?),
                "roles" => roles = Some(value.split(',').map(CoordRole::from_str).collect::<Result<Vec<_>>>()?),
                "allow_equal" => {
                    allow_equal = value.parse().map_err(|e| Error::Parse(format!("line {}: allow_equal: {e}", lineno + 1)))?
                }
                k if k.starts_with('j') => {
                    let idx: usize = k[1..]
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {}: bad coordinate name `{k}`", lineno + 1)))?;
                    let (num, den) = match value.split_once('/') {
                        Some((a, b)) => (parse_coeffs(a)?, parse_coeffs(b)?),
                        None => (parse_coeffs(value)?, IntPoly::from_i64(&[1])),
                    };
                    if maps.insert(idx, RationalMap::new(num, den)?).is_some() {
                        return Err(Error::Parse(format!("line {}: {k} given twice", lineno + 1)));
                    }
                }
                other => return Err(Error::Parse(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        let n = n.ok_or_else(|| Error::Parse("missing `n = …`".into()))?;
        if maps.keys().cloned().collect::<Vec<_>>() != (1..=n).collect::<Vec<_>>() {
            return Err(Error::Parse(format!("expected maps j1 … j{n}")));
        }
        let c = CurveModel { n, maps: maps.into_values().collect(), roles, allow_equal };
        c.validate()?;
        Ok(c)
    }

    /// Text form accepted by [`CurveModel::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("n = {}\n", self.n);
        for (i, m) in self.maps.iter().enumerate() {
            s.push_str(&format!("j{} = {} / {}\n", i + 1, join_coeffs(&m.num), join_coeffs(&m.den)));
        }
        if let Some(r) = &self.roles {
            let names: Vec<&str> = r
                .iter()
                .map(|x| match x {
                    CoordRole::Smooth => "smooth",
                    CoordRole::Cm => "cm",
                    CoordRole::Singular => "singular",
                })
                .collect();
            s.push_str(&format!("roles = {}\n", names.join(", ")));
        }
        if self.allow_equal {
            s.push_str("allow_equal = true\n");
        }
        s
    }

    /// All unordered coordinate pairs `(a, b)`, `a < b`, 1-based.
    pub fn all_pairs(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for a in 1..=self.n {
            for b in a + 1..=self.n {
                v.push((a, b));
            }
        }
        v
    }

    fn map(&self, i: usize) -> Result<&RationalMap> {
        self.maps
            .get(i.wrapping_sub(1))
            .ok_or_else(|| Error::DomainError(format!("coordinate {i} out of range 1..={}", self.n)))
    }
}

/// Parameters `t` with `Φ_M(j_a(t), j_b(t)) = 0`: the specialized numerator
/// with every factor shared with a denominator removed.
pub fn stratum_poly(curve: &CurveModel, pair: (usize, usize), phi: &ModularPolynomial) -> Result<IntPoly> {
    let (f, g) = (curve.map(pair.0)?, curve.map(pair.1)?);
    let mut p = phi_specialize(phi, f, g)?;
    let dens = f.den.mul(&g.den);
    if dens.deg() > 0 {
        loop {
            let common = gcd(&p, &dens);
            if common.deg() == 0 {
                break;
            }
            p = p.div_exact(&common).expect("gcd divides exactly").primitive();
        }
    }
    Ok(p)
}

/// A set of conjugate parameters, given by a squarefree integer polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    /// `(a, b, M)`.
    pub pair1: (usize, usize, u32),
    /// `(c, d, N)` for double-stratum points.
    pub pair2: Option<(usize, usize, u32)>,
    /// Defining polynomial in `t`, constant-first coefficients as decimal strings.
    pub defining: Vec<String>,
    /// Human-readable defining polynomial.
    pub t_minpoly: String,
    /// Degree of the defining polynomial; bounds the degree of each point.
    pub degree_bound: usize,
    /// Height of `t`: `log M(defining)/deg`.
    pub height_t: f64,
    /// Height of each coordinate value `j_i(t)` over the point set; `None`
    /// where the coordinate has a pole at some root.
    pub heights_j: Vec<Option<f64>>,
    /// Advisory: coordinate value looks like a singular modulus.
    pub j_is_singular_modulus: Vec<bool>,
    /// Largest `|Φ(j_a(t), j_b(t))| / scale` over the roots, for every stratum the point lies on.
    pub phi_residual: f64,
}

impl ScanPoint {
    pub fn defining_poly(&self) -> Result<IntPoly> {
        self.defining
            .iter()
            .map(|c| c.parse::<BigInt>().map_err(|e| Error::Parse(e.to_string())))
            .collect::<Result<Vec<_>>>()
            .map(IntPoly::new)
    }

    pub fn is_double(&self) -> bool {
        self.pair2.is_some()
    }
}

/// Summary row for one stratum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumSummary {
    pub pair: (usize, usize),
    pub level: u32,
    pub degree: usize,
    pub root_count: usize,
    pub polynomial: String,
    /// Largest relative residual of `Φ_M` at the numerical roots.
    pub max_phi_residual: f64,
}

/// Double-stratum candidate that could only be confirmed numerically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericOnlyPoint {
    pub pair1: (usize, usize, u32),
    pub pair2: (usize, usize, u32),
    /// Root `t` as `[re, im]` decimal strings.
    pub t: [String; 2],
    pub residual: f64,
}

/// Drop pair-of-pairs by the boundary roles of their coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleFilter {
    Any,
    /// Skip when every involved coordinate is marked singular.
    NotAllSingular,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub levels: Vec<u32>,
    pub pairs: Vec<(usize, usize)>,
    pub role_filter: RoleFilter,
}

impl ScanOptions {
    pub fn all(curve: &CurveModel, levels: impl IntoIterator<Item = u32>) -> Self {
        ScanOptions { levels: levels.into_iter().collect(), pairs: curve.all_pairs(), role_filter: RoleFilter::Any }
    }
}

/// Advisory least-squares slopes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// Slope of `log(1 + height_t)` against `log max{M, N}`.
    pub height_vs_level: Option<f64>,
    /// Slope of `log degree_bound` against `log max{M, N}`.
    pub degree_vs_level: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub strata: usize,
    pub single_points: usize,
    pub double_points: usize,
    pub numeric_only: usize,
    pub max_height_t: Option<f64>,
    pub slopes: SlopeFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub precision_bits: u32,
    pub seed: u64,
    pub curve: String,
    pub options: ScanOptions,
    pub strata: Vec<StratumSummary>,
    pub points: Vec<ScanPoint>,
    pub numeric_only: Vec<NumericOnlyPoint>,
    pub summary: ScanSummary,
}

struct Stratum {
    pair: (usize, usize),
    level: u32,
    poly: IntPoly,
    roots: Vec<Complex<Mp>>,
}

/// `|Φ(x, y)| / Σ|c||x|ⁱ|y|ᵏ`.
fn phi_relative(phi: &ModularPolynomial, x: &Complex<Mp>, y: &Complex<Mp>, ctx: &PrecisionContext) -> f64 {
    let v = phi.eval_complex(x, y, ctx).abs().to_f64();
    let s = phi.eval_scale(x.abs().to_f64(), y.abs().to_f64());
    if s > 0.0 {
        v / s
    } else {
        v
    }
}

fn roots_of(p: &IntPoly, ctx: &PrecisionContext) -> Result<Vec<Complex<Mp>>> {
    if p.deg() == 0 {
        return Ok(Vec::new());
    }
    polyroots::<Mp>(&p.to_complex(ctx), ctx)
}

fn is_singular_modulus(value: &Complex<Mp>, ctx: &PrecisionContext) -> bool {
    if !value.is_finite() {
        return false;
    }
    match j_inverse(value, ctx) {
        Ok(tau) => detect_cm(&tau, CM_FORM_BOUND, ctx).is_some(),
        Err(_) => false,
    }
}

/// Build a point from a squarefree defining polynomial.
fn make_point(
    curve: &CurveModel,
    defining: &IntPoly,
    strata: &[(&Stratum, &ModularPolynomial)],
    pair2: Option<(usize, usize, u32)>,
    ctx: &PrecisionContext,
) -> Result<ScanPoint> {
    let s1 = strata[0].0;
    for (s, _) in strata {
        debug_assert!(defining.divides(&s.poly), "defining polynomial must divide the stratum");
    }
    let roots = roots_of(defining, ctx)?;
    let linear_root = if defining.deg() == 1 {
        Some(BigRational::new(-defining.coeff(0), defining.coeff(1)))
    } else {
        None
    };
    let height_t = match &linear_root {
        Some(r) => rational_height(r),
        None => mahler_height(defining, ctx)?,
    };
    let mut heights_j = Vec::with_capacity(curve.n);
    let mut flags = Vec::with_capacity(curve.n);
    for m in &curve.maps {
        let h = match &linear_root {
            Some(r) => m.eval(r).map(|v| rational_height(&v)),
            None if gcd(defining, &m.den).deg() > 0 => None,
            None => {
                let cp = squarefree(&image_charpoly(defining, &m.num, &m.den));
                Some(if cp.deg() == 0 { 0.0 } else { mahler_height(&cp, ctx)? })
            }
        };
        heights_j.push(h);
        flags.push(roots.iter().any(|t| is_singular_modulus(&m.eval_complex(t, ctx), ctx)));
    }
    let mut phi_residual: f64 = 0.0;
    for (s, phi) in strata {
        let (f, g) = (curve.map(s.pair.0)?, curve.map(s.pair.1)?);
        for t in &roots {
            phi_residual = phi_residual.max(phi_relative(phi, &f.eval_complex(t, ctx), &g.eval_complex(t, ctx), ctx));
        }
    }
    Ok(ScanPoint {
        pair1: (s1.pair.0, s1.pair.1, s1.level),
        pair2,
        defining: defining.coeffs().iter().map(|c| c.to_string()).collect(),
        t_minpoly: defining.to_string(),
        degree_bound: defining.deg(),
        height_t,
        heights_j,
        j_is_singular_modulus: flags,
        phi_residual,
    })
}

/// Split a squarefree polynomial into its rational linear factors and the
/// remaining cofactor (omitted when constant).
fn split_rational(p: &IntPoly, ctx: &PrecisionContext) -> Result<Vec<IntPoly>> {
    let mut parts = Vec::new();
    let mut rest = p.primitive();
    for r in rational_roots(p, ctx)? {
        let lf = linear_factor(&r);
        rest = rest.div_exact(&lf).expect("rational root gives an exact linear factor").primitive();
        parts.push(lf);
    }
    if rest.deg() > 0 {
        parts.push(rest);
    }
    Ok(parts)
}

fn role_allows(curve: &CurveModel, filter: RoleFilter, coords: &[usize]) -> bool {
    match (filter, &curve.roles) {
        (RoleFilter::NotAllSingular, Some(roles)) => !coords.iter().all(|&k| roles[k - 1] == CoordRole::Singular),
        _ => true,
    }
}

/// Single-stratum points for every (pair, level) and double-stratum points
/// from the exact gcd of every two strata on distinct pairs.
///
/// Levels above [`MAX_EXACT_LEVEL`] have no exact table; they are only
/// checked numerically at the roots of the exact strata and reported as
/// numeric-only.
pub fn unlikely_points(curve: &CurveModel, opts: &ScanOptions, ctx: &PrecisionContext) -> Result<ScanReport> {
    curve.validate()?;
    for &(a, b) in &opts.pairs {
        if a == b || a == 0 || b == 0 || a > curve.n || b > curve.n {
            return Err(Error::DomainError(format!("pair ({a}, {b}) is not two distinct coordinates")));
        }
    }
    let exact_levels: Vec<u32> = opts.levels.iter().cloned().filter(|&m| m >= 1 && m <= MAX_EXACT_LEVEL).collect();
    let numeric_levels: Vec<u32> = opts.levels.iter().cloned().filter(|&m| m > MAX_EXACT_LEVEL).collect();
    let phis: BTreeMap<u32, ModularPolynomial> = exact_levels
        .par_iter()
        .map(|&m| phi_recover_exact(m, ctx).map(|p| (m, p)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();

    let grid: Vec<((usize, usize), u32)> =
        opts.pairs.iter().flat_map(|&p| exact_levels.iter().map(move |&m| (p, m))).collect();
    let strata: Vec<Stratum> = grid
        .par_iter()
        .map(|&(pair, level)| {
            let poly = squarefree(&stratum_poly(curve, pair, &phis[&level])?);
            let roots = roots_of(&poly, ctx)?;
            Ok(Stratum { pair, level, poly, roots })
        })
        .collect::<Result<Vec<_>>>()?;

    let summaries: Vec<StratumSummary> = strata
        .iter()
        .map(|s| {
            let (f, g) = (curve.map(s.pair.0)?, curve.map(s.pair.1)?);
            let phi = &phis[&s.level];
            let max_phi_residual = s
                .roots
                .iter()
                .map(|t| phi_relative(phi, &f.eval_complex(t, ctx), &g.eval_complex(t, ctx), ctx))
                .fold(0.0, f64::max);
            Ok(StratumSummary {
                pair: s.pair,
                level: s.level,
                degree: s.poly.deg(),
                root_count: s.roots.len(),
                polynomial: s.poly.to_string(),
                max_phi_residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let singles: Vec<Vec<ScanPoint>> = strata
        .par_iter()
        .map(|s| {
            split_rational(&s.poly, ctx)?
                .iter()
                .map(|part| make_point(curve, part, &[(s, &phis[&s.level])], None, ctx))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut combos = Vec::new();
    for (x, s) in strata.iter().enumerate() {
        for t in strata.iter().skip(x + 1) {
            let same = s.pair == t.pair;
            let coords = [s.pair.0, s.pair.1, t.pair.0, t.pair.1];
            if !same && role_allows(curve, opts.role_filter, &coords) && s.poly.deg() > 0 && t.poly.deg() > 0 {
                combos.push((s, t));
            }
        }
    }
    let doubles: Vec<Vec<ScanPoint>> = combos
        .par_iter()
        .map(|(s, t)| {
            let g = gcd(&s.poly, &t.poly);
            if g.deg() == 0 {
                return Ok(Vec::new());
            }
            split_rational(&g, ctx)?
                .iter()
                .map(|part| {
                    make_point(
                        curve,
                        part,
                        &[(s, &phis[&s.level]), (t, &phis[&t.level])],
                        Some((t.pair.0, t.pair.1, t.level)),
                        ctx,
                    )
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut numeric_only = Vec::new();
    if !numeric_levels.is_empty() {
        let mut tasks: Vec<(&Stratum, (usize, usize), u32)> = Vec::new();
        for s in &strata {
            for &p in opts.pairs.iter().filter(|&&p| p != s.pair) {
                tasks.extend(numeric_levels.iter().map(|&n| (s, p, n)));
            }
        }
        let found: Vec<Vec<NumericOnlyPoint>> = tasks
            .par_iter()
            .map(|&(s, pair, n)| numeric_double(curve, s, pair, n, ctx))
            .collect::<Result<Vec<_>>>()?;
        numeric_only = found.into_iter().flatten().collect();
    }

    let mut points: Vec<ScanPoint> = singles.into_iter().flatten().collect();
    points.extend(doubles.into_iter().flatten());
    let summary = summarize(&summaries, &points, numeric_only.len());
    Ok(ScanReport {
        precision_bits: ctx.bits,
        seed: 0,
        curve: curve.to_text(),
        options: opts.clone(),
        strata: summaries,
        points,
        numeric_only,
        summary,
    })
}

/// Numeric check of level `n` on `pair` at the roots of an exact stratum.
fn numeric_double(
    curve: &CurveModel,
    s: &Stratum,
    pair: (usize, usize),
    n: u32,
    ctx: &PrecisionContext,
) -> Result<Vec<NumericOnlyPoint>> {
    let (f, g) = (curve.map(pair.0)?, curve.map(pair.1)?);
    let mut out = Vec::new();
    for t in &s.roots {
        let x = f.eval_complex(t, ctx);
        let y = g.eval_complex(t, ctx);
        if !x.is_finite() || !y.is_finite() {
            continue;
        }
        let Ok(tau) = j_inverse(&y, ctx) else { continue };
        let v = phi_eval_numeric(n, &x, &tau, ctx)?.abs().to_f64();
        let scale = numeric_scale(n, &x, &tau, ctx)?;
        let residual = if scale > 0.0 { v / scale } else { v };
        if residual < ctx.sqrt_tol() {
            out.push(NumericOnlyPoint {
                pair1: (s.pair.0, s.pair.1, s.level),
                pair2: (pair.0, pair.1, n),
                t: [t.re.to_decimal(30), t.im.to_decimal(30)],
                residual,
            });
        }
    }
    Ok(out)
}

fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

fn summarize(strata: &[StratumSummary], points: &[ScanPoint], numeric_only: usize) -> ScanSummary {
    let level = |p: &ScanPoint| p.pair2.map_or(p.pair1.2, |q| q.2.max(p.pair1.2)) as f64;
    let finite: Vec<&ScanPoint> = points.iter().filter(|p| p.height_t.is_finite()).collect();
    let xs: Vec<f64> = finite.iter().map(|p| level(p).ln()).collect();
    let hs: Vec<f64> = finite.iter().map(|p| (1.0 + p.height_t).ln()).collect();
    let ds: Vec<f64> = finite.iter().map(|p| (p.degree_bound as f64).ln()).collect();
    ScanSummary {
        strata: strata.len(),
        single_points: points.iter().filter(|p| !p.is_double()).count(),
        double_points: points.iter().filter(|p| p.is_double()).count(),
        numeric_only,
        max_height_t: finite.iter().map(|p| p.height_t).fold(None, |m, h| Some(m.map_or(h, |x: f64| x.max(h)))),
        slopes: SlopeFit { height_vs_level: slope(&xs, &hs), degree_vs_level: slope(&xs, &ds) },
    }
}

/// CSV columns of [`write_csv`].
pub const CSV_HEADER: [&str; 9] =
    ["pair1", "M", "pair2", "N", "degree_bound", "height_t", "heights_j", "j_is_singular_modulus", "t_minpoly"];

/// One CSV row per point; list-valued cells are `;`-separated.
pub fn csv_rows(report: &ScanReport) -> Vec<[String; 9]> {
    report
        .points
        .iter()
        .map(|p| {
            let join = |v: Vec<String>| v.join(";");
            [
                format!("{}-{}", p.pair1.0, p.pair1.1),
                p.pair1.2.to_string(),
                p.pair2.map(|q| format!("{}-{}", q.0, q.1)).unwrap_or_default(),
                p.pair2.map(|q| q.2.to_string()).unwrap_or_default(),
                p.degree_bound.to_string(),
                format!("{:.17e}", p.height_t),
                join(p.heights_j.iter().map(|h| h.map(|h| format!("{h:.17e}")).unwrap_or_else(|| "pole".into())).collect()),
                join(p.j_is_singular_modulus.iter().map(|b| b.to_string()).collect()),
                p.t_minpoly.clone(),
            ]
        })
        .collect()
}

impl fmt::Display for ScanSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} strata, {} single-stratum point sets, {} double-stratum point sets, {} numeric-only",
            self.strata, self.single_points, self.double_points, self.numeric_only
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(text: &str) -> CurveModel {
        CurveModel::parse(text).unwrap()
    }

    #[test]
    fn parse_round_trip() {
        let c = curve("n = 2\nj1 = 0, 1 / 1\nj2 = 1, 1 # t+1\nroles = smooth, cm\n");
        assert_eq!(c.n, 2);
        assert_eq!(c.maps[1].num, IntPoly::from_i64(&[1, 1]));
        assert_eq!(CurveModel::parse(&c.to_text()).unwrap(), c);
        assert!(CurveModel::parse("n = 2\nj1 = 0, 1\n").is_err());
        assert!(CurveModel::parse("n = 2\nj1 = 0, 1\nj2 = 0, 1\n").is_err());
        assert!(CurveModel::parse("n = 2\nj1 = 0, 1\nj2 = 0, 1\nallow_equal = true\n").is_ok());
        assert!(CurveModel::parse("n = 2\nj1 = 0, x\nj2 = 1\n").is_err());
    }

    #[test]
    fn level_one_strata() {
        let phi = ModularPolynomial::level_one();
        let c = curve("n = 2\nj1 = 0, 1\nj2 = 0, 1\nallow_equal = true\n");
        assert!(matches!(stratum_poly(&c, (1, 2), &phi), Err(Error::DegenerateInput(_))));
        let c = curve("n = 2\nj1 = 0, 1\nj2 = 1, 1\n");
        assert_eq!(stratum_poly(&c, (1, 2), &phi).unwrap(), IntPoly::from_i64(&[1]));
    }

    #[test]
    fn denominator_roots_are_removed() {
        // j1 = 1/t, j2 = 1/t + 1: the cleared numerator of X − Y is −t·…; nothing survives
        let phi = ModularPolynomial::level_one();
        let c = curve("n = 2\nj1 = 1 / 0, 1\nj2 = 1, 1 / 0, 1\n");
        assert_eq!(stratum_poly(&c, (1, 2), &phi).unwrap().deg(), 0);
    }

    #[test]
    fn pole_of_another_coordinate() {
        // t = 0 lies on X − Y for (1, 2); coordinate 3 has a pole there
        let ctx = PrecisionContext::new(128);
        let c = curve("n = 3\nj1 = 0, 1\nj2 = 0, 2\nj3 = 1 / 0, 1\n");
        let opts = ScanOptions { levels: vec![1], pairs: vec![(1, 2)], role_filter: RoleFilter::Any };
        let r = unlikely_points(&c, &opts, &ctx).unwrap();
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.points[0].heights_j, vec![Some(0.0), Some(0.0), None]);
        let back: ScanReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn empty_report_summary() {
        let s = summarize(&[], &[], 0);
        assert_eq!((s.single_points, s.double_points, s.max_height_t), (0, 0, None));
        assert_eq!(s.slopes.height_vs_level, None);
    }

    #[test]
    fn linear_pair_level_two() {
        let ctx = PrecisionContext::new(256);
        let c = curve("n = 2\nj1 = 0, 1\nj2 = 1, 1\n");
        let r = unlikely_points(&c, &ScanOptions::all(&c, [2]), &ctx).unwrap();
        assert_eq!(r.strata.len(), 1);
        // Φ2(t, t + 1) has degree 4 in t: X³ and Y³ leading terms give −X²Y²
        let phi2 = phi_recover_exact(2, &ctx).unwrap();
        let p = stratum_poly(&c, (1, 2), &phi2).unwrap();
        assert_eq!(r.strata[0].degree, squarefree(&p).deg());
        assert!(r.strata[0].max_phi_residual < ctx.sqrt_tol());
        let total: usize = r.points.iter().map(|p| p.degree_bound).sum();
        assert_eq!(total, r.strata[0].degree);
        assert_eq!(r.summary.double_points, 0);
    }

    #[test]
    fn engineered_double_point() {
        let ctx = PrecisionContext::new(256);
        let c = curve("n = 3\nj1 = -7, 7\nj2 = 53998, -1, 3\nj3 = -12288011, 11\n");
        let r = unlikely_points(&c, &ScanOptions::all(&c, [2, 3]), &ctx).unwrap();
        let doubles: Vec<&ScanPoint> = r.points.iter().filter(|p| p.is_double()).collect();
        assert_eq!(doubles.len(), 1);
        let at_one = doubles
            .iter()
            .find(|p| p.defining_poly().unwrap() == IntPoly::from_i64(&[-1, 1]))
            .expect("t = 1 lies on two strata");
        assert_eq!(at_one.degree_bound, 1);
        assert_eq!((at_one.pair1, at_one.pair2), ((1, 2, 2), Some((1, 3, 3))));
        assert!(at_one.phi_residual < ctx.sqrt_tol());
        assert_eq!(at_one.height_t, 0.0);
        // j-values 0, 54000, −12288000 are all singular moduli
        assert_eq!(at_one.j_is_singular_modulus, vec![true, true, true]);
        assert!((at_one.heights_j[1].unwrap() - 54000f64.ln()).abs() < 1e-12);
        for p in &r.points {
            let d = p.defining_poly().unwrap();
            assert!(p.phi_residual < ctx.sqrt_tol(), "{}", p.t_minpoly);
            assert_eq!(squarefree(&d), d.primitive());
        }
        let json = serde_json::to_string(&r).unwrap();
        let back: ScanReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.points.len(), r.points.len());
        assert_eq!(csv_rows(&r).len(), r.points.len());
    }
}
