//! Special-function kernels: AGM, Eisenstein q-series, the discriminant and
//! `j`, inversion of `j`, and simultaneous polynomial root finding.

use num_complex::Complex;
use num_traits::Zero;

use crate::complex::{cint, cone, convert, cx, czero, to_c64, two_pi_i, ComplexExt};
use crate::context::PrecisionContext;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Integer matrix `(a, b; c, d)` of determinant one.
pub type Sl2 = [[i64; 2]; 2];

pub const SL2_IDENTITY: Sl2 = [[1, 0], [0, 1]];

fn sl2_mul(x: &Sl2, y: &Sl2) -> Sl2 {
    [
        [x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]],
        [x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]],
    ]
}

/// Möbius action of an integer matrix.
pub fn mobius<R: Real>(g: &Sl2, tau: &Complex<R>, ctx: &PrecisionContext) -> Complex<R> {
    let num = tau.clone() * cint::<R>(ctx, g[0][0]) + cint(ctx, g[0][1]);
    let den = tau.clone() * cint::<R>(ctx, g[1][0]) + cint(ctx, g[1][1]);
    num / den
}

fn require_upper<R: Real>(tau: &Complex<R>) -> Result<()> {
    if tau.im > R::zero() && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("Im(tau) must be positive, got {}", tau.im.to_f64())))
    }
}

/// SL₂(ℤ) reduction into the standard fundamental domain.
///
/// Returns `(τ', γ)` with `τ' = γ·τ`, `|Re τ'| ≤ 1/2` and `|τ'| ≥ 1` up to
/// rounding.
pub fn reduce_to_fundamental<R: Real>(tau: &Complex<R>, ctx: &PrecisionContext) -> Result<(Complex<R>, Sl2)> {
    require_upper(tau)?;
    let mut t = tau.clone();
    let mut g = SL2_IDENTITY;
    let slack = R::one() - ctx.eps_r::<R>(4);
    for _ in 0..100_000 {
        let n = t
            .re
            .round_to_bigint()
            .and_then(|b| num_traits::ToPrimitive::to_i64(&b))
            .ok_or_else(|| Error::DomainError("real part too large to reduce".into()))?;
        if n != 0 {
            t.re = t.re.clone() - ctx.int::<R>(n);
            g = sl2_mul(&[[1, -n], [0, 1]], &g);
        }
        if t.norm_sqr() < slack {
            t = -(cone::<R>() / t);
            g = sl2_mul(&[[0, -1], [1, 0]], &g);
        } else {
            return Ok((t, g));
        }
    }
    Err(Error::NonConvergence("fundamental-domain reduction".into()))
}

/// Arithmetic–geometric mean with the right choice of square root.
pub fn agm<R: Real>(a: &Complex<R>, b: &Complex<R>, ctx: &PrecisionContext) -> Result<Complex<R>> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::DomainError("agm of zero".into()));
    }
    let half: R = ctx.lift(0.5);
    let thr: R = ctx.eps_r(6);
    let mut a = a.clone();
    let mut b = b.clone();
    for _ in 0..(4 * ctx.bits) {
        if (a.clone() - b.clone()).abs() <= thr.clone() * a.abs() {
            return Ok(a);
        }
        let a1 = (a.clone() + b.clone()).scale_by(&half);
        if a1.is_zero() {
            return Err(Error::DomainError("agm of opposite arguments".into()));
        }
        let mut b1 = (a.clone() * b.clone()).sqrt();
        let dm = (a1.clone() - b1.clone()).abs();
        let dp = (a1.clone() + b1.clone()).abs();
        if dm > dp || (dm == dp && b1.re < R::zero()) {
            b1 = -b1;
        }
        a = a1;
        b = b1;
    }
    Err(Error::NonConvergence(format!("agm after {} iterations", 4 * ctx.bits)))
}

/// `q = e^{2πiτ}`, with the real part of τ reduced mod 1 first so that
/// `q(τ+1)` and `q(τ)` are computed from identical inputs.
pub fn nome<R: Real>(tau: &Complex<R>, ctx: &PrecisionContext) -> Complex<R> {
    let x = tau.re.clone() - tau.re.floor();
    let two_pi = ctx.pi::<R>() * ctx.int::<R>(2);
    let m = (-(two_pi.clone() * tau.im.clone())).exp();
    let (s, c) = (two_pi * x).sin_cos();
    Complex::new(m.clone() * c, m * s)
}

fn truncation_threshold<R: Real>(ctx: &PrecisionContext) -> R {
    ctx.tol_r(-16)
}

/// Weight-`k` Eisenstein series `E_k(τ)` for `k ∈ {2, 4, 6}`, normalized so
/// that `E_k = 1 + O(q)`.
///
/// Evaluated as the Lambert series `1 + C_k Σ n^{k-1} qⁿ/(1-qⁿ)`. No
/// reduction is applied: `E₂` is only quasi-modular.
pub fn eisenstein<R: Real>(k: u32, tau: &Complex<R>, ctx: &PrecisionContext) -> Result<Complex<R>> {
    let coeff: i64 = match k {
        2 => -24,
        4 => 240,
        6 => -504,
        _ => return Err(Error::DomainError(format!("weight {k} not in {{2,4,6}}"))),
    };
    require_upper(tau)?;
    let q = nome(tau, ctx);
    let q_abs = q.abs().to_f64();
    // Terms n^{k-1}|q|^n are increasing until n ≈ (k-1)/(-ln|q|).
    let peak = if q_abs > 0.0 { (k as f64 - 1.0) / -q_abs.ln() } else { 0.0 };
    let thr: R = truncation_threshold(ctx);
    let c: R = ctx.int(coeff);
    let mut sum = czero::<R>();
    let mut qn = cone::<R>();
    for n in 1..=ctx.max_terms {
        qn = qn * q.clone();
        let nk = ctx.int::<R>(n as i64);
        let mut w = R::one();
        for _ in 0..(k - 1) {
            w = w * nk.clone();
        }
        let term = qn.scale_by(&w) / (cone::<R>() - qn.clone());
        let mag = term.abs() * c.abs();
        sum = sum + term;
        if (n as f64) > peak && mag < thr {
            return Ok(cone::<R>() + sum.scale_by(&c));
        }
    }
    Err(Error::NonConvergence(format!("E{k} q-series exceeded {} terms", ctx.max_terms)))
}

/// Normalized discriminant `Δ(τ) = q ∏ (1 - qⁿ)²⁴ = (E₄³ - E₆²)/1728`.
pub fn delta<R: Real>(tau: &Complex<R>, ctx: &PrecisionContext) -> Result<Complex<R>> {
    require_upper(tau)?;
    let q = nome(tau, ctx);
    let thr: R = truncation_threshold(ctx);
    let mut prod = cone::<R>();
    let mut qn = cone::<R>();
    for _ in 1..=ctx.max_terms {
        qn = qn * q.clone();
        prod = prod * (cone::<R>() - qn.clone());
        if qn.abs() * ctx.int::<R>(24) < thr {
            return Ok(q * prod.powu(24));
        }
    }
    Err(Error::NonConvergence("Δ product exceeded max_terms".into()))
}

/// Klein's `j(τ) = E₄³/Δ`, evaluated after reduction to the fundamental
/// domain.
pub fn j_invariant<R: Real>(tau: &Complex<R>, ctx: &PrecisionContext) -> Result<Complex<R>> {
    let (t, _) = reduce_to_fundamental(tau, ctx)?;
    j_unreduced(&t, ctx)
}

fn j_unreduced<R: Real>(t: &Complex<R>, ctx: &PrecisionContext) -> Result<Complex<R>> {
    let e4 = eisenstein(4, t, ctx)?;
    Ok(e4.powu(3) / delta(t, ctx)?)
}

/// `j` together with `dj/dτ = -2πi·(E₆/E₄)·j`, at an already reduced τ.
fn j_and_derivative<R: Real>(t: &Complex<R>, ctx: &PrecisionContext) -> Result<(Complex<R>, Complex<R>)> {
    let e4 = eisenstein(4, t, ctx)?;
    let e6 = eisenstein(6, t, ctx)?;
    let j = e4.powu(3) / delta(t, ctx)?;
    let dj = -(two_pi_i::<R>(ctx) * e6 / e4 * j.clone());
    Ok((j, dj))
}

/// Solve `j(τ) = value` for τ in the fundamental domain.
///
/// A coarse `f64` search seeds Newton's method at full precision. Values at
/// the elliptic points 0 and 1728 return ρ and i directly.
pub fn j_inverse<R: Real>(value: &Complex<R>, ctx: &PrecisionContext) -> Result<Complex<R>> {
    let near = |c: f64| (value.clone() - cx::<R>(ctx, c, 0.0)).abs().to_f64() <= ctx.tol * (1.0 + c);
    if near(0.0) {
        let half: R = ctx.lift(0.5);
        let h = ctx.int::<R>(3).sqrt() * half.clone();
        return Ok(Complex::new(-half, h));
    }
    if near(1728.0) {
        return Ok(Complex::new(R::zero(), R::one()));
    }
    let v64 = to_c64(value);
    let seed64 = if v64.norm() > 1e5 {
        // j ≈ 1/q + 744
        let q = Complex::new(1.0, 0.0) / (v64 - 744.0);
        let t = q.ln() / Complex::new(0.0, 2.0 * std::f64::consts::PI);
        let c64 = PrecisionContext::float64();
        reduce_to_fundamental(&t, &c64)?.0
    } else {
        coarse_seed(v64)?
    };
    let mut t: Complex<R> = convert(&seed64, ctx.bits);
    let half = ctx.eps_r::<R>(0).sqrt();
    let stop = half * ctx.int::<R>(4);
    let mut small_steps = 0;
    for _ in 0..200 {
        let (j, dj) = j_and_derivative(&t, ctx)?;
        if dj.is_zero() {
            return Err(Error::NonConvergence("j' vanished during inversion".into()));
        }
        let step = (j - value.clone()) / dj;
        let done = step.abs() < stop.clone() * t.abs();
        t = t - step;
        if t.im <= R::zero() {
            return Err(Error::NonConvergence("Newton left the upper half-plane".into()));
        }
        t = reduce_to_fundamental(&t, ctx)?.0;
        if done {
            // quadratic convergence: one more step after reaching √eps
            small_steps += 1;
            if small_steps >= 2 {
                return Ok(t);
            }
        }
    }
    Err(Error::NonConvergence("j inversion".into()))
}

fn coarse_seed(v: Complex<f64>) -> Result<Complex<f64>> {
    let ctx = PrecisionContext::float64();
    let mut best = (f64::INFINITY, Complex::new(0.0, 1.0));
    for a in 0..=40 {
        let re = -0.5 + a as f64 / 40.0;
        for b in 0..=60 {
            let im = 0.85 + b as f64 * 0.05;
            let t = Complex::new(re, im);
            let j = j_unreduced(&t, &ctx)?;
            let d = (j - v).norm() / (1.0 + v.norm());
            if d < best.0 {
                best = (d, t);
            }
        }
    }
    Ok(best.1)
}

/// Evaluate `Σ cᵢ xⁱ` (coefficients constant-first) and its derivative.
pub fn horner<R: Real>(coeffs: &[Complex<R>], x: &Complex<R>) -> (Complex<R>, Complex<R>) {
    let mut p = czero::<R>();
    let mut dp = czero::<R>();
    for c in coeffs.iter().rev() {
        dp = dp * x.clone() + p.clone();
        p = p * x.clone() + c.clone();
    }
    (p, dp)
}

/// Expand `∏ (x - rᵢ)`, constant-first.
pub fn poly_from_roots<R: Real>(roots: &[Complex<R>]) -> Vec<Complex<R>> {
    let mut c = vec![cone::<R>()];
    for r in roots {
        let mut next = vec![czero::<R>(); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i + 1] = next[i + 1].clone() + ci.clone();
            next[i] = next[i].clone() - ci.clone() * r.clone();
        }
        c = next;
    }
    c
}

pub const MAX_ROOT_SWEEPS: usize = 1000;

/// All complex roots (with multiplicity) by Aberth–Ehrlich iteration.
///
/// Coefficients are constant-first. Initial approximations are spread on
/// circles read off the Newton polygon of the coefficient moduli.
pub fn polyroots<R: Real>(coeffs: &[Complex<R>], ctx: &PrecisionContext) -> Result<Vec<Complex<R>>> {
    if coeffs.len() < 2 {
        return Err(Error::DegenerateInput("polynomial of degree < 1".into()));
    }
    let n = coeffs.len() - 1;
    if coeffs[n].is_zero() {
        return Err(Error::DegenerateInput("leading coefficient is zero".into()));
    }
    // exact zero roots are split off so the iteration only sees a0 != 0
    let low = coeffs.iter().position(|c| !c.is_zero()).unwrap_or(n);
    if low > 0 {
        let mut out = vec![czero::<R>(); low];
        if low < n {
            out.extend(polyroots(&coeffs[low..], ctx)?);
        }
        return Ok(out);
    }
    if n == 1 {
        return Ok(vec![-(coeffs[0].clone() / coeffs[1].clone())]);
    }
    let abs: Vec<R> = coeffs.iter().map(ComplexExt::abs).collect();
    let mut z = initial_guesses(&abs, ctx);
    let backward: R = ctx.eps_r::<R>(3) * ctx.int::<R>(n as i64 + 1);
    let mut done = vec![false; n];
    for _ in 0..MAX_ROOT_SWEEPS {
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (p, dp) = horner(coeffs, &z[i]);
            let zi_abs = z[i].abs();
            let mut scale = R::zero();
            for a in abs.iter().rev() {
                scale = scale * zi_abs.clone() + a.clone();
            }
            if p.abs() <= backward.clone() * scale {
                done[i] = true;
                continue;
            }
            let ratio = p / dp;
            let mut s = czero::<R>();
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    let d = z[i].clone() - zj.clone();
                    if !d.is_zero() {
                        s = s + cone::<R>() / d;
                    }
                }
            }
            let denom = cone::<R>() - ratio.clone() * s;
            let w = if denom.is_zero() { ratio } else { ratio / denom };
            z[i] = z[i].clone() - w;
        }
        if done.iter().all(|&d| d) {
            return Ok(z);
        }
    }
    Err(Error::NonConvergence(format!("polyroots after {MAX_ROOT_SWEEPS} sweeps")))
}

fn initial_guesses<R: Real>(abs: &[R], ctx: &PrecisionContext) -> Vec<Complex<R>> {
    let n = abs.len() - 1;
    let pts: Vec<(usize, f64)> = abs
        .iter()
        .enumerate()
        .filter(|(_, a)| !a.is_zero())
        .map(|(i, a)| (i, a.ln().to_f64()))
        .collect();
    // upper convex hull of (i, log|a_i|)
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (i1, l1) = hull[hull.len() - 2];
            let (i2, l2) = hull[hull.len() - 1];
            let cross = (i2 as f64 - i1 as f64) * (p.1 - l1) - (l2 - l1) * (p.0 as f64 - i1 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = Vec::with_capacity(n);
    let two_pi = 2.0 * std::f64::consts::PI;
    for w in hull.windows(2) {
        let (i, li) = w[0];
        let (j, lj) = w[1];
        let m = j - i;
        let r = ((li - lj) / m as f64).exp();
        for k in 0..m {
            let ang = two_pi * (k as f64) / (m as f64) + 0.4 + 0.1 * (i as f64);
            out.push(cx::<R>(ctx, r * ang.cos(), r * ang.sin()));
        }
    }
    out
}

/// Normalized residual `|p(z)| / (|lead|·max(1,|z|)^deg)` maximised over roots.
pub fn root_residual<R: Real>(coeffs: &[Complex<R>], roots: &[Complex<R>]) -> f64 {
    let n = coeffs.len() - 1;
    let lead = coeffs[n].abs();
    roots
        .iter()
        .map(|z| {
            let (p, _) = horner(coeffs, z);
            let m = z.abs().max_of(R::one());
            let mut d = lead.clone();
            for _ in 0..n {
                d = d * m.clone();
            }
            (p.abs() / d).to_f64()
        })
        .fold(0.0, f64::max)
}
