//! Independent oracles used by the integration tests. Nothing here calls the
//! routine it is meant to check.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_traits::{One, Zero};
use zp_core::complex::ComplexExt;
use zp_core::exactpoly::IntPoly;
use zp_core::{Mp, PrecisionContext, Real};

pub type C = Complex<Mp>;

pub fn c(ctx: &PrecisionContext, re: f64, im: f64) -> C {
    Complex::new(ctx.lift(re), ctx.lift(im))
}

/// Roots of the monic cubic `x³ + p·x + q` by Durand–Kerner iteration.
pub fn cubic_roots(p: &C, q: &C, ctx: &PrecisionContext) -> [C; 3] {
    let f = |x: &C| x.clone() * x.clone() * x.clone() + p.clone() * x.clone() + q.clone();
    let seed = c(ctx, 0.4, 0.9);
    let scale = c(ctx, 1.0 + p.abs().to_f64().sqrt() + q.abs().to_f64().cbrt(), 0.0);
    let mut r = [
        seed.clone() * scale.clone(),
        seed.clone() * seed.clone() * scale.clone(),
        seed.clone() * seed.clone() * seed * scale,
    ];
    let stop = 2f64.powi(-(ctx.bits as i32) + 8);
    for _ in 0..(20 * ctx.bits) {
        let mut moved: f64 = 0.0;
        for i in 0..3 {
            let mut den = c(ctx, 1.0, 0.0);
            for j in 0..3 {
                if i != j {
                    den = den * (r[i].clone() - r[j].clone());
                }
            }
            let step = f(&r[i]) / den;
            moved = moved.max(step.abs().to_f64() / (1.0 + r[i].abs().to_f64()));
            r[i] = r[i].clone() - step;
        }
        if moved < stop {
            break;
        }
    }
    r
}

/// Periodic trapezoid rule on `[0, π)` with the square root continued
/// along the sample order.
fn cycle_integrals(ei: &C, ej: &C, ek: &C, n: usize, ctx: &PrecisionContext) -> (C, C) {
    let pi = ctx.pi::<Mp>();
    let h = pi.clone() / ctx.int::<Mp>(n as i64);
    let mut prev: Option<C> = None;
    let (mut s0, mut s1) = (c(ctx, 0.0, 0.0), c(ctx, 0.0, 0.0));
    for k in 0..n {
        let theta = h.clone() * ctx.int::<Mp>(k as i64);
        let (s, _) = theta.sin_cos();
        let x = ei.clone() + (ej.clone() - ei.clone()).scale_by(&(s.clone() * s));
        let mut root = (ek.clone() - x.clone()).sqrt();
        if let Some(p) = &prev {
            if (root.clone() - p.clone()).abs() > (root.clone() + p.clone()).abs() {
                root = -root;
            }
        }
        prev = Some(root.clone());
        let inv = c(ctx, 1.0, 0.0) / root;
        s1 = s1 + x * inv.clone();
        s0 = s0 + inv;
    }
    (s0.scale_by(&h), s1.scale_by(&h))
}

/// `(∮ dx/y, ∮ x dx/y)` over the cycle around `e_i, e_j` on
/// `y² = 4x³ − g₂x − g₃`, refined until two resolutions agree to `2^-stop_bits`.
///
/// With `x = e_i + (e_j − e_i)·sin²θ` the integrand `dx/y` becomes
/// `dθ/√(e_k − x)`, smooth and π-periodic, so the trapezoid rule converges
/// geometrically.
pub fn period_by_quadrature(g2: &C, g3: &C, i: usize, j: usize, stop_bits: i32, ctx: &PrecisionContext) -> (C, C) {
    let quarter = ctx.lift::<Mp>(0.25);
    let e = cubic_roots(&(-g2.scale_by(&quarter)), &(-g3.scale_by(&quarter)), ctx);
    let k = 3 - i - j;
    let stop = 2f64.powi(-stop_bits);
    let mut n = 64;
    let mut last = cycle_integrals(&e[i], &e[j], &e[k], n, ctx);
    loop {
        n *= 2;
        let next = cycle_integrals(&e[i], &e[j], &e[k], n, ctx);
        let d = (next.0.clone() - last.0.clone()).abs().to_f64() + (next.1.clone() - last.1.clone()).abs().to_f64();
        if d < stop * (1.0 + next.0.abs().to_f64()) || n > 1 << 16 {
            return next;
        }
        last = next;
    }
}

/// Integers `(m, n)` with `z = m·w1 + n·w2`, by solving the real 2×2 system
/// and rounding; `None` when the solution is not integral to `1e-6`.
pub fn lattice_coords(z: &C, w1: &C, w2: &C) -> Option<(i64, i64)> {
    let (a, b, cc, d) = (w1.re.to_f64(), w2.re.to_f64(), w1.im.to_f64(), w2.im.to_f64());
    let det = a * d - b * cc;
    let (x, y) = (z.re.to_f64(), z.im.to_f64());
    let m = (d * x - b * y) / det;
    let n = (a * y - cc * x) / det;
    let (mr, nr) = (m.round(), n.round());
    ((m - mr).abs() < 1e-6 && (n - nr).abs() < 1e-6).then_some((mr as i64, nr as i64))
}

/// `π / (2·∫₀^{π/2} dθ/√(a²cos²θ + b²sin²θ))` by the periodic trapezoid rule,
/// for real `a, b > 0`.
pub fn agm_by_integral(a: &Mp, b: &Mp, ctx: &PrecisionContext) -> Mp {
    let pi = ctx.pi::<Mp>();
    let n = 4 * ctx.bits as i64;
    let h = pi.clone() / ctx.int::<Mp>(n);
    let mut s = ctx.int::<Mp>(0);
    for k in 0..n {
        let (sn, cs) = (h.clone() * ctx.int::<Mp>(k)).sin_cos();
        let q = a.clone() * a.clone() * cs.clone() * cs + b.clone() * b.clone() * sn.clone() * sn;
        s = s + ctx.int::<Mp>(1) / q.sqrt();
    }
    // ∫₀^π = 2∫₀^{π/2}; the trapezoid sum approximates ∫₀^π
    let integral_half = s * h / ctx.int::<Mp>(2);
    pi / (ctx.int::<Mp>(2) * integral_half)
}

/// Resultant as the determinant of the Sylvester matrix, by Bareiss
/// fraction-free elimination.
pub fn sylvester_resultant(p: &IntPoly, q: &IntPoly) -> BigInt {
    let (m, n) = (p.deg(), q.deg());
    let size = m + n;
    if size == 0 {
        return BigInt::one();
    }
    let mut a = vec![vec![BigInt::zero(); size]; size];
    for r in 0..n {
        for (k, cf) in p.coeffs().iter().rev().enumerate() {
            a[r][r + k] = cf.clone();
        }
    }
    for r in 0..m {
        for (k, cf) in q.coeffs().iter().rev().enumerate() {
            a[n + r][r + k] = cf.clone();
        }
    }
    bareiss_det(a)
}

pub fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

/// Number of cyclic subgroups of order `m` in `(ℤ/m)²`: elements of order
/// exactly `m` divided by `φ(m)`.
pub fn cyclic_subgroup_count(m: i64) -> u64 {
    let mut order_m = 0u64;
    for x in 0..m {
        for y in 0..m {
            if x.gcd(&y).gcd(&m) == 1 {
                order_m += 1;
            }
        }
    }
    let phi = (1..=m).filter(|k| k.gcd(&m) == 1).count() as u64;
    order_m / phi
}

/// `Σ c_ik·f^i·g^k` for polynomial maps, by direct expansion.
pub fn expand_phi(coeffs: &[Vec<BigInt>], f: &IntPoly, g: &IntPoly) -> IntPoly {
    let mut acc = IntPoly::zero();
    for (i, row) in coeffs.iter().enumerate() {
        for (k, cf) in row.iter().enumerate() {
            if !cf.is_zero() {
                acc = acc.add(&f.pow(i as u32).mul(&g.pow(k as u32)).scale(cf));
            }
        }
    }
    acc
}
