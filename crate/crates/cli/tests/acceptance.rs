//! Acceptance gate: one pass/fail line per criterion, nonzero exit if any
//! criterion fails or exceeds its time budget.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::*;
use num_bigint::BigInt;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;
use zp_core::artifacts::{check_relation, RelationReport};
use zp_core::complex::{two_pi_i, ComplexExt};
use zp_core::exactpoly::IntPoly;
use zp_core::isogeny::{cyclic_sublattices, isogeny_witness_with, psi};
use zp_core::kernel::j_invariant;
use zp_core::modular::{phi_eval_numeric, phi_recover_exact, RationalMap};
use zp_core::periods::{full_period_matrix, Lattice};
use zp_core::polyrel::{not_in_i0, relation_polynomial, IdealI0, NonMembership};
use zp_core::relations::{
    cm_pair_instance, dispatch_case, first_way_on_link, second_way, synthetic_first_way, synthetic_n4,
    synthetic_second_way, RelationInstance, RelationWitness, SyntheticOptions,
};
use zp_core::scanner::{unlikely_points, CurveModel, ScanOptions};
use zp_core::{Mp, PrecisionContext, Real};

const BITS: u32 = 256;
const ENGINEERED: &str = "n = 3\nj1 = -7, 7\nj2 = 53998, -1, 3\nj3 = -12288011, 11\n";

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random_lattice(rng: &mut ChaCha8Rng, ctx: &PrecisionContext) -> Lattice<Mp> {
    let w1 = c(ctx, rng.gen_range(0.3..3.0), rng.gen_range(-2.0..2.0));
    let tau = c(ctx, rng.gen_range(-2.0..2.0), rng.gen_range(0.3..3.0));
    Lattice::new(w1.clone(), w1 * tau).expect("Im τ > 0")
}

fn legendre(ctx: &PrecisionContext) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let lats: Vec<_> = (0..100).map(|_| random_lattice(&mut rng, ctx)).collect();
    let tpi = two_pi_i::<Mp>(ctx);
    let thr = 2f64.powi(-128) * tpi.abs().to_f64();
    let worst = lats
        .par_iter()
        .map(|l| full_period_matrix(l, ctx).map(|pm| (pm.p.det() - tpi.clone()).abs().to_f64()))
        .collect::<zp_core::Result<Vec<_>>>()
        .map_err(err)?
        .into_iter()
        .fold(0.0, f64::max);
    ensure(worst < thr, || format!("det defect {worst:e} ≥ {thr:e}"))?;

    // quadrature oracle; the quasi-period row is −∮ x dx/y
    let qthr = 2f64.powi(-60);
    let mut qworst: f64 = 0.0;
    for l in &lats[..3] {
        let pm = full_period_matrix(l, ctx).map_err(err)?;
        let (g2, g3) = zp_core::periods::weierstrass_invariants(l, ctx).map_err(err)?;
        let ([w1, w2], [n1, n2]) = (pm.omega(), pm.eta());
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let (om, ex) = period_by_quadrature(&g2, &g3, i, j, 70, ctx);
            let (m, n) = lattice_coords(&om, &w1, &w2).ok_or("cycle integral is not a lattice vector")?;
            let (mr, nr) = (ctx.int::<Mp>(m), ctx.int::<Mp>(n));
            let om_l = w1.scale_by(&mr) + w2.scale_by(&nr);
            let eta_l = n1.scale_by(&mr) + n2.scale_by(&nr);
            qworst = qworst
                .max((om - om_l.clone()).abs().to_f64() / (1.0 + om_l.abs().to_f64()))
                .max((ex + eta_l.clone()).abs().to_f64() / (1.0 + eta_l.abs().to_f64()));
        }
    }
    ensure(qworst < qthr, || format!("quadrature disagreement {qworst:e}"))?;
    Ok(format!("100 lattices, worst det defect {worst:.2e}; quadrature agreement {qworst:.2e}"))
}

fn isogeny_suite(ctx: &PrecisionContext) -> Check {
    let thr = 2f64.powi(-120);
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let lats: Vec<_> = (0..5).map(|_| random_lattice(&mut rng, ctx)).collect();
    let p1s: Vec<_> = lats.iter().map(|l| full_period_matrix(l, ctx)).collect::<zp_core::Result<_>>().map_err(err)?;
    let jobs: Vec<(usize, i64)> = (0..5).flat_map(|k| (1..=30).map(move |m| (k, m))).collect();
    let counts = jobs
        .par_iter()
        .map(|&(k, m)| {
            let subs = cyclic_sublattices(m);
            ensure(subs.len() as u64 == psi(m as u64), || format!("ψ({m}) mismatch"))?;
            let mut worst = (0.0f64, 0.0f64);
            for sub in &subs {
                let run = isogeny_witness_with(&lats[k], &p1s[k], sub, ctx).map_err(err)?;
                let ch = &run.check;
                ensure(ch.homology_det == m, || format!("p·s − q·r = {} for M = {m}", ch.homology_det))?;
                ensure(ch.residual < thr * ch.p2_norm, || format!("residual {:e} at M = {m}", ch.residual))?;
                ensure(ch.de_rham_det_defect < thr, || format!("|ac − M| = {:e} at M = {m}", ch.de_rham_det_defect))?;
                worst = (worst.0.max(ch.residual / ch.p2_norm), worst.1.max(ch.de_rham_det_defect));
            }
            Ok((subs.len(), worst))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let total: usize = counts.iter().map(|c| c.0).sum();
    let rel = counts.iter().map(|c| c.1 .0).fold(0.0, f64::max);
    let det = counts.iter().map(|c| c.1 .1).fold(0.0, f64::max);
    Ok(format!("{total} witnesses, worst relative residual {rel:.2e}, worst |ac − M| {det:.2e}"))
}

/// Second-way witnesses for every 2-sublattice of the two CM lattices, with
/// their instances.
fn genuine_cm(ctx: &PrecisionContext) -> zp_core::Result<Vec<(RelationInstance<Mp>, RelationWitness<Mp>)>> {
    let s7 = ctx.lift::<Mp>(7.0).sqrt() / ctx.int::<Mp>(2);
    let taus = [c(ctx, 0.0, 1.0), Complex::new(ctx.lift::<Mp>(0.5), s7)];
    let mut out = Vec::new();
    for tau in taus {
        let lat = Lattice::from_tau(tau, ctx)?;
        for sub in cyclic_sublattices(2) {
            let (inst, run) = cm_pair_instance(&lat, &sub, ctx)?;
            let w = second_way(inst.coord(2)?, inst.coord(3)?, &run.witness, ctx)?;
            out.push((inst, w));
        }
    }
    Ok(out)
}

fn second_way_cm(ctx: &PrecisionContext) -> Check {
    let thr = 2f64.powi(-100);
    let ws = genuine_cm(ctx).map_err(err)?;
    let mut worst: f64 = 0.0;
    for (_, w) in &ws {
        let e = w.entry_residuals.iter().cloned().fold(w.residual, f64::max);
        ensure(e < thr, || format!("residual {e:e} with p, q, r, s = {:?}", w.rhs_integers))?;
        worst = worst.max(e);
    }
    Ok(format!("{} sublattice pairs, worst residual {worst:.2e}", ws.len()))
}

fn kinds() -> [(&'static str, fn(u64, SyntheticOptions, &PrecisionContext) -> zp_core::Result<RelationInstance<Mp>>); 3] {
    [("first-way", synthetic_first_way::<Mp>), ("second-way", synthetic_second_way::<Mp>), ("n4", synthetic_n4::<Mp>)]
}

fn synthetic_suites(ctx: &PrecisionContext) -> Check {
    let opts = SyntheticOptions::default();
    let mut dichotomy = (0, 0);
    let mut worst = [0.0f64; 3];
    for (k, (name, make)) in kinds().into_iter().enumerate() {
        for seed in 0..50u64 {
            let inst = make(seed, opts, ctx).map_err(err)?;
            let res = match k {
                0 => inst
                    .links
                    .iter()
                    .map(|l| first_way_on_link(&inst, l, ctx).map(|w| w.residual))
                    .collect::<zp_core::Result<Vec<_>>>()
                    .map_err(err)?
                    .into_iter()
                    .fold(0.0, f64::max),
                1 => dispatch_case(&inst, ctx).map_err(err)?.1.residual,
                _ => {
                    let p1 = first_way_on_link(&inst, &inst.links[0], ctx).map_err(err)?;
                    let p2 = first_way_on_link(&inst, &inst.links[1], ctx).map_err(err)?;
                    let (r1s1, r2s2) = (p1.rhs_integers[0] * p1.rhs_integers[1], p2.rhs_integers[0] * p2.rhs_integers[1]);
                    let lhs = p1.h[0].clone() * p1.h[1].clone() * c(ctx, r2s2 as f64, 0.0);
                    let rhs = p2.h[0].clone() * p2.h[1].clone() * c(ctx, r1s1 as f64, 0.0);
                    (lhs - rhs).abs().to_f64()
                }
            };
            ensure(res < ctx.tol, || format!("{name} seed {seed}: residual {res:e}"))?;
            worst[k] = worst[k].max(res);
            let (_, w) = dispatch_case(&inst, ctx).map_err(err)?;
            dichotomy.1 += 1;
            if w.dichotomy_holds(ctx.tol) {
                dichotomy.0 += 1;
            }
        }
    }
    ensure(dichotomy.0 == dichotomy.1, || format!("dichotomy holds on {}/{}", dichotomy.0, dichotomy.1))?;
    Ok(format!(
        "150 instances, worst residuals {:.2e} / {:.2e} / {:.2e}; dichotomy {}/{}",
        worst[0], worst[1], worst[2], dichotomy.0, dichotomy.1
    ))
}

fn certificates(ctx: &PrecisionContext) -> Check {
    let mut cases: Vec<(String, RelationInstance<Mp>, RelationWitness<Mp>)> = genuine_cm(ctx)
        .map_err(err)?
        .into_iter()
        .enumerate()
        .map(|(i, (inst, w))| (format!("genuine CM #{i}"), inst, w))
        .collect();
    for (name, make) in kinds() {
        for seed in 0..50u64 {
            let inst = make(seed, SyntheticOptions::default(), ctx).map_err(err)?;
            let (_, w) = dispatch_case(&inst, ctx).map_err(err)?;
            cases.push((format!("{name} seed {seed}"), inst, w));
        }
    }
    let (mut built, mut certified) = (0usize, 0usize);
    let mut degrees = std::collections::BTreeMap::new();
    for (seed, (name, inst, w)) in cases.iter().enumerate() {
        let r = relation_polynomial(w, &inst.gauge, ctx).map_err(|e| format!("{name}: {e}"))?;
        let deg = r.homogeneous_degree().ok_or_else(|| format!("{name}: not homogeneous"))?;
        let allowed = match w.way {
            zp_core::relations::Way::SecondWay => deg == 8,
            _ => deg == 2 || deg == 4,
        };
        ensure(allowed, || format!("{name}: degree {deg} for {:?}", w.way))?;
        *degrees.entry(deg).or_insert(0) += 1;
        let values = inst.values(ctx).map_err(err)?;
        let v = r.evaluate(&values).map_err(err)?.abs().to_f64() / r.eval_scale(&values).map_err(err)?.max(1.0);
        ensure(v < ctx.tol, || format!("{name}: R does not vanish ({v:e})"))?;
        let nm = not_in_i0(&r, &IdealI0::new(inst.cm_coords()), 5, seed as u64, ctx).map_err(err)?;
        built += 1;
        match nm {
            NonMembership::Certificate { .. } => certified += 1,
            NonMembership::Inconclusive { .. } => {}
        }
    }
    ensure(certified * 100 >= built * 95, || format!("certificates for {certified}/{built}"))?;
    Ok(format!("{built} relations, degrees {degrees:?}, certificates {certified}/{built}"))
}

fn modular_suite(ctx: &PrecisionContext) -> Check {
    for n in [2u32, 3] {
        let phi = phi_recover_exact(n, ctx).map_err(err)?;
        let again = phi_recover_exact(n, &ctx.doubled()).map_err(err)?;
        ensure(phi.coeffs == again.coeffs, || format!("Φ_{n} changes under precision doubling"))?;
        ensure(phi.is_symmetric(), || format!("Φ_{n} is not symmetric"))?;
    }
    let phi2 = phi_recover_exact(2, ctx).map_err(err)?;
    let v = phi2.eval_exact(&BigInt::from(1728).into(), &BigInt::from(287496).into());
    ensure(v == BigInt::from(0).into(), || format!("Φ₂(1728, 287496) = {v}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let n = 2 + (k % 2) as u32;
        let phi = phi_recover_exact(n, ctx).map_err(err)?;
        let tau = c(ctx, rng.gen_range(-0.5..0.5), rng.gen_range(0.9..2.0));
        let x = c(ctx, rng.gen_range(-2000.0..2000.0), rng.gen_range(-2000.0..2000.0));
        let y = j_invariant(&tau, ctx).map_err(err)?;
        let exact = phi.eval_complex(&x, &y, ctx);
        let num = phi_eval_numeric(n, &x, &tau, ctx).map_err(err)?;
        let d = (exact - num).abs().to_f64() / phi.eval_scale(x.abs().to_f64(), y.abs().to_f64()).max(1.0);
        ensure(d < ctx.tol, || format!("Φ_{n} disagreement {d:e}"))?;
        worst = worst.max(d);
    }
    Ok(format!("Φ₂, Φ₃ stable and symmetric; Φ₂(1728, 287496) = 0; 20 points, worst {worst:.2e}"))
}

fn scanner_suite(ctx: &PrecisionContext) -> Check {
    let curve = CurveModel::new(
        vec![RationalMap::polynomial(IntPoly::from_i64(&[0, 1])), RationalMap::polynomial(IntPoly::from_i64(&[1, 1]))],
        None,
        false,
    )
    .map_err(err)?;
    let report = unlikely_points(&curve, &ScanOptions::all(&curve, vec![2]), ctx).map_err(err)?;
    let phi2 = phi_recover_exact(2, ctx).map_err(err)?;
    let expanded = expand_phi(&phi2.coeffs, &IntPoly::from_i64(&[0, 1]), &IntPoly::from_i64(&[1, 1]));
    let s = report.strata.first().ok_or("no stratum")?;
    ensure(s.degree == expanded.deg() && s.root_count == s.degree, || {
        format!("degree {} (expansion {}), {} roots", s.degree, expanded.deg(), s.root_count)
    })?;
    let st = ctx.sqrt_tol();
    ensure(s.max_phi_residual < st, || format!("Φ residual {:e} at a root", s.max_phi_residual))?;

    let eng = CurveModel::parse(ENGINEERED).map_err(err)?;
    let rep = unlikely_points(&eng, &ScanOptions::all(&eng, vec![2, 3]), ctx).map_err(err)?;
    let doubles: Vec<_> = rep.points.iter().filter(|p| p.is_double()).collect();
    ensure(doubles.len() == 1, || format!("{} double points", doubles.len()))?;
    let p = doubles[0];
    ensure(p.degree_bound == 1 && p.height_t == 0.0 && p.t_minpoly == "t - 1", || {
        format!("double point {} with degree bound {} and height {}", p.t_minpoly, p.degree_bound, p.height_t)
    })?;

    // the CLI report must match its schema
    let dir = std::env::temp_dir().join(format!("zp-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(err)?;
    let file = dir.join("engineered.curve");
    std::fs::write(&file, ENGINEERED).map_err(err)?;
    let out = Command::new(env!("CARGO_BIN_EXE_zp"))
        .args(["--precision", &ctx.bits.to_string(), "scan", "--levels", "2,3", "--curve"])
        .arg(&file)
        .output()
        .map_err(err)?;
    let _ = std::fs::remove_dir_all(&dir);
    ensure(out.status.success(), || format!("zp scan exited with {:?}", out.status.code()))?;
    let doc: Value = serde_json::from_slice(&out.stdout).map_err(err)?;
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/scan.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(schema_path).map_err(err)?).map_err(err)?;
    let compiled = jsonschema::JSONSchema::options()
        .with_draft(jsonschema::Draft::Draft202012)
        .compile(&schema)
        .map_err(|e| e.to_string())?;
    let msgs: Vec<String> = match compiled.validate(&doc) {
        Ok(()) => Vec::new(),
        Err(es) => es.map(|e| format!("{e} at {}", e.instance_path)).collect(),
    };
    ensure(msgs.is_empty(), || format!("schema violations: {msgs:?}"))?;
    Ok(format!(
        "(t, t+1) at M = 2: degree {} with {} sound roots; engineered curve: one double point at t = 1; schema ok",
        s.degree, s.root_count
    ))
}

fn verdicts(r: &RelationReport, tol: f64) -> Vec<bool> {
    let mut v = vec![r.holds, r.dichotomy_holds, r.residual < tol];
    v.extend(r.entry_residuals.iter().map(|&e| e < tol));
    v.extend(r.degenerate.iter().map(|f| f.h_abs < tol));
    if let Some(p) = &r.polynomial {
        v.push(p.vanishing_residual < tol);
        v.push(p.non_membership.is_certificate());
    }
    v
}

fn gauge_suite(ctx: &PrecisionContext) -> Check {
    let mut compared = 0;
    for seed in 0..20u64 {
        let (name, make) = kinds()[(seed % 3) as usize];
        let plain = make(seed, SyntheticOptions { random_gauge: false, allow_degenerate: true }, ctx).map_err(err)?;
        let gauged = make(seed, SyntheticOptions { random_gauge: true, allow_degenerate: true }, ctx).map_err(err)?;
        let a = check_relation(&plain, 5, seed, ctx).map_err(err)?;
        let b = check_relation(&gauged, 5, seed, ctx).map_err(err)?;
        let (va, vb) = (verdicts(&a, ctx.tol), verdicts(&b, ctx.tol));
        ensure(va == vb && a.case == b.case, || format!("{name} seed {seed}: verdicts {va:?} vs {vb:?}"))?;
        compared += va.len();
    }
    Ok(format!("20 instances, {compared} verdicts unchanged"))
}

fn main() -> ExitCode {
    let ctx = PrecisionContext::new(BITS);
    let criteria: [(&str, fn(&PrecisionContext) -> Check, u64); 8] = [
        ("Legendre relation", legendre, 30),
        ("isogeny identities", isogeny_suite, 120),
        ("second way on genuine CM pairs", second_way_cm, 10),
        ("synthetic relation suites", synthetic_suites, 60),
        ("relation polynomials and certificates", certificates, 60),
        ("modular polynomials", modular_suite, 120),
        ("scanner end to end", scanner_suite, 60),
        ("gauge covariance", gauge_suite, 20),
    ];
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let res = f(&ctx);
        let dt = start.elapsed();
        let res = match res {
            Ok(m) if dt > Duration::from_secs(budget) => Err(format!("{m}; took {dt:.1?}, budget {budget} s")),
            r => r,
        };
        match res {
            Ok(m) => println!("criterion {}: PASS {name} ({dt:.2?}): {m}", i + 1),
            Err(m) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({dt:.2?}): {m}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
