use std::fs;

use num_bigint::BigInt;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use zp_core::artifacts::{c_out, check_relation, m_out, report_for_witness, CNum, CMatrix, InstanceDto, RelationReport};
use zp_core::complex::{two_pi_i, ComplexExt};
use zp_core::isogeny::{cyclic_sublattices, isogeny_witness_with, CyclicSublattice, IsogenyCheck};
use zp_core::kernel::j_invariant;
use zp_core::modular::{numeric_scale, phi_eval_numeric, phi_recover_exact, MAX_EXACT_LEVEL};
use zp_core::periods::{decompose_cm, detect_cm, full_period_matrix, reduce_tau, weierstrass_invariants, Lattice};
use zp_core::relations::{
    cm_pair_instance, find_isogenous_sublattice, first_way_on_link, second_way, synthetic_first_way, synthetic_n4,
    synthetic_second_way, RelationInstance, SyntheticOptions,
};
use zp_core::scanner::{csv_rows, unlikely_points, CurveModel, RoleFilter, ScanOptions, ScanReport, CSV_HEADER, CM_FORM_BOUND};
use zp_core::{Mp, PrecisionContext, Real};

use crate::args::{parse_complex, parse_levels, parse_pairs};
use crate::{context, Cli, Command, Failure, IsogenyCmd, Outcome, PhiCmd, RelationsCmd, SyntheticArgs};

fn outcome(command: &str, passed: bool, result: impl Serialize) -> Result<Outcome, Failure> {
    Ok(Outcome { command: command.into(), passed, result: serde_json::to_value(result)?, table: None, bits: None })
}

fn lattice_arg(s: &str, ctx: &PrecisionContext) -> Result<Lattice<Mp>, Failure> {
    let parts: Vec<&str> = s.split(',').collect();
    let [a, b, c, d] = parts.as_slice() else {
        return Err(Failure::Usage(format!("expected `w1re,w1im,w2re,w2im`, got `{s}`")));
    };
    let w1 = parse_complex(&format!("{a},{b}"), ctx).map_err(Failure::Usage)?;
    let w2 = parse_complex(&format!("{c},{d}"), ctx).map_err(Failure::Usage)?;
    Lattice::new(w1, w2).map_err(|e| Failure::Usage(e.to_string()))
}

fn tau_arg(s: &str, ctx: &PrecisionContext) -> Result<Complex<Mp>, Failure> {
    let tau = parse_complex(s, ctx).map_err(Failure::Usage)?;
    if tau.im.to_f64() <= 0.0 {
        return Err(Failure::Usage(format!("τ must lie in the upper half-plane, got `{s}`")));
    }
    Ok(tau)
}

pub fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Periods { tau, lattice } => {
            let ctx = context(cli, None)?;
            let lat = match (tau, lattice) {
                (Some(t), _) => Lattice::from_tau(tau_arg(t, &ctx)?, &ctx)?,
                (None, Some(l)) => lattice_arg(l, &ctx)?,
                (None, None) => return Err(Failure::Usage("pass --tau or --lattice".into())),
            };
            periods(&lat, &ctx)
        }
        Command::Isogeny(IsogenyCmd::Verify { tau, degree, all_sublattices }) => {
            let ctx = context(cli, None)?;
            isogeny_verify(&tau_arg(tau, &ctx)?, *degree, *all_sublattices, &ctx)
        }
        Command::Phi(PhiCmd::Exact { level }) => phi_exact(*level, &context(cli, None)?),
        Command::Phi(PhiCmd::Eval { level, x, y, tau }) => {
            let ctx = context(cli, None)?;
            let x = parse_complex(x, &ctx).map_err(Failure::Usage)?;
            let (y, tau) = match (y, tau) {
                (Some(y), _) => {
                    let y = parse_complex(y, &ctx).map_err(Failure::Usage)?;
                    let tau = zp_core::kernel::j_inverse(&y, &ctx)?;
                    (y, tau)
                }
                (None, Some(t)) => {
                    let tau = tau_arg(t, &ctx)?;
                    (j_invariant(&tau, &ctx)?, tau)
                }
                (None, None) => return Err(Failure::Usage("pass --y or --tau".into())),
            };
            phi_eval(*level, &x, &y, &tau, &ctx)
        }
        Command::Relations(r) => relations(cli, r),
        Command::CheckRelation { instance, poly } => {
            let dto: InstanceDto = serde_json::from_str(&fs::read_to_string(instance)?)?;
            let ctx = context(cli, Some(dto.precision_bits))?;
            let inst = dto.to_instance::<Mp>(&ctx)?;
            let report = check_relation(&inst, poly.attempts, cli.seed, &ctx)?;
            let mut o = outcome("check-relation", report.passes(), &report)?;
            o.bits = Some(ctx.bits);
            Ok(o)
        }
        Command::Scan { curve, levels, pairs, not_all_singular } => {
            let ctx = context(cli, None)?;
            let model = CurveModel::parse(&fs::read_to_string(curve)?)?;
            let levels = parse_levels(levels).map_err(Failure::Usage)?;
            let pairs = parse_pairs(pairs).map_err(Failure::Usage)?.unwrap_or_else(|| model.all_pairs());
            let role_filter = if *not_all_singular { RoleFilter::NotAllSingular } else { RoleFilter::Any };
            let mut report = unlikely_points(&model, &ScanOptions { levels, pairs, role_filter }, &ctx)?;
            report.seed = cli.seed;
            scan_outcome("scan", report, &ctx)
        }
        Command::Report { input } => {
            let v: Value = serde_json::from_str(&fs::read_to_string(input)?)?;
            let inner = v.get("result").cloned().unwrap_or(v);
            let report: ScanReport = serde_json::from_value(inner)?;
            let ctx = context(cli, Some(report.precision_bits))?;
            scan_outcome("report", report, &ctx)
        }
        Command::Selftest => selftest(&context(cli, None)?),
    }
}

fn scan_passes(r: &ScanReport, ctx: &PrecisionContext) -> bool {
    let bound = ctx.sqrt_tol();
    r.strata.iter().all(|s| s.max_phi_residual < bound) && r.points.iter().all(|p| p.phi_residual < bound)
}

fn scan_outcome(command: &str, report: ScanReport, ctx: &PrecisionContext) -> Result<Outcome, Failure> {
    let header = CSV_HEADER.iter().map(|s| s.to_string()).collect();
    let rows = csv_rows(&report).into_iter().map(|r| r.to_vec()).collect();
    let mut o = outcome(command, scan_passes(&report, ctx), &report)?;
    o.table = Some((header, rows));
    o.bits = Some(report.precision_bits);
    Ok(o)
}

#[derive(Serialize)]
struct PeriodsOut {
    /// `[ω₁, ω₂]`.
    lattice: [CNum; 2],
    tau: CNum,
    tau_reduced: CNum,
    reduction: [[i64; 2]; 2],
    omega: [CNum; 2],
    eta: [CNum; 2],
    /// `[[ω₁, ω₂], [η₁, η₂]]`.
    period_matrix: CMatrix,
    det: CNum,
    legendre_residual: f64,
    legendre_threshold: f64,
    j: CNum,
    g2: CNum,
    g3: CNum,
    cm: Option<zp_core::periods::CmCertificate>,
    /// `P/(2πi) = h·diag(ϖ/2πi, 1/ϖ)`.
    value_matrix: CMatrix,
    varpi: CNum,
}

fn periods(lat: &Lattice<Mp>, ctx: &PrecisionContext) -> Result<Outcome, Failure> {
    let bits = ctx.bits;
    let tau = &lat.tau();
    let pm = full_period_matrix(lat, ctx)?;
    let (red, g) = reduce_tau(tau, ctx)?;
    let (g2, g3) = weierstrass_invariants(lat, ctx)?;
    let sp = decompose_cm(&pm, ctx)?;
    let threshold = ctx.tol * two_pi_i::<Mp>(ctx).abs().to_f64();
    let out = PeriodsOut {
        lattice: [c_out(&lat.omega1, bits), c_out(&lat.omega2, bits)],
        tau: c_out(tau, bits),
        tau_reduced: c_out(&red, bits),
        omega: pm.omega().map(|z| c_out(&z, bits)),
        eta: pm.eta().map(|z| c_out(&z, bits)),
        reduction: g,
        period_matrix: m_out(&pm.p, bits),
        det: c_out(&pm.p.det(), bits),
        legendre_residual: pm.legendre_residual,
        legendre_threshold: threshold,
        j: c_out(&j_invariant(tau, ctx)?, bits),
        g2: c_out(&g2, bits),
        g3: c_out(&g3, bits),
        cm: detect_cm(tau, CM_FORM_BOUND, ctx),
        value_matrix: m_out(&sp.h, bits),
        varpi: c_out(sp.varpi().expect("decomposition carries ϖ"), bits),
    };
    outcome("periods", pm.legendre_residual < threshold, out)
}

#[derive(Serialize)]
struct WitnessOut {
    sublattice: CyclicSublattice,
    target_tau: CNum,
    de_rham: [CNum; 3],
    homology: [[i64; 2]; 2],
    check: IsogenyCheck,
    passed: bool,
}

fn isogeny_verify(tau: &Complex<Mp>, degree: i64, all: bool, ctx: &PrecisionContext) -> Result<Outcome, Failure> {
    if degree < 1 {
        return Err(Failure::Usage(format!("degree must be positive, got {degree}")));
    }
    let lat = Lattice::from_tau(tau.clone(), ctx)?;
    let p1 = full_period_matrix(&lat, ctx)?;
    let mut subs = cyclic_sublattices(degree);
    if !all {
        subs.truncate(1);
    }
    let bits = ctx.bits;
    let witnesses = subs
        .par_iter()
        .map(|sub| {
            let run = isogeny_witness_with(&lat, &p1, sub, ctx)?;
            Ok(WitnessOut {
                sublattice: *sub,
                target_tau: c_out(&run.target.tau(), bits),
                de_rham: [
                    c_out(&run.witness.de_rham[0], bits),
                    c_out(&run.witness.de_rham[1], bits),
                    c_out(&run.witness.de_rham[2], bits),
                ],
                homology: run.witness.homology.m,
                passed: run.check.passes(degree, ctx.tol),
                check: run.check,
            })
        })
        .collect::<zp_core::Result<Vec<_>>>()?;
    let passed = witnesses.iter().all(|w| w.passed);
    outcome("isogeny verify", passed, json!({ "tau": c_out(tau, bits), "degree": degree, "witnesses": witnesses }))
}

fn phi_exact(level: u32, ctx: &PrecisionContext) -> Result<Outcome, Failure> {
    if level == 0 || level > MAX_EXACT_LEVEL {
        return Err(Failure::Usage(format!("exact recovery supports levels 1..={MAX_EXACT_LEVEL}")));
    }
    let phi = phi_recover_exact(level, ctx)?;
    let again = phi_recover_exact(level, &ctx.doubled())?;
    let stable = again.coeffs == phi.coeffs;
    let symmetric = phi.is_symmetric();
    let coeffs: Vec<Vec<String>> = phi.coeffs.iter().map(|row| row.iter().map(BigInt::to_string).collect()).collect();
    outcome(
        "phi exact",
        stable && symmetric,
        json!({
            "level": level,
            "degree": phi.degree(),
            "symmetric": symmetric,
            "stable_under_doubling": stable,
            "coefficients": coeffs,
        }),
    )
}

fn phi_eval(level: u32, x: &Complex<Mp>, y: &Complex<Mp>, tau: &Complex<Mp>, ctx: &PrecisionContext) -> Result<Outcome, Failure> {
    if level == 0 {
        return Err(Failure::Usage("level must be positive".into()));
    }
    let numeric = phi_eval_numeric(level, x, tau, ctx)?;
    let scale = numeric_scale(level, x, tau, ctx)?;
    let mut out = json!({
        "level": level,
        "x": c_out(x, ctx.bits),
        "y": c_out(y, ctx.bits),
        "numeric": c_out(&numeric, ctx.bits),
        "numeric_scale": scale,
    });
    let mut passed = true;
    if level <= MAX_EXACT_LEVEL {
        let phi = phi_recover_exact(level, ctx)?;
        let exact = phi.eval_complex(x, y, ctx);
        let s = scale.max(phi.eval_scale(x.abs().to_f64(), y.abs().to_f64())).max(1.0);
        let agreement = (exact.clone() - numeric).abs().to_f64() / s;
        passed = agreement < ctx.tol;
        out["exact"] = json!(c_out(&exact, ctx.bits));
        out["agreement"] = json!(agreement);
    }
    outcome("phi eval", passed, out)
}

#[derive(Serialize)]
struct PairOut {
    sing: usize,
    cm: usize,
    rs: [i64; 2],
    /// `|H₁H₂ − rs/2πi|`.
    residual: f64,
    entry_residuals: Vec<f64>,
    dichotomy_holds: bool,
}

fn synthetic(
    cli: &Cli,
    a: &SyntheticArgs,
    name: &str,
    build: fn(u64, SyntheticOptions, &PrecisionContext) -> zp_core::Result<RelationInstance<Mp>>,
) -> Result<Outcome, Failure> {
    let ctx = context(cli, None)?;
    let opts = SyntheticOptions { random_gauge: a.random_gauge, allow_degenerate: !a.no_degenerate };
    let inst = build(cli.seed, opts, &ctx)?;
    if let Some(p) = &a.emit_instance {
        let dto = InstanceDto::from_instance(&inst, ctx.bits)?;
        fs::write(p, serde_json::to_string_pretty(&dto)? + "\n")?;
    }
    let report = check_relation(&inst, a.poly.attempts, cli.seed, &ctx)?;
    let mut pairs = Vec::new();
    for link in &inst.links {
        if let Ok(w) = first_way_on_link(&inst, link, &ctx) {
            if let zp_core::relations::Construction::FirstWay(d) = &w.construction {
                pairs.push(PairOut {
                    sing: d.sing,
                    cm: d.cm,
                    rs: [d.r, d.s],
                    residual: w.residual,
                    entry_residuals: w.entry_residuals.clone(),
                    dichotomy_holds: w.dichotomy_holds(ctx.tol),
                });
            }
        }
    }
    let passed = report.passes() && pairs.iter().all(|p| p.dichotomy_holds);
    outcome(&format!("relations {name}"), passed, json!({ "relation": report, "first_way_pairs": pairs }))
}

#[derive(Serialize)]
struct CmPairOut {
    sublattice: CyclicSublattice,
    source_cm: Option<zp_core::periods::CmCertificate>,
    target_cm: Option<zp_core::periods::CmCertificate>,
    isogeny_check: IsogenyCheck,
    relation: RelationReport,
}

fn relations(cli: &Cli, r: &RelationsCmd) -> Result<Outcome, Failure> {
    match r {
        RelationsCmd::SecondWay { tau2, tau3, degree, poly } => {
            let ctx = context(cli, None)?;
            if *degree < 1 {
                return Err(Failure::Usage(format!("degree must be positive, got {degree}")));
            }
            let t2 = tau_arg(tau2, &ctx)?;
            let subs = match tau3 {
                Some(t3) => vec![find_isogenous_sublattice(&t2, &tau_arg(t3, &ctx)?, *degree, &ctx)?],
                None => cyclic_sublattices(*degree),
            };
            let lat = Lattice::from_tau(t2.clone(), &ctx)?;
            let rows = subs
                .par_iter()
                .map(|sub| {
                    let (inst, run) = cm_pair_instance(&lat, sub, &ctx)?;
                    let w = second_way(inst.coord(2)?, inst.coord(3)?, &run.witness, &ctx)?;
                    Ok(CmPairOut {
                        sublattice: *sub,
                        source_cm: detect_cm(&t2, CM_FORM_BOUND, &ctx),
                        target_cm: detect_cm(&run.target.tau(), CM_FORM_BOUND, &ctx),
                        isogeny_check: run.check,
                        relation: report_for_witness(None, &w, &inst, poly.attempts, cli.seed, &ctx)?,
                    })
                })
                .collect::<zp_core::Result<Vec<_>>>()?;
            let passed = rows.iter().all(|r| r.relation.passes() && r.isogeny_check.passes(*degree, ctx.tol));
            outcome("relations second-way", passed, json!({ "degree": degree, "pairs": rows }))
        }
        RelationsCmd::FirstWay(a) => synthetic(cli, a, "first-way", synthetic_first_way::<Mp>),
        RelationsCmd::N4(a) => synthetic(cli, a, "n4", synthetic_n4::<Mp>),
        RelationsCmd::SecondWaySynthetic(a) => synthetic(cli, a, "second-way-synthetic", synthetic_second_way::<Mp>),
    }
}

#[derive(Serialize, Deserialize)]
struct SelfCheck {
    name: String,
    passed: bool,
    detail: String,
}

fn check(name: &str, f: impl FnOnce() -> zp_core::Result<(bool, String)>) -> SelfCheck {
    match f() {
        Ok((passed, detail)) => SelfCheck { name: name.into(), passed, detail },
        Err(e) => SelfCheck { name: name.into(), passed: false, detail: format!("error: {e}") },
    }
}

fn random_tau(rng: &mut ChaCha8Rng, ctx: &PrecisionContext) -> Complex<Mp> {
    Complex::new(ctx.lift(rng.gen_range(-0.5..0.5)), ctx.lift(rng.gen_range(0.6..2.0)))
}

fn selftest(ctx: &PrecisionContext) -> Result<Outcome, Failure> {
    let mut checks = Vec::new();
    checks.push(check("legendre relation on 10 lattices", || {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let thr = ctx.tol * two_pi_i::<Mp>(ctx).abs().to_f64();
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let pm = full_period_matrix(&Lattice::from_tau(random_tau(&mut rng, ctx), ctx)?, ctx)?;
            worst = worst.max(pm.legendre_residual);
        }
        Ok((worst < thr, format!("max residual {worst:.3e}, threshold {thr:.3e}")))
    }));
    checks.push(check("isogeny identity for M = 2, 3, 5 at τ = i", || {
        let tau = Complex::<Mp>::new(ctx.lift(0.0), ctx.lift(1.0));
        let lat = Lattice::from_tau(tau, ctx)?;
        let p1 = full_period_matrix(&lat, ctx)?;
        let mut n = 0;
        for m in [2, 3, 5] {
            for sub in cyclic_sublattices(m) {
                let run = isogeny_witness_with(&lat, &p1, &sub, ctx)?;
                if !run.check.passes(m, ctx.tol) {
                    return Ok((false, format!("sublattice {sub:?} residual {:.3e}", run.check.residual)));
                }
                n += 1;
            }
        }
        Ok((n == 3 + 4 + 6, format!("{n} witnesses")))
    }));
    checks.push(check("Φ₂ exact: symmetric, Φ₂(1728, 287496) = 0", || {
        let phi = phi_recover_exact(2, ctx)?;
        let v = phi.eval_exact(&BigInt::from(1728).into(), &BigInt::from(287496).into());
        Ok((phi.is_symmetric() && v == BigInt::from(0).into(), format!("Φ₂(1728, 287496) = {v}")))
    }));
    checks.push(check("Φ₃ exact agrees with the sublattice product", || {
        let phi = phi_recover_exact(3, ctx)?;
        let x = Complex::<Mp>::new(ctx.lift(0.3), ctx.lift(-1.7));
        let tau = Complex::<Mp>::new(ctx.lift(0.1234), ctx.lift(1.0789));
        let y = j_invariant(&tau, ctx)?;
        let e = phi.eval_complex(&x, &y, ctx);
        let n = phi_eval_numeric(3, &x, &tau, ctx)?;
        let s = phi.eval_scale(x.abs().to_f64(), y.abs().to_f64());
        let d = (e - n).abs().to_f64() / s;
        Ok((d < ctx.tol, format!("relative difference {d:.3e}")))
    }));
    checks.push(check("synthetic first-way, n = 4 and second-way instances", || {
        let opts = SyntheticOptions::default();
        let mut n = 0;
        for seed in 0..5 {
            for inst in [
                synthetic_first_way::<Mp>(seed, opts, ctx)?,
                synthetic_n4::<Mp>(seed, opts, ctx)?,
                synthetic_second_way::<Mp>(seed, opts, ctx)?,
            ] {
                let r = check_relation(&inst, 5, seed, ctx)?;
                if !r.passes() {
                    return Ok((false, format!("seed {seed}: {:?} residual {:.3e}", r.way, r.residual)));
                }
                n += 1;
            }
        }
        Ok((true, format!("{n} instances")))
    }));
    checks.push(check("second way on the 2-isogenies of τ = i", || {
        let lat = Lattice::from_tau(Complex::<Mp>::new(ctx.lift(0.0), ctx.lift(1.0)), ctx)?;
        let mut worst: f64 = 0.0;
        for sub in cyclic_sublattices(2) {
            let (inst, run) = cm_pair_instance(&lat, &sub, ctx)?;
            let w = second_way(inst.coord(2)?, inst.coord(3)?, &run.witness, ctx)?;
            worst = worst.max(w.residual).max(w.entry_residuals.iter().cloned().fold(0.0, f64::max));
        }
        Ok((worst < ctx.tol, format!("max residual {worst:.3e}")))
    }));
    checks.push(check("scanner finds the engineered double point", || {
        let curve = CurveModel::parse("n = 3\nj1 = -7, 7\nj2 = 53998, -1, 3\nj3 = -12288011, 11\n")?;
        let r = unlikely_points(&curve, &ScanOptions::all(&curve, [2, 3]), ctx)?;
        let doubles: Vec<_> = r.points.iter().filter(|p| p.is_double()).collect();
        let ok = doubles.len() == 1 && doubles[0].degree_bound == 1 && doubles[0].height_t == 0.0;
        Ok((ok && scan_passes(&r, ctx), format!("{}", r.summary)))
    }));
    checks.push(check("random gauge leaves every verdict unchanged", || {
        for seed in 0..4 {
            let plain = SyntheticOptions::default();
            let gauged = SyntheticOptions { random_gauge: true, ..plain };
            let a = check_relation(&synthetic_n4::<Mp>(seed, plain, ctx)?, 5, seed, ctx)?;
            let b = check_relation(&synthetic_n4::<Mp>(seed, gauged, ctx)?, 5, seed, ctx)?;
            if a.passes() != b.passes() || a.holds != b.holds {
                return Ok((false, format!("seed {seed} changed verdict")));
            }
        }
        Ok((true, "4 seeds".into()))
    }));
    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        eprintln!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    outcome("selftest", passed, json!({ "checks": checks }))
}
