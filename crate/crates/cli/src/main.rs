//! `zp`: period, isogeny, modular-polynomial, relation and scan checks.
//!
//! Exit status: 0 when every check passes, 2 when a residual exceeds its
//! threshold, 1 on usage or input errors.

mod args;
mod commands;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use zp_core::context::{DEFAULT_BITS, PRECISION_ENV};
use zp_core::{Error, PrecisionContext};

#[derive(Parser, Debug)]
#[command(name = "zp", version, about = "Period matrices, isogeny identities and unlikely-intersection scans")]
pub struct Cli {
    /// Working precision in bits (at least 64).
    #[arg(long, global = true, env = PRECISION_ENV)]
    pub precision: Option<u32>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Override the default tolerance 2^(-bits/2).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Full period matrix, Legendre residual, j and CM detection for ℤ + ℤτ
    /// or for the lattice ℤω₁ + ℤω₂.
    Periods {
        /// τ as `re,im`; components accept decimals, `p/q` and `sqrt(n)/q`.
        #[arg(long, allow_hyphen_values = true, required_unless_present = "lattice", conflicts_with = "lattice")]
        tau: Option<String>,
        /// `w1re,w1im,w2re,w2im` with Im(ω₂/ω₁) > 0.
        #[arg(long, allow_hyphen_values = true)]
        lattice: Option<String>,
    },
    /// Isogeny identities between period matrices.
    #[command(subcommand)]
    Isogeny(IsogenyCmd),
    /// Modular polynomials.
    #[command(subcommand)]
    Phi(PhiCmd),
    /// H-vector relations.
    #[command(subcommand)]
    Relations(RelationsCmd),
    /// Check a relation instance stored as JSON.
    CheckRelation {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        poly: PolyArgs,
    },
    /// Scan a rational curve for points on one or two modular strata.
    Scan {
        /// Curve file (`n = …`, `j1 = …`, …).
        #[arg(long)]
        curve: PathBuf,
        /// Levels: `2..10`, `2,3,7`. Levels above 5 are confirmed numerically only.
        #[arg(long, default_value = "2..10")]
        levels: String,
        /// Coordinate pairs: `all` or `1-2,1-3`.
        #[arg(long, default_value = "all")]
        pairs: String,
        /// Skip pair-of-pairs whose coordinates are all marked singular.
        #[arg(long)]
        not_all_singular: bool,
    },
    /// Re-render a scan output.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Run the built-in invariant suite.
    Selftest,
}

#[derive(Subcommand, Debug)]
pub enum IsogenyCmd {
    /// Check `A·P₁ = P₂·B` for cyclic sublattices of ℤ + ℤτ.
    Verify {
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
        #[arg(long)]
        degree: i64,
        /// Every cyclic sublattice of the given index, not only the first.
        #[arg(long)]
        all_sublattices: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum PhiCmd {
    /// Recover `Φ_N` with exact integer coefficients (N ≤ 5).
    Exact {
        #[arg(long)]
        level: u32,
    },
    /// Evaluate `Φ_N(x, y)` through the sublattice product and, when
    /// available, the exact table.
    Eval {
        #[arg(long)]
        level: u32,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// Second argument as a value.
        #[arg(long, allow_hyphen_values = true, required_unless_present = "tau", conflicts_with = "tau")]
        y: Option<String>,
        /// Second argument as `j(τ)`.
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<String>,
    },
}

#[derive(Args, Debug, Clone, Copy)]
pub struct PolyArgs {
    /// Witness-point attempts for the non-membership search.
    #[arg(long, default_value_t = 5)]
    pub attempts: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SyntheticArgs {
    /// Build a seeded instance that satisfies the identities by construction.
    /// This is the only mode; the flag may be omitted.
    #[arg(long)]
    pub synthetic: bool,
    /// Apply a random SL₂ gauge to every coordinate.
    #[arg(long)]
    pub random_gauge: bool,
    /// Never force a homology entry to zero.
    #[arg(long)]
    pub no_degenerate: bool,
    /// Also write the instance as JSON (input format of `check-relation`).
    #[arg(long)]
    pub emit_instance: Option<PathBuf>,
    #[command(flatten)]
    pub poly: PolyArgs,
}

#[derive(Subcommand, Debug)]
pub enum RelationsCmd {
    /// Two CM coordinates linked by a cyclic isogeny of ℤ + ℤτ₂.
    SecondWay {
        #[arg(long, allow_hyphen_values = true)]
        tau2: String,
        /// Target τ; without it every cyclic sublattice of the degree is used.
        #[arg(long, allow_hyphen_values = true)]
        tau3: Option<String>,
        #[arg(long)]
        degree: i64,
        #[command(flatten)]
        poly: PolyArgs,
    },
    /// Two singular coordinates isogenous to one CM coordinate.
    FirstWay(SyntheticArgs),
    /// Four coordinates: two singular–CM isogenies.
    N4(SyntheticArgs),
    /// Two CM coordinates from a synthetic isogeny plus one singular coordinate.
    SecondWaySynthetic(SyntheticArgs),
}

/// Common header of every JSON document.
#[derive(Serialize)]
pub struct Envelope<T: Serialize> {
    pub command: String,
    pub version: &'static str,
    pub precision_bits: u32,
    pub seed: u64,
    pub tolerance: f64,
    pub passed: bool,
    pub result: T,
}

/// Result of a subcommand before rendering.
pub struct Outcome {
    pub command: String,
    pub passed: bool,
    pub result: serde_json::Value,
    /// Header and rows, for commands that support `--format csv`.
    pub table: Option<(Vec<String>, Vec<Vec<String>>)>,
    /// Precision actually used, when it differs from the requested one.
    pub bits: Option<u32>,
}

pub enum Failure {
    Usage(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::StructureViolation(_) => Failure::Verification(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(format!("invalid JSON: {e}"))
    }
}

pub fn context(cli: &Cli, bits: Option<u32>) -> Result<PrecisionContext, Failure> {
    let bits = cli.precision.or(bits).unwrap_or(DEFAULT_BITS);
    if bits < 64 {
        return Err(Failure::Usage(format!("precision must be at least 64 bits, got {bits}")));
    }
    let ctx = PrecisionContext::new(bits);
    Ok(match cli.tol {
        Some(t) if t > 0.0 => ctx.with_tol(t),
        Some(t) => return Err(Failure::Usage(format!("tolerance must be positive, got {t}"))),
        None => ctx,
    })
}

fn render(cli: &Cli, out: Outcome) -> Result<bool, Failure> {
    let ctx = context(cli, out.bits)?;
    let text = match cli.format {
        Format::Json => {
            let env = Envelope {
                command: out.command,
                version: env!("CARGO_PKG_VERSION"),
                precision_bits: ctx.bits,
                seed: cli.seed,
                tolerance: ctx.tol,
                passed: out.passed,
                result: out.result,
            };
            let mut s = serde_json::to_string_pretty(&env)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let (header, rows) = out
                .table
                .ok_or_else(|| Failure::Usage(format!("`{}` has no CSV output", out.command)))?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["precision_bits", "seed"].iter().map(|s| s.to_string()).chain(header))
                .map_err(|e| Failure::Usage(e.to_string()))?;
            for r in rows {
                w.write_record([ctx.bits.to_string(), cli.seed.to_string()].into_iter().chain(r))
                    .map_err(|e| Failure::Usage(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Failure::Usage(e.to_string()))?)
                .expect("csv output is UTF-8")
        }
    };
    match &cli.out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(out.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli).and_then(|o| render(&cli, o)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(2)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(2)
        }
    }
}
