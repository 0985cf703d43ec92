//! `trirec`: Gauss quadrature, orthogonal polynomial transforms, Bessel
//! zeros and sums, and scaling benchmarks from the command line.

mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use output::{Format, Table};
use trirec::bench::{run_bench, BenchOp};
use trirec::bessel::{bessel_synthesize, bessel_zeros, build_bessel_plan};
use trirec::orthopoly::{analyze, build_poly_plan, chebyshev, gauss_rule, jacobi_family, legendre, synthesize, JacobiFamily};
use trirec::Error;

#[derive(Parser)]
#[command(name = "trirec", version, about = "Fast transforms for three-term recurrences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gauss quadrature nodes and weights
    Quad(QuadArgs),
    /// Orthogonal polynomial synthesis and analysis
    Poly {
        #[command(subcommand)]
        action: PolyAction,
    },
    /// Zeros of J_nu and sums of Bessel functions at them
    Bessel {
        #[command(subcommand)]
        action: BesselAction,
    },
    /// Median wall-clock time over a list of sizes
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 1e-12)]
    eps: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyKind {
    Jacobi,
    Legendre,
    Chebyshev,
}

#[derive(Args, Clone)]
struct FamilyArgs {
    #[arg(long, value_enum, default_value_t = FamilyKind::Jacobi)]
    family: FamilyKind,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta: f64,
}

impl FamilyArgs {
    fn build(&self) -> trirec::Result<JacobiFamily> {
        match self.family {
            FamilyKind::Jacobi => jacobi_family(self.alpha, self.beta),
            FamilyKind::Legendre => Ok(legendre()),
            FamilyKind::Chebyshev => Ok(chebyshev()),
        }
    }
}

#[derive(Args)]
struct QuadArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    common: Common,
}

/// Coefficients from a file or from a seeded generator.
#[derive(Args, Clone)]
struct Coeffs {
    /// One value per line
    #[arg(long, conflicts_with = "random")]
    coeffs: Option<PathBuf>,
    /// Draw this many uniform values in [-1, 1)
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl Coeffs {
    fn load(&self) -> anyhow::Result<Option<Vec<f64>>> {
        if let Some(path) = &self.coeffs {
            return read_coeffs(path).map(Some);
        }
        Ok(self.random.map(|n| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        }))
    }
}

#[derive(Args)]
struct PolyArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Transform size; defaults to the number of coefficients
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    coeffs: Coeffs,
    /// Also apply the inverse transform and report the residual
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum PolyAction {
    /// Values at the Gauss nodes from expansion coefficients
    Synth(PolyArgs),
    /// Expansion coefficients from values at the Gauss nodes
    Analyze(PolyArgs),
}

#[derive(Args)]
struct BesselZerosArgs {
    #[arg(long)]
    nu: f64,
    #[arg(long)]
    count: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BesselSynthArgs {
    #[arg(long)]
    nu: f64,
    /// Number of zeros and coefficients; defaults to the number of coefficients
    #[arg(long)]
    count: Option<usize>,
    #[command(flatten)]
    coeffs: Coeffs,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum BesselAction {
    Zeros(BesselZerosArgs),
    Synth(BesselSynthArgs),
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_parser = parse_op)]
    op: BenchOp,
    /// Comma-separated list
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 1e-10)]
    eps: f64,
    #[arg(long, default_value_t = 3)]
    repeat: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_op(s: &str) -> Result<BenchOp, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn read_coeffs(path: &Path) -> anyhow::Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| anyhow!("{}:{}: {e}", path.display(), i + 1))
        })
        .collect()
}

fn resolve_len(given: Option<usize>, coeffs: &Option<Vec<f64>>) -> anyhow::Result<usize> {
    match (given, coeffs) {
        (Some(n), Some(c)) if c.len() != n => Err(Error::LengthMismatch {
            expected: n,
            got: c.len(),
        }
        .into()),
        (Some(n), _) => Ok(n),
        (None, Some(c)) => Ok(c.len()),
        (None, None) => Err(anyhow!("give --n or --count, --coeffs FILE, or --random N")),
    }
}

fn family_meta(t: &mut Table, fam: &JacobiFamily) {
    t.meta("family", trirec::orthopoly::RecurrenceFamily::name(fam));
    t.meta_float("alpha", fam.alpha());
    t.meta_float("beta", fam.beta());
}

fn cmd_quad(a: &QuadArgs) -> anyhow::Result<(Table, Common)> {
    let fam = a.family.build()?;
    let start = Instant::now();
    let rule = gauss_rule(&fam, a.n, a.common.eps)?;
    let mut t = Table::new("quad", &["k", "node", "weight"]);
    family_meta(&mut t, &fam);
    t.meta("n", a.n);
    t.meta_float("eps", a.common.eps);
    t.meta_float("seconds", start.elapsed().as_secs_f64());
    for (k, (x, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        t.push(vec![k.into(), (*x).into(), (*w).into()]);
    }
    Ok((t, a.common.clone()))
}

fn cmd_poly(a: &PolyArgs, forward: bool) -> anyhow::Result<(Table, Common)> {
    let fam = a.family.build()?;
    let input = a.coeffs.load()?;
    let n = resolve_len(a.n, &input)?;
    let input = input.unwrap_or_else(|| vec![0.0; n]);
    let start = Instant::now();
    let plan = build_poly_plan(&fam, n, a.common.eps)?;
    let out = if forward { synthesize(&plan, &input)? } else { analyze(&plan, &input)? };
    let seconds = start.elapsed().as_secs_f64();
    let mut t = Table::new(if forward { "poly-synth" } else { "poly-analyze" }, &["k", "value"]);
    family_meta(&mut t, &fam);
    t.meta("n", n);
    t.meta_float("eps", a.common.eps);
    t.meta_float("seconds", seconds);
    if a.check {
        let back = if forward { analyze(&plan, &out)? } else { synthesize(&plan, &out)? };
        let norm = input.iter().map(|v| v * v).sum::<f64>().sqrt();
        let res = back
            .iter()
            .zip(&input)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let rel = if norm > 0.0 { res / norm } else { res };
        t.meta_float("residual", rel);
        eprintln!("round-trip residual: {}", output::fmt_float(rel));
    }
    for (k, v) in out.iter().enumerate() {
        t.push(vec![k.into(), (*v).into()]);
    }
    Ok((t, a.common.clone()))
}

fn cmd_bessel_zeros(a: &BesselZerosArgs) -> anyhow::Result<(Table, Common)> {
    let start = Instant::now();
    let z = bessel_zeros(a.nu, a.count, a.common.eps)?;
    let mut t = Table::new("bessel-zeros", &["k", "zero", "delta_bound", "gap"]);
    t.meta_float("nu", a.nu);
    t.meta("count", a.count);
    t.meta("matrix_n", z.n);
    t.meta_float("eps", a.common.eps);
    t.meta_float("seconds", start.elapsed().as_secs_f64());
    for k in 0..a.count {
        t.push(vec![
            (k + 1).into(),
            z.zeros[k].into(),
            z.delta_bounds[k].into(),
            z.gaps[k].into(),
        ]);
    }
    Ok((t, a.common.clone()))
}

fn cmd_bessel_synth(a: &BesselSynthArgs) -> anyhow::Result<(Table, Common)> {
    let input = a.coeffs.load()?;
    let count = resolve_len(a.count, &input)?;
    let input = input.unwrap_or_else(|| vec![0.0; count]);
    let start = Instant::now();
    let plan = build_bessel_plan(a.nu, count, a.common.eps)?;
    let (alpha, bounds) = bessel_synthesize(&plan, &input)?;
    let mut t = Table::new("bessel-synth", &["k", "value", "error_bound"]);
    t.meta_float("nu", a.nu);
    t.meta("count", count);
    t.meta("matrix_n", plan.n());
    t.meta_float("eps", a.common.eps);
    t.meta_float("seconds", start.elapsed().as_secs_f64());
    for k in 0..count {
        t.push(vec![(k + 1).into(), alpha[k].into(), bounds[k].into()]);
    }
    Ok((t, a.common.clone()))
}

fn cmd_bench(a: &BenchArgs) -> anyhow::Result<(Table, Common)> {
    let rows = run_bench(a.op, &a.sizes, a.eps, a.repeat)?;
    let mut t = Table::new("bench", &["n", "median_seconds", "ratio_vs_prev"]);
    t.meta("op", a.op.name());
    t.meta_float("eps", a.eps);
    t.meta("repeat", a.repeat);
    t.meta("parallel", trirec::is_parallel());
    for r in rows {
        t.push(vec![r.n.into(), r.median_seconds.into(), r.ratio.into()]);
    }
    let common = Common {
        eps: a.eps,
        format: a.format,
        output: a.output.clone(),
    };
    Ok((t, common))
}

fn emit(t: &Table, common: &Common) -> anyhow::Result<()> {
    match &common.output {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(f);
            t.write(common.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            t.write(common.format, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (table, common) = match &cli.command {
        Command::Quad(a) => cmd_quad(a)?,
        Command::Poly { action: PolyAction::Synth(a) } => cmd_poly(a, true)?,
        Command::Poly { action: PolyAction::Analyze(a) } => cmd_poly(a, false)?,
        Command::Bessel { action: BesselAction::Zeros(a) } => cmd_bessel_zeros(a)?,
        Command::Bessel { action: BesselAction::Synth(a) } => cmd_bessel_synth(a)?,
        Command::Bench(a) => cmd_bench(a)?,
    };
    emit(&table, &common)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::Certification { .. }
            | Error::NumericalDegeneracy { .. }
            | Error::SecularNonConvergence { .. }
            | Error::InterlacingViolation { .. },
        ) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let cert = anyhow::Error::from(Error::Certification {
            index: 7,
            reason: "bound too large".into(),
        });
        assert_eq!(exit_code(&cert), 3);
        assert!(format!("{cert}").contains('7'));
        assert_eq!(exit_code(&Error::InvalidParameter("n".into()).into()), 2);
        assert_eq!(exit_code(&anyhow!("io")), 2);
    }

    #[test]
    fn length_resolution() {
        assert_eq!(resolve_len(Some(3), &None).unwrap(), 3);
        assert_eq!(resolve_len(None, &Some(vec![0.0; 4])).unwrap(), 4);
        assert!(resolve_len(Some(3), &Some(vec![0.0; 4])).is_err());
        assert!(resolve_len(None, &None).is_err());
    }
}
