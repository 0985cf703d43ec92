//! Wall-clock scaling measurements with fixed, seeded inputs.

use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bessel::{bessel_synthesize, build_bessel_plan};
use crate::error::{check_eps, Error, Result};
use crate::orthopoly::{build_poly_plan, jacobi_matrix, legendre, synthesize};
use crate::trieig::{decompose, Side};

pub const SEED: u64 = 0x7e1d_2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchOp {
    /// Eigendecomposition of the Legendre Jacobi matrix.
    Decompose,
    /// `U v` for a decomposed Legendre Jacobi matrix.
    Apply,
    /// Legendre synthesis with a prebuilt plan.
    PolySynth,
    /// Bessel synthesis (`ν = 0`, `K = n`) with a prebuilt plan.
    BesselSynth,
}

impl BenchOp {
    pub fn name(self) -> &'static str {
        match self {
            BenchOp::Decompose => "decompose",
            BenchOp::Apply => "apply",
            BenchOp::PolySynth => "poly-synth",
            BenchOp::BesselSynth => "bessel-synth",
        }
    }
}

impl FromStr for BenchOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decompose" => Ok(BenchOp::Decompose),
            "apply" => Ok(BenchOp::Apply),
            "poly-synth" => Ok(BenchOp::PolySynth),
            "bessel-synth" => Ok(BenchOp::BesselSynth),
            _ => Err(Error::InvalidParameter(format!("unknown bench op {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub median_seconds: f64,
    /// `t(n) / t(previous n)`; `None` for the first size.
    pub ratio: Option<f64>,
}

/// Median of a nonempty sample.
pub fn median(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

fn random_vec(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ n as u64);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn time<T>(f: impl FnOnce() -> Result<T>) -> Result<f64> {
    let start = Instant::now();
    std::hint::black_box(f()?);
    Ok(start.elapsed().as_secs_f64())
}

fn time_one(op: BenchOp, n: usize, eps: f64, repeat: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(repeat);
    match op {
        BenchOp::Decompose => {
            let t = jacobi_matrix(&legendre(), n)?;
            for _ in 0..repeat {
                out.push(time(|| decompose(&t, eps))?);
            }
        }
        BenchOp::Apply => {
            let tree = decompose(&jacobi_matrix(&legendre(), n)?, eps)?;
            let v = random_vec(n);
            for _ in 0..repeat {
                out.push(time(|| tree.apply(&v, Side::Normal))?);
            }
        }
        BenchOp::PolySynth => {
            let plan = build_poly_plan(&legendre(), n, eps)?;
            let v = random_vec(n);
            for _ in 0..repeat {
                out.push(time(|| synthesize(&plan, &v))?);
            }
        }
        BenchOp::BesselSynth => {
            let plan = build_bessel_plan(0.0, n, eps)?;
            let v = random_vec(n);
            for _ in 0..repeat {
                out.push(time(|| bessel_synthesize(&plan, &v))?);
            }
        }
    }
    Ok(out)
}

/// Times `op` at each size and reports the median over `repeat` runs.
pub fn run_bench(op: BenchOp, sizes: &[usize], eps: f64, repeat: usize) -> Result<Vec<BenchRow>> {
    check_eps(eps)?;
    if repeat == 0 {
        return Err(Error::InvalidParameter("repeat must be at least 1".into()));
    }
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::InvalidParameter("sizes must be a nonempty list of positive integers".into()));
    }
    let mut rows: Vec<BenchRow> = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let median_seconds = median(&time_one(op, n, eps, repeat)?);
        let ratio = rows.last().map(|r| median_seconds / r.median_seconds);
        rows.push(BenchRow {
            n,
            median_seconds,
            ratio,
        });
    }
    Ok(rows)
}
