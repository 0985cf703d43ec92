//! Zeros of `J_ν` as reciprocals of eigenvalues of the Bessel recurrence
//! matrix, and fast evaluation of `Σ_k β_k f_k(x_j)` at those zeros, where
//! `f_k(x) = 2^ν Γ(ν+1) √(ν+k) x^{-ν} J_{ν+k}(x)`.

use crate::error::{check_eps, check_len, Error, Result};
use crate::par;
use crate::trieig::{decompose, Side, SpectralTree, TridiagonalSymmetric};

fn check_nu(nu: f64) -> Result<()> {
    if nu >= 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("nu must be >= 0, got {nu}")))
    }
}

/// `T` with zero diagonal and `T_{j,j+1} = 1 / (2 √((ν+j)(ν+j+1)))`,
/// `j = 1, …, n-1`.
pub fn bessel_matrix(nu: f64, n: usize) -> Result<TridiagonalSymmetric> {
    check_nu(nu)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let off = (1..n)
        .map(|j| {
            let j = j as f64;
            0.5 / ((nu + j) * (nu + j + 1.0)).sqrt()
        })
        .collect();
    TridiagonalSymmetric::new(vec![0.0; n], off)
}

/// Reference values at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselValues {
    /// `2^ν Γ(ν+1) x^{-ν} J_ν(x)`
    pub h: f64,
    /// `f_0(x), …, f_kmax(x)`
    pub f: Vec<f64>,
}

/// Miller's backward recurrence for `J_{ν+k}(x)`, normalised with the
/// Neumann series `Σ_k ε_k J_{ν+2k}(x) = (x/2)^ν / Γ(ν+1)`, where
/// `ε_0 = 1` and `ε_k = (ν+2k) Γ(ν+k) / (k! Γ(ν+1))`.
///
/// The unknown scale of the recurrence cancels in `f_k`, so no gamma
/// function or power of `x` is ever evaluated.
pub fn reference_bessel(nu: f64, x: f64, kmax: usize) -> Result<BesselValues> {
    check_nu(nu)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("x must be positive, got {x}")));
    }
    let start = (kmax as f64).max(x) + 30.0 + 10.0 * x.cbrt();
    let top = start.ceil() as usize;
    let mut g = vec![0.0f64; top + 2];
    g[top] = 1.0;
    for k in (1..=top).rev() {
        g[k - 1] = 2.0 * (nu + k as f64) / x * g[k] - g[k + 1];
        if g[k - 1].abs() > 1e250 {
            for v in g[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let mut sum = g[0];
    let mut b = 1.0;
    let mut j = 1;
    while 2 * j <= top {
        if j > 1 {
            b *= (nu + j as f64 - 1.0) / j as f64;
        }
        sum += (nu + 2.0 * j as f64) * b * g[2 * j];
        j += 1;
    }
    Ok(BesselValues {
        h: g[0] / sum,
        f: (0..=kmax)
            .map(|k| (nu + k as f64).sqrt() * g[k] / sum)
            .collect(),
    })
}

/// `f_0(x), …, f_kmax(x)`.
pub fn reference_bessel_f(nu: f64, x: f64, kmax: usize) -> Result<Vec<f64>> {
    Ok(reference_bessel(nu, x, kmax)?.f)
}

fn delta_from(nu: f64, n: usize, f: &[f64]) -> f64 {
    let mass: f64 = f[1..=n].iter().map(|v| v * v).sum();
    let nn = nu + n as f64;
    f[n + 1].abs() / (2.0 * (nn * (nn + 1.0)).sqrt() * mass.sqrt())
}

/// Truncation residual `δ(x) = |f_{n+1}| / (2 √((ν+n)(ν+n+1)) ‖(f_1…f_n)‖)`:
/// `1/x` lies within `δ` of an eigenvalue of the `n × n` matrix whenever
/// `J_ν(x) = 0`.
pub fn delta_bound(nu: f64, n: usize, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let f = reference_bessel_f(nu, x, n + 1)?;
    Ok(delta_from(nu, n, &f))
}

/// Both sides of the closed form for `Σ_{m≥1} f_m(x)²`, the left one
/// truncated after `terms` terms.
pub fn hansen_sides(nu: f64, x: f64, terms: usize) -> Result<(f64, f64)> {
    let v = reference_bessel(nu, x, terms)?;
    let lhs: f64 = v.f[1..].iter().map(|a| a * a).sum();
    let f1 = v.f[1];
    let rhs = x * x / (2.0 * (nu + 1.0)) * f1 * f1 + 0.5 * x * x * v.h * v.h
        - (2.0 * nu + 1.0) * x / (2.0 * (nu + 1.0).sqrt()) * v.h * f1;
    Ok((lhs, rhs))
}

/// Certified zeros of `J_ν`.
#[derive(Debug, Clone)]
pub struct BesselZeros {
    /// Dimension of the recurrence matrix that produced them.
    pub n: usize,
    pub zeros: Vec<f64>,
    /// `δ(x_k)`, a bound on `|1/x_k - λ_k|` from truncation.
    pub delta_bounds: Vec<f64>,
    /// Distance from `λ_k` to the nearest other eigenvalue.
    pub gaps: Vec<f64>,
    /// Bound on `|x_k - true zero|`.
    pub zero_bounds: Vec<f64>,
}

struct ZeroSolve {
    tree: SpectralTree,
    /// index into the ascending eigenvalue list
    idx: Vec<usize>,
    zeros: BesselZeros,
    f: Vec<Vec<f64>>,
}

const MAX_GROWTH: usize = 3;

fn initial_size(nu: f64, count: usize) -> usize {
    let x = (count as f64 + 0.5 * nu - 0.25) * std::f64::consts::PI;
    (x + 10.0 * x.cbrt() + 20.0).ceil() as usize
}

fn solve_zeros(nu: f64, count: usize, eps: f64) -> Result<ZeroSolve> {
    check_nu(nu)?;
    check_eps(eps)?;
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    let mut n = initial_size(nu, count);
    let mut failure = None;
    for _ in 0..=MAX_GROWTH {
        let t = bessel_matrix(nu, n)?;
        let tree = decompose(&t, eps)?;
        let ev = tree.eigenvalues();
        let positive = ev.iter().filter(|&&l| l > 0.0).count();
        if positive < count {
            n = n * 3 / 2;
            continue;
        }
        let idx: Vec<usize> = (0..count).map(|k| ev.len() - 1 - k).collect();
        let zeros: Vec<f64> = idx.iter().map(|&i| 1.0 / ev[i]).collect();
        let f: Vec<Vec<f64>> = par::map_range(count, |k| reference_bessel_f(nu, zeros[k], n + 1))
            .into_iter()
            .collect::<Result<_>>()?;
        let deltas: Vec<f64> = f.iter().map(|fk| delta_from(nu, n, fk)).collect();
        let gaps: Vec<f64> = idx
            .iter()
            .map(|&i| {
                let lo = if i > 0 { ev[i] - ev[i - 1] } else { f64::INFINITY };
                let hi = if i + 1 < ev.len() { ev[i + 1] - ev[i] } else { f64::INFINITY };
                lo.min(hi)
            })
            .collect();
        let tol = eps * tree.norm();
        failure = (0..count).find(|&k| !(deltas[k] <= tol && 2.0 * deltas[k] < gaps[k]));
        if let Some(_) = failure {
            n = n * 3 / 2;
            continue;
        }
        // |1/x - λ| ≤ δ + eigenvalue error, mapped through x = 1/λ
        let eig_err = 8.0 * f64::EPSILON * tree.norm();
        let zero_bounds = zeros
            .iter()
            .zip(&deltas)
            .map(|(&x, &d)| x * x * (d + eig_err))
            .collect();
        return Ok(ZeroSolve {
            zeros: BesselZeros {
                n,
                zeros,
                delta_bounds: deltas,
                gaps,
                zero_bounds,
            },
            tree,
            idx,
            f,
        });
    }
    let index = failure.map_or(count, |k| k + 1);
    Err(Error::Certification {
        index,
        reason: format!("zero {index} of J_{nu} could not be certified up to n = {n}"),
    })
}

/// The first `count` positive zeros of `J_ν`, each with its certificate.
pub fn bessel_zeros(nu: f64, count: usize, eps: f64) -> Result<BesselZeros> {
    Ok(solve_zeros(nu, count, eps)?.zeros)
}

/// Precomputed data for [`bessel_synthesize`].
#[derive(Debug, Clone)]
pub struct BesselPlan {
    nu: f64,
    eps: f64,
    tree: SpectralTree,
    idx: Vec<usize>,
    zeros: BesselZeros,
    scaling: Vec<f64>,
    col_sign: Vec<f64>,
    f1: Vec<f64>,
    /// `2 S_kk δ_k / gap_k`
    unit_bounds: Vec<f64>,
}

impl BesselPlan {
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Matrix dimension.
    pub fn n(&self) -> usize {
        self.zeros.n
    }

    /// Number of usable zeros.
    pub fn count(&self) -> usize {
        self.idx.len()
    }

    pub fn zeros(&self) -> &BesselZeros {
        &self.zeros
    }

    /// Diagonal `S_kk`.
    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    /// `f_1(x_k)`.
    pub fn f1(&self) -> &[f64] {
        &self.f1
    }

    /// Per-entry bounds for a coefficient vector of unit norm.
    pub fn unit_bounds(&self) -> &[f64] {
        &self.unit_bounds
    }

    pub fn tree(&self) -> &SpectralTree {
        &self.tree
    }

    /// Eigenvalue `λ_k` paired with zero `k`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.tree.eigenvalues()[self.idx[k]]
    }

    /// Normalised eigenvector paired with zero `k`, first entry signed like
    /// `f_1(x_k)`.
    pub fn eigenvector(&self, k: usize) -> Result<Vec<f64>> {
        let mut v = self.tree.eigenvectors(&[self.idx[k]])?.remove(0);
        if self.col_sign[k] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        Ok(v)
    }
}

/// Computes the zeros, the scaling `S_kk = |f_1(x_k)| / |(Uᵀe)_k|` and the
/// per-entry error bounds, and checks that every bound is informative
/// (`2 S_kk δ_k / gap_k < |f_1(x_k)|`).
pub fn build_bessel_plan(nu: f64, count: usize, eps: f64) -> Result<BesselPlan> {
    let sol = solve_zeros(nu, count, eps)?;
    let n = sol.zeros.n;
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    let first = sol.tree.apply(&e, Side::Transpose)?;
    let mut scaling = Vec::with_capacity(count);
    let mut col_sign = Vec::with_capacity(count);
    let mut f1 = Vec::with_capacity(count);
    let mut unit_bounds = Vec::with_capacity(count);
    for k in 0..count {
        let f = sol.f[k][1];
        let u0 = first[sol.idx[k]];
        if f == 0.0 || u0 == 0.0 {
            return Err(Error::NumericalDegeneracy {
                index: k + 1,
                reason: "f_1 or the first eigenvector entry vanishes".into(),
            });
        }
        let s = f.abs() / u0.abs();
        let bound = 2.0 * s * sol.zeros.delta_bounds[k] / sol.zeros.gaps[k];
        if !(bound < f.abs()) {
            return Err(Error::Certification {
                index: k + 1,
                reason: format!("error bound {bound:e} is not below |f_1| = {:e}", f.abs()),
            });
        }
        scaling.push(s);
        col_sign.push(f.signum() * u0.signum());
        f1.push(f);
        unit_bounds.push(bound);
    }
    Ok(BesselPlan {
        nu,
        eps,
        tree: sol.tree,
        idx: sol.idx,
        zeros: sol.zeros,
        scaling,
        col_sign,
        f1,
        unit_bounds,
    })
}

/// `α_j ≈ Σ_{k=1}^{K} β_k f_k(x_j)` for `j = 1, …, K`, with per-entry
/// bounds `2 S_jj δ_j / gap_j · ‖β‖₂`.
pub fn bessel_synthesize(plan: &BesselPlan, beta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let count = plan.count();
    check_len(count, beta.len())?;
    let mut padded = vec![0.0; plan.n()];
    padded[..count].copy_from_slice(beta);
    let ut = plan.tree.apply(&padded, Side::Transpose)?;
    let norm = beta.iter().map(|v| v * v).sum::<f64>().sqrt();
    let alpha = (0..count)
        .map(|k| plan.scaling[k] * plan.col_sign[k] * ut[plan.idx[k]])
        .collect();
    let bounds = plan.unit_bounds.iter().map(|b| b * norm).collect();
    Ok((alpha, bounds))
}
