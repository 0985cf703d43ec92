//! Roots of the secular equation `1 + Σ u_i² / (p_i - λ) = 0` and the
//! Löwner reconstruction of the update vector from those roots.
//!
//! Roots are carried as `p[anchor] + tau` so that a root lying within a few
//! ulps of a pole still has an exactly known distance to it. Every iteration
//! evaluates the secular function at all unconverged iterates with one fast
//! kernel sum.

use crate::error::{check_len, Error, Result};
use crate::fmm1d::{CauchyPlan, Kernel, PlanOptions, SplitPoints};

const MAX_ITER: usize = 100;
const NONE: usize = usize::MAX;

/// Rank-one update problem `diag(poles) + rho z zᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecularProblem {
    pub poles: Vec<f64>,
    pub z: Vec<f64>,
    pub rho: f64,
}

impl SecularProblem {
    fn validate(&self) -> Result<()> {
        check_len(self.poles.len(), self.z.len())?;
        if self.poles.is_empty() {
            return Err(Error::InvalidParameter("empty secular problem".into()));
        }
        if self.rho == 0.0 || !self.rho.is_finite() {
            return Err(Error::InvalidParameter("rho must be finite and nonzero".into()));
        }
        if !self.poles.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("poles must be strictly increasing".into()));
        }
        if let Some(i) = self.z.iter().position(|&v| v == 0.0 || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight {i} is zero")));
        }
        Ok(())
    }
}

/// Roots as offsets from a pole of the (positive-update) frame.
#[derive(Debug, Clone)]
pub(crate) struct Roots {
    pub anchor: Vec<usize>,
    pub tau: Vec<f64>,
}

impl Roots {
    pub fn value(&self, p: &[f64], j: usize) -> f64 {
        p[self.anchor[j]] + self.tau[j]
    }

    pub fn anchors(&self, p: &[f64]) -> Vec<f64> {
        self.anchor.iter().map(|&k| p[k]).collect()
    }
}

/// Tuning shared by the merge step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SecularOptions {
    pub eps: f64,
    pub direct_threshold: usize,
}

impl SecularOptions {
    fn plan(&self, src: SplitPoints<'_>, tgt: SplitPoints<'_>, coincident: bool) -> Result<CauchyPlan> {
        CauchyPlan::with_options(
            src,
            tgt,
            self.eps,
            PlanOptions {
                direct_threshold: self.direct_threshold,
                allow_coincident: coincident,
                ..Default::default()
            },
        )
    }

    /// Relative accuracy of the sums over `m` poles.
    fn sum_eps(&self, m: usize) -> f64 {
        if 2 * m <= self.direct_threshold {
            f64::EPSILON
        } else {
            self.eps
        }
    }
}

/// Values of `f`, `f'` restricted to non-excluded poles, and `Σ u²/|p-λ|`
/// over the same poles, at targets `anchor + offset`.
struct Partial {
    rest: Vec<f64>,
    rest_d: Vec<f64>,
    rest_abs: Vec<f64>,
}

fn partial_sums(
    p: &[f64],
    u2: &[f64],
    anchor: &[f64],
    offset: &[f64],
    exclude: &[[usize; 2]],
    opts: &SecularOptions,
) -> Result<Partial> {
    let plan = opts.plan(SplitPoints::plain(p), SplitPoints::split(anchor, offset), true)?;
    // Σ u²/(λ - p) = -Σ u²/(p - λ)
    let cauchy = plan.apply_excluding(Kernel::Cauchy, u2, exclude)?;
    let rest_d = plan.apply_excluding(Kernel::InverseSquare, u2, exclude)?;
    let rest_abs = plan.apply_excluding(Kernel::InverseAbs, u2, exclude)?;
    Ok(Partial {
        rest: cauchy.into_iter().map(|v| -v).collect(),
        rest_d,
        rest_abs,
    })
}

#[derive(Debug, Clone, Copy)]
struct Iterate {
    origin: usize,
    /// Neighbouring pole on the far side of the bracket, or `NONE` for the
    /// exterior root.
    other: usize,
    /// `p[other] - p[origin]`.
    delta: f64,
    tau: f64,
    lo: f64,
    hi: f64,
    done: bool,
}

/// Solves `1 + Σ u_i²/(p_i - λ) = 0` for strictly increasing `p` and
/// nonzero `u`. Root `j` lies in `(p_j, p_{j+1})`, the last one in
/// `(p_{m-1}, p_{m-1} + ‖u‖²]`.
pub(crate) fn solve_frame(p: &[f64], u: &[f64], opts: &SecularOptions) -> Result<Roots> {
    let m = p.len();
    let u2: Vec<f64> = u.iter().map(|v| v * v).collect();
    let unorm2: f64 = u2.iter().sum();
    if m == 1 {
        return Ok(Roots {
            anchor: vec![0],
            tau: vec![unorm2],
        });
    }

    // which half of each interval holds the root
    let mid_anchor: Vec<f64> = p[..m - 1].to_vec();
    let half: Vec<f64> = (0..m - 1).map(|j| 0.5 * (p[j + 1] - p[j])).collect();
    let excl: Vec<[usize; 2]> = (0..m - 1).map(|j| [j, j + 1]).collect();
    let mid = partial_sums(p, &u2, &mid_anchor, &half, &excl, opts)?;
    let mut its: Vec<Iterate> = (0..m)
        .map(|j| {
            if j == m - 1 {
                return Iterate {
                    origin: j,
                    other: NONE,
                    delta: 0.0,
                    tau: 0.5 * unorm2,
                    lo: 0.0,
                    hi: unorm2,
                    done: false,
                };
            }
            let full = 2.0 * half[j];
            let f = 1.0 + mid.rest[j] + u2[j] / (-half[j]) + u2[j + 1] / (full - half[j]);
            if f >= 0.0 {
                Iterate {
                    origin: j,
                    other: j + 1,
                    delta: p[j + 1] - p[j],
                    tau: half[j],
                    lo: 0.0,
                    hi: half[j],
                    done: f == 0.0,
                }
            } else {
                let delta = p[j] - p[j + 1];
                // offset of the midpoint from p[j+1], from differences only
                let t = -(full - half[j]);
                Iterate {
                    origin: j + 1,
                    other: j,
                    delta,
                    tau: t,
                    lo: t,
                    hi: 0.0,
                    done: false,
                }
            }
        })
        .collect();

    let feps = opts.sum_eps(m);
    let mut active: Vec<usize> = (0..m).filter(|&j| !its[j].done).collect();
    let mut iter = 0;
    while !active.is_empty() {
        iter += 1;
        if iter > MAX_ITER {
            let it = its[active[0]];
            return Err(Error::SecularNonConvergence {
                lo: p[it.origin] + it.lo,
                hi: p[it.origin] + it.hi,
                iterations: MAX_ITER,
            });
        }
        let anchor: Vec<f64> = active.iter().map(|&j| p[its[j].origin]).collect();
        let offset: Vec<f64> = active.iter().map(|&j| its[j].tau).collect();
        let excl: Vec<[usize; 2]> = active
            .iter()
            .map(|&j| [its[j].origin, its[j].other])
            .collect();
        let part = partial_sums(p, &u2, &anchor, &offset, &excl, opts)?;

        let mut still = Vec::with_capacity(active.len());
        for (a, &j) in active.iter().enumerate() {
            let it = &mut its[j];
            let (r, rd, rabs) = (part.rest[a], part.rest_d[a], part.rest_abs[a]);
            let tau = it.tau;
            let ao = u2[it.origin];
            let (f, abs_sum, next) = if it.other == NONE {
                let f = 1.0 + r - ao / tau;
                let s = ao + rd * tau * tau;
                let c = 1.0 + r + rd * tau;
                let next = if c > 0.0 { s / c } else { f64::NAN };
                (f, rabs + ao / tau.abs(), next)
            } else {
                let bo = u2[it.other];
                let gap = it.delta - tau;
                let f = 1.0 + r - ao / tau + bo / gap;
                let s = bo + rd * gap * gap;
                let c = 1.0 + r - rd * gap;
                let next = model_root(c, ao, s, it.delta, it.lo, it.hi);
                (f, rabs + ao / tau.abs() + bo / gap.abs(), next)
            };
            if f < 0.0 {
                it.lo = tau;
            } else if f > 0.0 {
                it.hi = tau;
            }
            let width = it.hi - it.lo;
            if f.abs() <= 4.0 * feps * (1.0 + abs_sum)
                || width <= 4.0 * f64::EPSILON * tau.abs()
            {
                continue;
            }
            let next = if next > it.lo && next < it.hi {
                next
            } else {
                0.5 * (it.lo + it.hi)
            };
            let step = (next - tau).abs();
            it.tau = next;
            if step <= 4.0 * f64::EPSILON * next.abs() {
                continue;
            }
            still.push(j);
        }
        active = still;
    }

    let roots = Roots {
        anchor: its.iter().map(|it| it.origin).collect(),
        tau: its.iter().map(|it| it.tau).collect(),
    };
    check_interlacing(p, &roots, unorm2)?;
    Ok(roots)
}

/// Root of `c + A/(-t) + S/(delta - t) = 0` inside `(lo, hi)`, or NaN.
fn model_root(c: f64, a: f64, s: f64, delta: f64, lo: f64, hi: f64) -> f64 {
    // c t² - (c δ + A + S) t + A δ = 0
    let qa = c;
    let qb = -(c * delta + a + s);
    let qc = a * delta;
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
    let q = -0.5 * (qb + qb.signum() * disc.sqrt());
    let mut cands = [f64::NAN; 2];
    if q != 0.0 {
        cands[0] = qc / q;
        if qa != 0.0 {
            cands[1] = q / qa;
        }
    }
    cands
        .into_iter()
        .find(|&t| t > lo && t < hi)
        .unwrap_or(f64::NAN)
}

fn check_interlacing(p: &[f64], roots: &Roots, unorm2: f64) -> Result<()> {
    let m = p.len();
    for j in 0..m {
        let (k, t) = (roots.anchor[j], roots.tau[j]);
        let ok = if j == m - 1 {
            k == j && t > 0.0 && t <= unorm2 * (1.0 + 4.0 * f64::EPSILON)
        } else if k == j {
            t > 0.0 && t < p[j + 1] - p[j]
        } else {
            k == j + 1 && t < 0.0 && t > p[j] - p[j + 1]
        };
        if !ok || !t.is_finite() {
            return Err(Error::InterlacingViolation {
                value: roots.value(p, j),
            });
        }
    }
    Ok(())
}

/// Löwner reconstruction: the vector `ẑ` for which the computed roots are
/// the exact eigenvalues of `diag(p) + ẑ ẑᵀ`, with the signs of `u`.
pub(crate) fn lowner(p: &[f64], u: &[f64], roots: &Roots, opts: &SecularOptions) -> Result<Vec<f64>> {
    let m = p.len();
    if m == 1 {
        return Ok(vec![roots.tau[0].sqrt().copysign(u[0])]);
    }
    // ln|ẑ_i| = ½ Σ_j ln|r_j - p_i| - ½ Σ_{j≠i} ln|p_j - p_i|
    let mut anchor = roots.anchors(p);
    anchor.extend_from_slice(p);
    let mut offset = roots.tau.clone();
    offset.extend(std::iter::repeat(0.0).take(m));
    let mut charges = vec![0.5; m];
    charges.extend(std::iter::repeat(-0.5).take(m));
    let plan = opts.plan(
        SplitPoints::split(&anchor, &offset),
        SplitPoints::plain(p),
        true,
    )?;
    let logs = plan.apply_kernel(Kernel::LogAbs, &charges)?;
    Ok(logs
        .iter()
        .zip(u)
        .map(|(&l, &ui)| l.exp().copysign(ui))
        .collect())
}

/// Roots of the rank-one update in ascending order, and the Löwner vector
/// `ẑ` (in the units of `z`, so `diag(poles) + rho ẑ ẑᵀ` has exactly the
/// returned roots as eigenvalues up to rounding).
pub fn solve_secular(problem: &SecularProblem) -> Result<(Vec<f64>, Vec<f64>)> {
    problem.validate()?;
    let sigma = problem.rho.signum();
    let scale = problem.rho.abs().sqrt();
    let mut p: Vec<f64> = problem.poles.iter().map(|&d| sigma * d).collect();
    let mut u: Vec<f64> = problem.z.iter().map(|&z| scale * z).collect();
    if sigma < 0.0 {
        p.reverse();
        u.reverse();
    }
    let opts = SecularOptions {
        eps: 1e-15,
        direct_threshold: 128,
    };
    let roots = solve_frame(&p, &u, &opts)?;
    let zhat = lowner(&p, &u, &roots, &opts)?;
    let mut lam: Vec<f64> = (0..p.len()).map(|j| sigma * roots.value(&p, j)).collect();
    let mut zh: Vec<f64> = zhat.iter().map(|v| v / scale).collect();
    if sigma < 0.0 {
        lam.reverse();
        zh.reverse();
    }
    Ok((lam, zh))
}
