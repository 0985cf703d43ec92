//! One divide-and-conquer merge: the orthogonal factor `Q` with
//! `D + ρ z zᵀ = Q Λ Qᵀ`, kept in implicit form.

use super::deflate::{default_tol, deflate_frame, Rotation};
use super::secular::{lowner, solve_frame, SecularOptions};
use crate::error::{Error, Result};
use crate::fmm1d::{CauchyPlan, Kernel, PlanOptions, SplitPoints};

const SECULAR_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy)]
enum Slot {
    Root(usize),
    Deflated(usize),
}

/// Fast representation of the eigenvector matrix of the reduced problem:
/// `W[i, j] = ẑ_i / ((p_i - r_j) N_j)`.
#[derive(Debug, Clone)]
struct Cauchy {
    zhat: Vec<f64>,
    inv_norm: Vec<f64>,
    /// targets = poles, sources = roots
    to_poles: CauchyPlan,
    /// targets = roots, sources = poles
    to_roots: CauchyPlan,
}

#[derive(Debug, Clone)]
pub(crate) struct Merge {
    n: usize,
    sort_perm: Vec<usize>,
    rotations: Vec<Rotation>,
    kept: Vec<usize>,
    out: Vec<Slot>,
    cauchy: Option<Cauchy>,
}

pub(crate) struct MergeOutput {
    pub merge: Merge,
    pub eigenvalues: Vec<f64>,
    pub first_row: Vec<f64>,
    pub last_row: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct MergeOptions {
    pub eps: f64,
    /// Merges smaller than this are applied by direct summation.
    pub break_even: usize,
}

impl Merge {
    /// Merges children with eigenvalues `lam1`, `lam2` and boundary rows
    /// `last1` (last row of `U1`) and `first2` (first row of `U2`).
    pub fn build(
        lam1: &[f64],
        lam2: &[f64],
        first1: &[f64],
        last1: &[f64],
        first2: &[f64],
        last2: &[f64],
        rho: f64,
        opts: &MergeOptions,
    ) -> Result<MergeOutput> {
        let (n1, n) = (lam1.len(), lam1.len() + lam2.len());
        let sigma = if rho < 0.0 { -1.0 } else { 1.0 };
        let scale = rho.abs().sqrt();
        let p: Vec<f64> = lam1.iter().chain(lam2).map(|&v| sigma * v).collect();
        let u: Vec<f64> = last1.iter().chain(first2).map(|&v| scale * v).collect();
        let def = deflate_frame(&p, &u, default_tol(&p, &u));

        let direct = if n < opts.break_even { usize::MAX } else { 0 };
        // roots are always found to full precision; only the eigenvector
        // factor is held at the caller's tolerance
        let sec = SecularOptions {
            eps: SECULAR_EPS,
            direct_threshold: direct,
        };
        let m = def.kept.len();
        let mut values: Vec<(f64, Slot)> = Vec::with_capacity(n);
        let cauchy = if m > 0 {
            let roots = solve_frame(&def.poles, &def.weights, &sec)?;
            let zhat = lowner(&def.poles, &def.weights, &roots, &sec)?;
            for j in 0..m {
                values.push((sigma * roots.value(&def.poles, j), Slot::Root(j)));
            }
            let ranch = roots.anchors(&def.poles);
            let popts = PlanOptions {
                direct_threshold: direct,
                ..Default::default()
            };
            let to_poles = CauchyPlan::with_options(
                SplitPoints::split(&ranch, &roots.tau),
                SplitPoints::plain(&def.poles),
                opts.eps,
                popts,
            )?;
            let to_roots = CauchyPlan::with_options(
                SplitPoints::plain(&def.poles),
                SplitPoints::split(&ranch, &roots.tau),
                opts.eps,
                popts,
            )?;
            let z2: Vec<f64> = zhat.iter().map(|v| v * v).collect();
            let norms2 = to_roots.apply_kernel(Kernel::InverseSquare, &z2)?;
            let inv_norm = norms2.iter().map(|v| 1.0 / v.sqrt()).collect();
            Some(Cauchy {
                zhat,
                inv_norm,
                to_poles,
                to_roots,
            })
        } else {
            None
        };
        for &(pos, val) in &def.deflated {
            values.push((sigma * val, Slot::Deflated(pos)));
        }
        values.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(v) = values.iter().find(|v| !v.0.is_finite()) {
            return Err(Error::NumericalDegeneracy {
                index: match v.1 {
                    Slot::Root(j) | Slot::Deflated(j) => j,
                },
                reason: "non-finite eigenvalue in merge".into(),
            });
        }

        let merge = Merge {
            n,
            sort_perm: def.sort_perm,
            rotations: def.rotations,
            kept: def.kept,
            out: values.iter().map(|v| v.1).collect(),
            cauchy,
        };
        let mut e_first = vec![0.0; n];
        e_first[..n1].copy_from_slice(first1);
        let mut e_last = vec![0.0; n];
        e_last[n1..].copy_from_slice(last2);
        Ok(MergeOutput {
            first_row: merge.apply_transpose(&e_first)?,
            last_row: merge.apply_transpose(&e_last)?,
            eigenvalues: values.into_iter().map(|v| v.0).collect(),
            merge,
        })
    }

    /// `Q x`: node eigen-coordinates to concatenated child coordinates.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n];
        let m = self.kept.len();
        let mut xr = vec![0.0; m];
        for (j, slot) in self.out.iter().enumerate() {
            match *slot {
                Slot::Root(r) => xr[r] = x[j],
                Slot::Deflated(pos) => y[pos] = x[j],
            }
        }
        if let Some(c) = &self.cauchy {
            let q: Vec<f64> = xr.iter().zip(&c.inv_norm).map(|(a, b)| a * b).collect();
            let t = c.to_poles.apply(&q)?;
            for (i, &pos) in self.kept.iter().enumerate() {
                y[pos] = c.zhat[i] * t[i];
            }
        }
        for rot in self.rotations.iter().rev() {
            rot.apply_transpose(&mut y);
        }
        let mut out = vec![0.0; self.n];
        for (pos, &i) in self.sort_perm.iter().enumerate() {
            out[i] = y[pos];
        }
        Ok(out)
    }

    /// `Qᵀ x`: concatenated child coordinates to node eigen-coordinates.
    pub fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y: Vec<f64> = self.sort_perm.iter().map(|&i| x[i]).collect();
        for rot in &self.rotations {
            rot.apply(&mut y);
        }
        let xr = match &self.cauchy {
            Some(c) => {
                let q: Vec<f64> = self
                    .kept
                    .iter()
                    .zip(&c.zhat)
                    .map(|(&pos, z)| z * y[pos])
                    .collect();
                let t = c.to_roots.apply(&q)?;
                t.iter().zip(&c.inv_norm).map(|(a, b)| -a * b).collect()
            }
            None => Vec::new(),
        };
        Ok(self
            .out
            .iter()
            .map(|slot| match *slot {
                Slot::Root(r) => xr[r],
                Slot::Deflated(pos) => y[pos],
            })
            .collect())
    }
}
