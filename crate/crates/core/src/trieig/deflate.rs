//! Deflation of a rank-one update `diag(p) + u uᵀ` before the secular solve.

use super::secular::SecularProblem;

/// Plane rotation acting on sorted positions `a < b`:
/// `(y_a, y_b) <- (c y_a + s y_b, -s y_a + c y_b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Rotation {
    pub a: usize,
    pub b: usize,
    pub c: f64,
    pub s: f64,
}

impl Rotation {
    #[inline]
    pub fn apply(&self, y: &mut [f64]) {
        let (ya, yb) = (y[self.a], y[self.b]);
        y[self.a] = self.c * ya + self.s * yb;
        y[self.b] = -self.s * ya + self.c * yb;
    }

    #[inline]
    pub fn apply_transpose(&self, y: &mut [f64]) {
        let (ya, yb) = (y[self.a], y[self.b]);
        y[self.a] = self.c * ya - self.s * yb;
        y[self.b] = self.s * ya + self.c * yb;
    }
}

/// Outcome of deflating an update whose poles are given in arbitrary order.
#[derive(Debug, Clone)]
pub(crate) struct Deflation {
    /// Sorted position -> input index.
    pub sort_perm: Vec<usize>,
    /// Rotations in the order they were applied to `u`.
    pub rotations: Vec<Rotation>,
    /// Sorted positions that enter the secular problem.
    pub kept: Vec<usize>,
    /// Sorted positions that are already eigenvectors, with their eigenvalues.
    pub deflated: Vec<(usize, f64)>,
    /// Poles of the reduced problem, strictly increasing.
    pub poles: Vec<f64>,
    /// Weights of the reduced problem, all nonzero.
    pub weights: Vec<f64>,
}

/// Default deflation threshold for `diag(p) + u uᵀ`.
pub(crate) fn default_tol(p: &[f64], u: &[f64]) -> f64 {
    let pmax = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    8.0 * f64::EPSILON * pmax.max(umax)
}

/// Deflates `diag(p) + u uᵀ` with absolute threshold `tol`.
pub(crate) fn deflate_frame(p: &[f64], u: &[f64], tol: f64) -> Deflation {
    let n = p.len();
    let mut sort_perm: Vec<usize> = (0..n).collect();
    sort_perm.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut ps: Vec<f64> = sort_perm.iter().map(|&i| p[i]).collect();
    let mut us: Vec<f64> = sort_perm.iter().map(|&i| u[i]).collect();

    let mut rotations = Vec::new();
    let mut deflated = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    for k in 0..n {
        if us[k].abs() <= tol {
            us[k] = 0.0;
            deflated.push((k, ps[k]));
            continue;
        }
        if let Some(&a) = kept.last() {
            if ps[k] - ps[a] <= tol {
                let r = us[a].hypot(us[k]);
                let (c, s) = (us[k] / r, -us[a] / r);
                let (pa, pb) = (ps[a], ps[k]);
                ps[a] = c * c * pa + s * s * pb;
                ps[k] = s * s * pa + c * c * pb;
                us[a] = 0.0;
                us[k] = r;
                rotations.push(Rotation { a, b: k, c, s });
                kept.pop();
                deflated.push((a, ps[a]));
            }
        }
        kept.push(k);
    }
    deflated.sort_by_key(|&(pos, _)| pos);
    Deflation {
        poles: kept.iter().map(|&k| ps[k]).collect(),
        weights: kept.iter().map(|&k| us[k]).collect(),
        sort_perm,
        rotations,
        kept,
        deflated,
    }
}

/// A deflated eigenpair of `diag(d) + rho z zᵀ` in the input coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflatedPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Result of [`deflate`].
#[derive(Debug, Clone)]
pub struct DeflateResult {
    /// Sorted position -> input index, for the (sign-adjusted) pole order.
    pub permutation: Vec<usize>,
    /// Reduced problem whose roots complete the spectrum.
    pub problem: SecularProblem,
    pub deflated: Vec<DeflatedPair>,
}

/// Removes decoupled components (`|√|ρ| z_i| ≤ tol`) and near-equal pole
/// pairs (`gap ≤ tol`, merged by a plane rotation) from `diag(d) + ρ z zᵀ`.
///
/// The reduced problem's poles are strictly increasing and its weights
/// nonzero; its roots together with the deflated values form the full
/// spectrum.
pub fn deflate(d: &[f64], z: &[f64], rho: f64, tol: f64) -> crate::Result<DeflateResult> {
    crate::error::check_len(d.len(), z.len())?;
    if rho == 0.0 || !rho.is_finite() {
        return Err(crate::Error::InvalidParameter("rho must be finite and nonzero".into()));
    }
    let sigma = rho.signum();
    let scale = rho.abs().sqrt();
    let p: Vec<f64> = d.iter().map(|&v| sigma * v).collect();
    let u: Vec<f64> = z.iter().map(|&v| scale * v).collect();
    let def = deflate_frame(&p, &u, tol);

    let n = d.len();
    let deflated = def
        .deflated
        .iter()
        .map(|&(pos, val)| {
            let mut y = vec![0.0; n];
            y[pos] = 1.0;
            for rot in def.rotations.iter().rev() {
                rot.apply_transpose(&mut y);
            }
            let mut vector = vec![0.0; n];
            for (k, &i) in def.sort_perm.iter().enumerate() {
                vector[i] = y[k];
            }
            DeflatedPair {
                value: sigma * val,
                vector,
            }
        })
        .collect();

    let mut poles: Vec<f64> = def.poles.iter().map(|&v| sigma * v).collect();
    let mut weights: Vec<f64> = def.weights.iter().map(|&v| v / scale).collect();
    if sigma < 0.0 {
        poles.reverse();
        weights.reverse();
    }
    Ok(DeflateResult {
        permutation: def.sort_perm,
        problem: SecularProblem { poles, z: weights, rho },
        deflated,
    })
}
