//! Slow reference implementations for tests and cross-checks.
//!
//! Nothing here touches the divide-and-conquer solver or the fast kernel
//! sums: eigenpairs come from Sturm bisection and inverse iteration, sums
//! from plain double loops.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bessel::reference_bessel;
use crate::error::{check_len, Error, Result};
use crate::orthopoly::{eval_weighted_direct, jacobi_matrix, RecurrenceFamily};
use crate::trieig::TridiagonalSymmetric;

/// Largest matrix the dense oracle accepts.
pub const DENSE_LIMIT: usize = 4096;

/// Full eigendecomposition: ascending eigenvalues and unit eigenvectors
/// (`vectors[k]` belongs to `eigenvalues[k]`), first nonzero entry positive.
#[derive(Debug, Clone)]
pub struct DenseEigenResult {
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl DenseEigenResult {
    /// `U v`
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.eigenvalues.len();
        let mut out = vec![0.0; n];
        for (col, &vk) in self.vectors.iter().zip(v) {
            for (o, &c) in out.iter_mut().zip(col) {
                *o += c * vk;
            }
        }
        out
    }

    /// `Uᵀ v`
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        self.vectors
            .iter()
            .map(|col| col.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Number of eigenvalues of `T` strictly below `x`.
fn sturm_count(d: &[f64], c: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        q = d[i] - x - c[i - 1] * c[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn bisect_eigenvalue(d: &[f64], c: &[f64], k: usize, lo: f64, hi: f64, pivmin: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            return mid;
        }
        if sturm_count(d, c, mid, pivmin) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// LU factorisation of a shifted tridiagonal with partial pivoting, then
/// solve in place.
fn shifted_solve(d: &[f64], c: &[f64], shift: f64, tiny: f64, b: &mut [f64]) {
    let n = d.len();
    let mut dd: Vec<f64> = d.iter().map(|v| v - shift).collect();
    if n == 1 {
        if dd[0].abs() < tiny {
            dd[0] = tiny;
        }
        b[0] /= dd[0];
        return;
    }
    let mut dl = c.to_vec();
    let mut du = c.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut piv = vec![false; n - 1];
    for i in 0..n - 1 {
        if dd[i].abs() >= dl[i].abs() {
            if dd[i].abs() < tiny {
                dd[i] = tiny;
            }
            let fact = dl[i] / dd[i];
            dl[i] = fact;
            dd[i + 1] -= fact * du[i];
        } else {
            let fact = dd[i] / dl[i];
            dd[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = dd[i + 1];
            dd[i + 1] = temp - fact * dd[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du[i + 1];
            }
            piv[i] = true;
        }
    }
    if dd[n - 1].abs() < tiny {
        dd[n - 1] = tiny;
    }
    for i in 0..n - 1 {
        if piv[i] {
            b.swap(i, i + 1);
        }
        b[i + 1] -= dl[i] * b[i];
    }
    b[n - 1] /= dd[n - 1];
    b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / dd[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / dd[i];
    }
}

fn normalize(v: &mut [f64]) {
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= s);
}

/// Dense eigendecomposition by bisection and inverse iteration.
pub fn dense_decompose(t: &TridiagonalSymmetric) -> Result<DenseEigenResult> {
    let n = t.n();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            size: n,
            limit: DENSE_LIMIT,
        });
    }
    let (d, c) = (t.diag(), t.offdiag());
    let norm = t.norm_bound().max(f64::MIN_POSITIVE);
    let pivmin = f64::MIN_POSITIVE.max(f64::EPSILON * f64::EPSILON * norm * norm);
    let (glo, ghi) = (-norm * (1.0 + 1e-14) - pivmin, norm * (1.0 + 1e-14) + pivmin);
    let eigenvalues: Vec<f64> = crate::par::map_range(n, |k| bisect_eigenvalue(d, c, k, glo, ghi, pivmin));

    let tiny = f64::EPSILON * norm;
    let ortol = 1e-3 * norm;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut cluster_start = 0;
    for k in 0..n {
        if k > 0 && eigenvalues[k] - eigenvalues[k - 1] > ortol {
            cluster_start = k;
        }
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        normalize(&mut v);
        for _ in 0..3 {
            shifted_solve(d, c, eigenvalues[k], tiny, &mut v);
            for prev in &vectors[cluster_start..k] {
                let dot: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(prev).for_each(|(x, p)| *x -= dot * p);
            }
            normalize(&mut v);
        }
        if v.iter().find(|&&x| x != 0.0).is_some_and(|&x| x < 0.0) {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        vectors.push(v);
    }
    Ok(DenseEigenResult {
        eigenvalues,
        vectors,
    })
}

/// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations.
pub fn dense_symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum();
        if off <= 1e-34 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `Σ_j q_j / (t_i - s_j)` by a double loop.
pub fn direct_cauchy(sources: &[f64], charges: &[f64], targets: &[f64]) -> Result<Vec<f64>> {
    check_len(sources.len(), charges.len())?;
    targets
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut acc = 0.0;
            for (j, (&s, &q)) in sources.iter().zip(charges).enumerate() {
                if t == s {
                    return Err(Error::CoincidentPoints {
                        target: i,
                        source_index: j,
                        value: t,
                    });
                }
                acc += q / (t - s);
            }
            Ok(acc)
        })
        .collect()
}

/// Direction of [`direct_transform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Synthesize,
    Analyze,
}

/// Largest size accepted by [`direct_transform`].
pub const TRANSFORM_LIMIT: usize = 2048;

/// Brute-force polynomial transform at the Gauss nodes.
///
/// Synthesis sums `Σ_k β_k q_k(x_j)` directly; analysis solves with the
/// dense eigenvectors, `β = U S⁻¹ α`, with `S` from direct summation.
pub fn direct_transform(
    family: &dyn RecurrenceFamily,
    n: usize,
    vec: &[f64],
    direction: Direction,
) -> Result<Vec<f64>> {
    if n > TRANSFORM_LIMIT {
        return Err(Error::TooLarge {
            size: n,
            limit: TRANSFORM_LIMIT,
        });
    }
    check_len(n, vec.len())?;
    let dense = dense_decompose(&jacobi_matrix(family, n)?)?;
    let q: Vec<Vec<f64>> = dense
        .eigenvalues
        .iter()
        .map(|&x| eval_weighted_direct(family, n, x))
        .collect::<Result<_>>()?;
    match direction {
        Direction::Synthesize => Ok(q
            .iter()
            .map(|row| row.iter().zip(vec).map(|(a, b)| a * b).sum())
            .collect()),
        Direction::Analyze => {
            let scaled: Vec<f64> = q
                .iter()
                .zip(vec)
                .map(|(row, &a)| a / row.iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect();
            Ok(dense.apply(&scaled))
        }
    }
}

/// `k`-th positive zero of `J_ν` (`k ≥ 1`) by bisection on the sign of the
/// reference evaluation, starting from the McMahon estimate.
pub fn bessel_zero_oracle(nu: f64, k: usize) -> Result<f64> {
    if k == 0 || !(nu >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need k >= 1 and nu >= 0, got k = {k}, nu = {nu}"
        )));
    }
    let sign = |x: f64| -> Result<f64> { Ok(reference_bessel(nu, x, 0)?.h) };
    let b = (k as f64 + 0.5 * nu - 0.25) * std::f64::consts::PI;
    let mu = 4.0 * nu * nu;
    let est = b - (mu - 1.0) / (8.0 * b);
    let half = std::f64::consts::FRAC_PI_2;
    let (mut lo, mut hi) = ((est - half).max(1e-3), est + half);
    let (mut flo, fhi) = (sign(lo)?, sign(hi)?);
    if flo * fhi >= 0.0 {
        return Err(Error::NumericalDegeneracy {
            index: k,
            reason: format!("no sign change of J_{nu} in [{lo}, {hi}]"),
        });
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = sign(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthopoly::jacobi_family;

    fn legendre2() -> TridiagonalSymmetric {
        TridiagonalSymmetric::new(vec![0.0, 0.0], vec![1.0 / 3f64.sqrt()]).unwrap()
    }

    #[test]
    fn one_by_one() {
        let r = dense_decompose(&TridiagonalSymmetric::new(vec![7.0], vec![]).unwrap()).unwrap();
        assert_eq!(r.eigenvalues, vec![7.0]);
        assert_eq!(r.vectors, vec![vec![1.0]]);
    }

    #[test]
    fn legendre_two() {
        let r = dense_decompose(&legendre2()).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r.eigenvalues[0] + s).abs() < 1e-15 && (r.eigenvalues[1] - s).abs() < 1e-15);
    }

    #[test]
    fn random_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let n = 64;
        let t = TridiagonalSymmetric::new(
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let r = dense_decompose(&t).unwrap();
        let norm = r.eigenvalues[n - 1].abs().max(r.eigenvalues[0].abs());
        let tol = 50.0 * f64::EPSILON * n as f64;
        for (lam, v) in r.eigenvalues.iter().zip(&r.vectors) {
            let tv = t.matvec(v);
            let res = tv.iter().zip(v).map(|(a, b)| (a - lam * b).abs()).fold(0.0, f64::max);
            assert!(res <= tol * norm);
        }
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = r.vectors[i].iter().zip(&r.vectors[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() <= tol);
            }
        }
    }

    #[test]
    fn size_guard() {
        let n = DENSE_LIMIT + 1;
        let t = TridiagonalSymmetric::new(vec![0.0; n], vec![1.0; n - 1]).unwrap();
        assert!(matches!(dense_decompose(&t), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn cauchy_examples() {
        assert_eq!(direct_cauchy(&[0.5], &[3.0], &[2.0]).unwrap(), vec![2.0]);
        let (q, s) = (1.5, 0.25);
        let v = direct_cauchy(&[s, -s], &[q, -q], &[0.0]).unwrap();
        assert_eq!(v, vec![-2.0 * q / s]);
        assert!(direct_cauchy(&[1.0], &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn transform_examples() {
        let leg = jacobi_family(0.0, 0.0).unwrap();
        let mut e0 = vec![0.0; 4];
        e0[0] = 1.0;
        let a = direct_transform(&leg, 4, &e0, Direction::Synthesize).unwrap();
        for v in a {
            assert!((v - 0.5f64.sqrt()).abs() < 1e-15);
        }
        let z = direct_transform(&leg, 4, &[0.0; 4], Direction::Synthesize).unwrap();
        assert_eq!(z, vec![0.0; 4]);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let beta: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let alpha = direct_transform(&leg, 64, &beta, Direction::Synthesize).unwrap();
        let back = direct_transform(&leg, 64, &alpha, Direction::Analyze).unwrap();
        for (a, b) in back.iter().zip(&beta) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn bessel_zero_examples() {
        let pi = std::f64::consts::PI;
        assert!((bessel_zero_oracle(0.5, 2).unwrap() - 2.0 * pi).abs() < 1e-13);
        assert!((bessel_zero_oracle(0.0, 1).unwrap() - 2.404825557695773).abs() < 1e-13);
        assert!((bessel_zero_oracle(0.0, 2).unwrap() - 5.520078110286311).abs() < 1e-13);
        assert!(bessel_zero_oracle(0.0, 0).is_err());
    }

    #[test]
    fn jacobi_eigenvalues_of_small_matrices() {
        let m = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let ev = dense_symmetric_eigenvalues(&m);
        assert!((ev[0] - 1.0).abs() < 1e-15 && (ev[1] - 3.0).abs() < 1e-15);
    }
}
