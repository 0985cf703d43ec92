//! Divide-and-conquer eigendecomposition of symmetric tridiagonal matrices.
//!
//! The matrix is torn in half by a rank-one correction, both halves are
//! decomposed recursively, and the halves are glued back together by solving
//! a secular equation. The eigenvector matrix is never formed: every merge
//! keeps its orthogonal factor as a Cauchy-like matrix applied through
//! [`fmm1d`](crate::fmm1d), so `U v`, `Uᵀ v` and single columns of `U` cost
//! `O(n log n)` each.

mod deflate;
mod dense;
mod merge;
mod secular;

pub use deflate::{deflate, DeflateResult, DeflatedPair};
pub use secular::{solve_secular, SecularProblem};

use crate::error::{check_eps, check_len, Error, Result};
use crate::par;
use merge::{Merge, MergeOptions};

/// Blocks up to this size are solved densely.
pub const LEAF_SIZE: usize = 32;
/// Merges smaller than this apply their factor by direct summation.
pub const DIRECT_MERGE_SIZE: usize = 64;

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSymmetric {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl TridiagonalSymmetric {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidParameter("matrix must have n >= 1".into()));
        }
        check_len(diag.len() - 1, offdiag.len())?;
        if diag.iter().chain(&offdiag).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("entries must be finite".into()));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// `T x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.offdiag[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.offdiag[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Largest absolute row sum, an upper bound for `‖T‖₂`.
    pub fn norm_bound(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.offdiag[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.offdiag[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Splits at zero off-diagonal entries into unreduced blocks, returned
    /// with their starting row.
    pub fn split_unreduced(&self) -> Vec<(usize, TridiagonalSymmetric)> {
        let mut blocks = Vec::new();
        let mut start = 0;
        for i in 0..=self.offdiag.len() {
            if i == self.offdiag.len() || self.offdiag[i] == 0.0 {
                blocks.push((
                    start,
                    TridiagonalSymmetric {
                        diag: self.diag[start..=i].to_vec(),
                        offdiag: self.offdiag[start..i].to_vec(),
                    },
                ));
                start = i + 1;
            }
        }
        blocks
    }
}

/// Which factor [`apply_eigvec`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `U v`
    Normal,
    /// `Uᵀ v`
    Transpose,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        n: usize,
        /// row-major `n × n`
        u: Vec<f64>,
    },
    Merge {
        split: usize,
        left: Box<Node>,
        right: Box<Node>,
        merge: Merge,
    },
}

struct Built {
    node: Node,
    eigenvalues: Vec<f64>,
    first: Vec<f64>,
    last: Vec<f64>,
}

impl Node {
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Node::Leaf { n, u } => Ok((0..*n)
                .map(|r| u[r * n..(r + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum())
                .collect()),
            Node::Merge {
                split,
                left,
                right,
                merge,
            } => {
                let w = merge.apply(x)?;
                let (a, b) = par::join(|| left.apply(&w[..*split]), || right.apply(&w[*split..]));
                let mut out = a?;
                out.extend(b?);
                Ok(out)
            }
        }
    }

    fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Node::Leaf { n, u } => {
                let mut out = vec![0.0; *n];
                for (r, &xr) in x.iter().enumerate() {
                    for (o, &urc) in out.iter_mut().zip(&u[r * n..(r + 1) * n]) {
                        *o += urc * xr;
                    }
                }
                Ok(out)
            }
            Node::Merge {
                split,
                left,
                right,
                merge,
            } => {
                let (a, b) = par::join(
                    || left.apply_transpose(&x[..*split]),
                    || right.apply_transpose(&x[*split..]),
                );
                let mut w = a?;
                w.extend(b?);
                merge.apply_transpose(&w)
            }
        }
    }
}

fn build(diag: &[f64], off: &[f64], opts: &MergeOptions) -> Result<Built> {
    let n = diag.len();
    if n <= LEAF_SIZE {
        let (eigenvalues, u) = dense::tql2(diag, off);
        return Ok(Built {
            first: u[..n].to_vec(),
            last: u[(n - 1) * n..].to_vec(),
            eigenvalues,
            node: Node::Leaf { n, u },
        });
    }
    let m = n / 2;
    let rho = off[m - 1];
    let mut d1 = diag[..m].to_vec();
    d1[m - 1] -= rho;
    let mut d2 = diag[m..].to_vec();
    d2[0] -= rho;
    let (a, b) = par::join(
        || build(&d1, &off[..m - 1], opts),
        || build(&d2, &off[m..], opts),
    );
    let (a, b) = (a?, b?);
    let out = Merge::build(
        &a.eigenvalues,
        &b.eigenvalues,
        &a.first,
        &a.last,
        &b.first,
        &b.last,
        rho,
        opts,
    )?;
    Ok(Built {
        node: Node::Merge {
            split: m,
            left: Box::new(a.node),
            right: Box::new(b.node),
            merge: out.merge,
        },
        eigenvalues: out.eigenvalues,
        first: out.first_row,
        last: out.last_row,
    })
}

/// Structured eigendecomposition `T = U Λ Uᵀ`.
///
/// Columns of `U` are normalised so that their first entry is positive.
#[derive(Debug, Clone)]
pub struct SpectralTree {
    n: usize,
    eps: f64,
    eigenvalues: Vec<f64>,
    root: Node,
    col_sign: Vec<f64>,
    first_row: Vec<f64>,
    norm: f64,
    min_gap: f64,
}

/// Decomposes an unreduced symmetric tridiagonal matrix to precision `eps`.
pub fn decompose(t: &TridiagonalSymmetric, eps: f64) -> Result<SpectralTree> {
    check_eps(eps)?;
    if let Some(index) = t.offdiag.iter().position(|&c| c == 0.0) {
        return Err(Error::ReducibleMatrix { index });
    }
    let opts = MergeOptions {
        eps: inner_eps(eps),
        break_even: DIRECT_MERGE_SIZE,
    };
    let built = build(&t.diag, &t.offdiag, &opts)?;
    let col_sign: Vec<f64> = built
        .first
        .iter()
        .map(|&v| if v < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let first_row = built.first.iter().map(|v| v.abs()).collect();
    let eigenvalues = built.eigenvalues;
    let norm = eigenvalues
        .first()
        .unwrap()
        .abs()
        .max(eigenvalues.last().unwrap().abs());
    let min_gap = eigenvalues
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    Ok(SpectralTree {
        n: t.n(),
        eps,
        eigenvalues,
        root: built.node,
        col_sign,
        first_row,
        norm,
        min_gap,
    })
}

/// Precision requested from the kernel sums inside a merge. The errors of
/// the individual merges accumulate over the `log n` levels of the tree, so
/// each one is asked for a little more than the caller's target.
fn inner_eps(eps: f64) -> f64 {
    (eps * 1e-2).max(1e-16)
}

impl SpectralTree {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Eigenvalues in ascending order. Ties occur only for eigenvalues that
    /// agree to machine precision.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `max |λ|`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Smallest distance between consecutive eigenvalues (infinite for n = 1).
    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    /// First row of `U`, i.e. `Uᵀ e_0`. Entries are nonnegative; they vanish
    /// only where an eigenvector has decayed below the underflow threshold.
    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    pub fn apply(&self, v: &[f64], side: Side) -> Result<Vec<f64>> {
        check_len(self.n, v.len())?;
        match side {
            Side::Normal => {
                let x: Vec<f64> = v.iter().zip(&self.col_sign).map(|(a, s)| a * s).collect();
                self.root.apply(&x)
            }
            Side::Transpose => {
                let y = self.root.apply_transpose(v)?;
                Ok(y.iter().zip(&self.col_sign).map(|(a, s)| a * s).collect())
            }
        }
    }

    /// Columns `U e_k`, each with its first nonzero entry positive.
    pub fn eigenvectors(&self, indices: &[usize]) -> Result<Vec<Vec<f64>>> {
        if let Some(&k) = indices.iter().find(|&&k| k >= self.n) {
            return Err(Error::InvalidParameter(format!(
                "eigenvector index {k} out of range for n = {}",
                self.n
            )));
        }
        par::map_range(indices.len(), |i| {
            let mut e = vec![0.0; self.n];
            e[indices[i]] = 1.0;
            let mut v = self.apply(&e, Side::Normal)?;
            if v.iter().find(|&&x| x != 0.0).is_some_and(|&x| x < 0.0) {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            Ok(v)
        })
        .into_iter()
        .collect()
    }
}

pub fn eigenvalues(tree: &SpectralTree) -> Vec<f64> {
    tree.eigenvalues.clone()
}

pub fn apply_eigvec(tree: &SpectralTree, v: &[f64], side: Side) -> Result<Vec<f64>> {
    tree.apply(v, side)
}

pub fn extract_eigenvectors(tree: &SpectralTree, indices: &[usize]) -> Result<Vec<Vec<f64>>> {
    tree.eigenvectors(indices)
}

/// Eigenvalues of a possibly reducible matrix: each unreduced block is
/// decomposed on its own and the spectra are merged.
pub fn eigenvalues_reducible(t: &TridiagonalSymmetric, eps: f64) -> Result<Vec<f64>> {
    check_eps(eps)?;
    let mut all = Vec::with_capacity(t.n());
    for (_, block) in t.split_unreduced() {
        all.extend_from_slice(decompose(&block, eps)?.eigenvalues());
    }
    all.sort_by(f64::total_cmp);
    Ok(all)
}

#[cfg(test)]
mod tests;
