use super::*;
use crate::oracle::dense_decompose;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const S3: f64 = 0.577_350_269_189_625_8;

fn random_matrix(n: usize, seed: u64) -> TridiagonalSymmetric {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let c = (0..n - 1)
        .map(|_| {
            let v: f64 = rng.gen_range(0.05..1.0);
            if rng.gen() { v } else { -v }
        })
        .collect();
    TridiagonalSymmetric::new(d, c).unwrap()
}

fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Dense oracle with its columns flipped to match the tree's.
fn aligned_dense(t: &TridiagonalSymmetric, tree: &SpectralTree) -> crate::oracle::DenseEigenResult {
    let mut dense = dense_decompose(t).unwrap();
    let n = t.n();
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        let col = tree.apply(&e, Side::Normal).unwrap();
        let dot: f64 = col.iter().zip(&dense.vectors[k]).map(|(a, b)| a * b).sum();
        if dot < 0.0 {
            dense.vectors[k].iter_mut().for_each(|x| *x = -*x);
        }
    }
    dense
}

fn tol_unitary(eps: f64, n: usize) -> f64 {
    10.0 * eps * n as f64
}

#[test]
fn two_by_two_legendre() {
    let t = TridiagonalSymmetric::new(vec![0.0, 0.0], vec![S3]).unwrap();
    let tree = decompose(&t, 1e-12).unwrap();
    let ev = eigenvalues(&tree);
    assert!((ev[0] + S3).abs() < 1e-15 && (ev[1] - S3).abs() < 1e-15);
    let u = extract_eigenvectors(&tree, &[1]).unwrap();
    let h = 0.5f64.sqrt();
    assert!((u[0][0] - h).abs() < 1e-15 && (u[0][1] - h).abs() < 1e-15);
}

#[test]
fn one_by_one() {
    let t = TridiagonalSymmetric::new(vec![5.0], vec![]).unwrap();
    let tree = decompose(&t, 1e-12).unwrap();
    assert_eq!(tree.eigenvalues(), &[5.0]);
    assert_eq!(tree.eigenvectors(&[0]).unwrap(), vec![vec![1.0]]);
    assert_eq!(tree.apply(&[3.0], Side::Transpose).unwrap(), vec![3.0]);
    assert!(tree.min_gap().is_infinite());
}

#[test]
fn reducible_path() {
    let t = TridiagonalSymmetric::new(vec![3.0, 1.0, 2.0], vec![0.0, 0.0]).unwrap();
    assert_eq!(
        decompose(&t, 1e-12).unwrap_err(),
        Error::ReducibleMatrix { index: 0 }
    );
    assert_eq!(eigenvalues_reducible(&t, 1e-12).unwrap(), vec![1.0, 2.0, 3.0]);
    let blocks = t.split_unreduced();
    assert_eq!(blocks.len(), 3);
    assert_eq!(blocks[2].0, 2);
}

#[test]
fn parameter_errors() {
    assert!(TridiagonalSymmetric::new(vec![], vec![]).is_err());
    assert!(TridiagonalSymmetric::new(vec![1.0, 2.0], vec![]).is_err());
    assert!(TridiagonalSymmetric::new(vec![1.0, f64::NAN], vec![1.0]).is_err());
    let t = random_matrix(40, 1);
    assert!(decompose(&t, 0.0).is_err());
    assert!(decompose(&t, 0.5).is_err());
    let tree = decompose(&t, 1e-10).unwrap();
    assert_eq!(
        tree.apply(&[1.0; 39], Side::Normal).unwrap_err(),
        Error::LengthMismatch { expected: 40, got: 39 }
    );
    assert!(tree.eigenvectors(&[40]).is_err());
}

#[test]
fn zero_vector_maps_to_zero() {
    let tree = decompose(&random_matrix(300, 2), 1e-12).unwrap();
    let z = vec![0.0; 300];
    assert_eq!(tree.apply(&z, Side::Normal).unwrap(), z);
    assert_eq!(tree.apply(&z, Side::Transpose).unwrap(), z);
}

#[test]
fn random_256_against_dense() {
    let t = random_matrix(256, 3);
    let tree = decompose(&t, 1e-12).unwrap();
    let dense = aligned_dense(&t, &tree);
    let scale = t.norm_bound();
    assert!(max_dev(tree.eigenvalues(), &dense.eigenvalues) <= 1e-12 * scale);
    for seed in 0..3 {
        let v = random_vec(256, 100 + seed);
        let a = tree.apply(&v, Side::Normal).unwrap();
        let b = dense.apply(&v);
        assert!(norm(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>()) <= 1e-10 * norm(&v));
        let a = tree.apply(&v, Side::Transpose).unwrap();
        let b = dense.apply_transpose(&v);
        assert!(norm(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>()) <= 1e-10 * norm(&v));
    }
    let all: Vec<usize> = (0..256).collect();
    let cols = tree.eigenvectors(&all).unwrap();
    let mut worst = 0.0f64;
    for (k, col) in cols.iter().enumerate() {
        // leading entries can be far below rounding level, so signs are
        // matched by overlap rather than by the first nonzero entry
        let dot: f64 = col.iter().zip(&dense.vectors[k]).map(|(a, b)| a * b).sum();
        let want: Vec<f64> = dense.vectors[k].iter().map(|x| x * dot.signum()).collect();
        worst = worst.max(max_dev(col, &want));
    }
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn residual_trace_and_unitarity() {
    for (n, eps, seed) in [(100, 1e-8, 4), (700, 1e-12, 5), (2000, 1e-10, 6)] {
        let t = random_matrix(n, seed);
        let tree = decompose(&t, eps).unwrap();
        let tn = tree.norm();
        let trace: f64 = t.diag().iter().sum();
        let sum: f64 = tree.eigenvalues().iter().sum();
        assert!((trace - sum).abs() <= 100.0 * n as f64 * f64::EPSILON * tn);
        for k in [0, n / 3, n - 1] {
            let u = &tree.eigenvectors(&[k]).unwrap()[0];
            let lam = tree.eigenvalues()[k];
            let r: Vec<f64> = t.matvec(u).iter().zip(u).map(|(a, b)| a - lam * b).collect();
            assert!(norm(&r) <= 100.0 * eps * tn, "{n} {k}: {:e}", norm(&r));
            assert!((norm(u) - 1.0).abs() <= 100.0 * eps);
        }
        for s in 0..5 {
            let v = random_vec(n, 1000 + s);
            let w = tree.apply(&tree.apply(&v, Side::Normal).unwrap(), Side::Transpose).unwrap();
            assert!(max_dev(&w, &v) <= tol_unitary(eps, n) * norm(&v));
            let w = tree.apply(&tree.apply(&v, Side::Transpose).unwrap(), Side::Normal).unwrap();
            assert!(max_dev(&w, &v) <= tol_unitary(eps, n) * norm(&v));
        }
    }
}

#[test]
fn near_toeplitz_window() {
    // the two halves have almost identical spectra, so every merge pole
    // has a partner within ~1e-9
    let t = crate::orthopoly::jacobi_matrix(&crate::orthopoly::legendre(), 2000).unwrap();
    for n in [64, 128] {
        let w = TridiagonalSymmetric::new(
            t.diag()[1800..1800 + n].to_vec(),
            t.offdiag()[1800..1800 + n - 1].to_vec(),
        )
        .unwrap();
        let tree = decompose(&w, 1e-13).unwrap();
        let dense = dense_decompose(&w).unwrap();
        assert!(max_dev(tree.eigenvalues(), &dense.eigenvalues) <= 1e-14);
        let all: Vec<usize> = (0..n).collect();
        for (k, u) in tree.eigenvectors(&all).unwrap().iter().enumerate() {
            let lam = tree.eigenvalues()[k];
            let r: Vec<f64> = w.matvec(u).iter().zip(u).map(|(a, b)| a - lam * b).collect();
            assert!(norm(&r) <= 1e-13, "{n} {k}: {:e}", norm(&r));
        }
    }
}

#[test]
fn clustered_spectrum_deflates() {
    // Wilkinson-type matrix: pairs of nearly equal eigenvalues
    let n = 201;
    let m = (n / 2) as f64;
    let d: Vec<f64> = (0..n).map(|i| (i as f64 - m).abs()).collect();
    let t = TridiagonalSymmetric::new(d, vec![1.0; n - 1]).unwrap();
    let tree = decompose(&t, 1e-12).unwrap();
    let dense = dense_decompose(&t).unwrap();
    assert!(max_dev(tree.eigenvalues(), &dense.eigenvalues) <= 1e-12 * t.norm_bound());
    let v = random_vec(n, 9);
    let w = tree.apply(&tree.apply(&v, Side::Normal).unwrap(), Side::Transpose).unwrap();
    assert!(max_dev(&w, &v) <= tol_unitary(1e-12, n) * norm(&v));
}

#[test]
fn first_row_is_positive_and_consistent() {
    let t = random_matrix(500, 7);
    let tree = decompose(&t, 1e-12).unwrap();
    let mut e = vec![0.0; 500];
    e[0] = 1.0;
    let r = tree.apply(&e, Side::Transpose).unwrap();
    assert!(tree.first_row().iter().all(|&v| v >= 0.0));
    assert!(max_dev(&r, tree.first_row()) <= 1e-10);
}

#[test]
fn parallel_and_sequential_agree_bitwise() {
    // the tree shape and merge order are fixed, so thread count cannot matter
    let t = random_matrix(3000, 8);
    let v = random_vec(3000, 10);
    let one = rayon_single(|| {
        let tree = decompose(&t, 1e-10).unwrap();
        (tree.eigenvalues().to_vec(), tree.apply(&v, Side::Normal).unwrap())
    });
    let tree = decompose(&t, 1e-10).unwrap();
    assert_eq!(one.0, tree.eigenvalues());
    assert_eq!(one.1, tree.apply(&v, Side::Normal).unwrap());
}

#[cfg(feature = "parallel")]
fn rayon_single<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(f)
}

#[cfg(not(feature = "parallel"))]
fn rayon_single<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    f()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigenvalues_match_dense(
        n in 2usize..180,
        seed in any::<u64>(),
    ) {
        let t = random_matrix(n, seed);
        let tree = decompose(&t, 1e-12).unwrap();
        let dense = dense_decompose(&t).unwrap();
        prop_assert!(tree.eigenvalues().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(max_dev(tree.eigenvalues(), &dense.eigenvalues) <= 1e-12 * t.norm_bound());
    }

    #[test]
    fn apply_round_trips(
        n in 2usize..400,
        seed in any::<u64>(),
        eps in prop::sample::select(vec![1e-6, 1e-10, 1e-13]),
    ) {
        let t = random_matrix(n, seed);
        let tree = decompose(&t, eps).unwrap();
        let v = random_vec(n, seed ^ 0x55);
        let w = tree.apply(&tree.apply(&v, Side::Normal).unwrap(), Side::Transpose).unwrap();
        prop_assert!(max_dev(&w, &v) <= tol_unitary(eps, n) * norm(&v));
    }

    #[test]
    fn apply_is_norm_preserving(
        n in 2usize..300,
        seed in any::<u64>(),
    ) {
        let t = random_matrix(n, seed);
        let tree = decompose(&t, 1e-12).unwrap();
        let v = random_vec(n, seed.wrapping_add(1));
        let w = tree.apply(&v, Side::Normal).unwrap();
        prop_assert!((norm(&w) - norm(&v)).abs() <= 1e-10 * norm(&v));
    }
}
