//! Orthonormal polynomial families, their Jacobi matrices, Gauss rules, and
//! fast synthesis/analysis of weighted expansions at the Gauss nodes.
//!
//! With `q_k = √w · p_k` and nodes `x_j` the zeros of `p_n`, synthesis is
//! `α_j = Σ_k β_k q_k(x_j)`, i.e. `α = S Uᵀ β`, where `U` holds the
//! normalised eigenvectors of the Jacobi matrix and `S` is diagonal.
//! Analysis is the exact inverse `β = U S⁻¹ α`.

use std::fmt;
use std::sync::Arc;

use libm::{lgamma as ln_gamma, tgamma as gamma};

use crate::error::{check_eps, check_len, Error, Result};
use crate::trieig::{decompose, Side, SpectralTree, TridiagonalSymmetric};

/// A family of orthonormal polynomials given by its three-term recurrence
/// `x p_k = c_{k-1} p_{k-1} + d_k p_k + c_k p_{k+1}` and weight `w`.
pub trait RecurrenceFamily: Send + Sync + fmt::Debug {
    /// `(c_k, d_k)`
    fn coeffs(&self, k: usize) -> (f64, f64);
    fn weight(&self, x: f64) -> f64;
    /// `∫ w` over the support.
    fn weight_integral(&self) -> f64;
    /// `[a, b]`, endpoints possibly infinite.
    fn support(&self) -> (f64, f64);
    fn name(&self) -> String;
    /// `(α, β)` for Jacobi weights `(1-x)^α (1+x)^β`.
    fn jacobi_parameters(&self) -> Option<(f64, f64)> {
        None
    }
}

/// Normalised Jacobi polynomials on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiFamily {
    alpha: f64,
    beta: f64,
    integral: f64,
}

pub fn jacobi_family(alpha: f64, beta: f64) -> Result<JacobiFamily> {
    if !(alpha > -1.0 && beta > -1.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Jacobi parameters must exceed -1, got alpha = {alpha}, beta = {beta}"
        )));
    }
    let s = alpha + beta;
    let integral = if s < 100.0 {
        2f64.powf(s + 1.0) * gamma(alpha + 1.0) * gamma(beta + 1.0) / gamma(s + 2.0)
    } else {
        ((s + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
            - ln_gamma(s + 2.0))
        .exp()
    };
    Ok(JacobiFamily {
        alpha,
        beta,
        integral,
    })
}

/// Legendre polynomials (`α = β = 0`).
pub fn legendre() -> JacobiFamily {
    JacobiFamily {
        alpha: 0.0,
        beta: 0.0,
        integral: 2.0,
    }
}

/// Chebyshev polynomials of the first kind (`α = β = -1/2`).
pub fn chebyshev() -> JacobiFamily {
    JacobiFamily {
        alpha: -0.5,
        beta: -0.5,
        integral: std::f64::consts::PI,
    }
}

impl JacobiFamily {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl RecurrenceFamily for JacobiFamily {
    fn coeffs(&self, k: usize) -> (f64, f64) {
        let (a, b) = (self.alpha, self.beta);
        let s = a + b;
        if k == 0 {
            // removable 0/0 in the general formulas when a + b is 0 or -1
            let c = (4.0 * (a + 1.0) * (b + 1.0) / ((s + 2.0) * (s + 2.0) * (s + 3.0))).sqrt();
            return (c, (b - a) / (s + 2.0));
        }
        let k = k as f64;
        let t = 2.0 * k + s;
        let c = (4.0 * (k + 1.0) * (k + a + 1.0) * (k + b + 1.0) * (k + s + 1.0)
            / ((t + 1.0) * (t + 2.0) * (t + 2.0) * (t + 3.0)))
            .sqrt();
        let d = (b * b - a * a) / (t * (t + 2.0));
        (c, d)
    }

    fn weight(&self, x: f64) -> f64 {
        (1.0 - x).powf(self.alpha) * (1.0 + x).powf(self.beta)
    }

    fn weight_integral(&self) -> f64 {
        self.integral
    }

    fn support(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }

    fn name(&self) -> String {
        match (self.alpha, self.beta) {
            (a, b) if a == 0.0 && b == 0.0 => "legendre".into(),
            (a, b) if a == -0.5 && b == -0.5 => "chebyshev".into(),
            (a, b) => format!("jacobi({a},{b})"),
        }
    }

    fn jacobi_parameters(&self) -> Option<(f64, f64)> {
        Some((self.alpha, self.beta))
    }
}

type CoeffFn = dyn Fn(usize) -> (f64, f64) + Send + Sync;
type WeightFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A family described entirely by caller-supplied data.
#[derive(Clone)]
pub struct CustomFamily {
    name: String,
    coeffs: Arc<CoeffFn>,
    weight: Arc<WeightFn>,
    integral: f64,
    support: (f64, f64),
}

impl fmt::Debug for CustomFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFamily")
            .field("name", &self.name)
            .field("integral", &self.integral)
            .field("support", &self.support)
            .finish()
    }
}

impl CustomFamily {
    pub fn new(
        name: impl Into<String>,
        coeffs: impl Fn(usize) -> (f64, f64) + Send + Sync + 'static,
        weight: impl Fn(f64) -> f64 + Send + Sync + 'static,
        weight_integral: f64,
        support: (f64, f64),
    ) -> Result<Self> {
        if !(weight_integral > 0.0 && weight_integral.is_finite()) {
            return Err(Error::InvalidParameter(
                "weight integral must be positive and finite".into(),
            ));
        }
        if !(support.0 < support.1) {
            return Err(Error::InvalidParameter("support must satisfy a < b".into()));
        }
        Ok(Self {
            name: name.into(),
            coeffs: Arc::new(coeffs),
            weight: Arc::new(weight),
            integral: weight_integral,
            support,
        })
    }
}

impl RecurrenceFamily for CustomFamily {
    fn coeffs(&self, k: usize) -> (f64, f64) {
        (self.coeffs)(k)
    }

    fn weight(&self, x: f64) -> f64 {
        (self.weight)(x)
    }

    fn weight_integral(&self) -> f64 {
        self.integral
    }

    fn support(&self) -> (f64, f64) {
        self.support
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

/// The `n × n` Jacobi matrix of the family.
pub fn jacobi_matrix(family: &dyn RecurrenceFamily, n: usize) -> Result<TridiagonalSymmetric> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n - 1);
    for k in 0..n {
        let (c, d) = family.coeffs(k);
        diag.push(d);
        if k + 1 < n {
            if !(c > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "recurrence coefficient c_{k} = {c} is not positive"
                )));
            }
            off.push(c);
        }
    }
    TridiagonalSymmetric::new(diag, off)
}

fn check_support(family: &dyn RecurrenceFamily, x: f64) -> Result<f64> {
    let (a, b) = family.support();
    if !(x >= a && x <= b) {
        return Err(Error::InvalidParameter(format!(
            "x = {x} lies outside the support [{a}, {b}]"
        )));
    }
    let w = family.weight(x);
    if !(w >= 0.0 && w.is_finite()) {
        return Err(Error::InvalidParameter(format!("weight at {x} is {w}")));
    }
    Ok(w)
}

/// `p_0(x), …, p_n(x)` and their derivatives by the (differentiated)
/// upward recurrence.
pub fn orthonormal_with_derivative(
    family: &dyn RecurrenceFamily,
    n: usize,
    x: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    p[0] = 1.0 / family.weight_integral().sqrt();
    let mut c_prev = 0.0;
    for k in 0..n {
        let (c, d) = family.coeffs(k);
        let (pm, dpm) = if k > 0 { (p[k - 1], dp[k - 1]) } else { (0.0, 0.0) };
        p[k + 1] = ((x - d) * p[k] - c_prev * pm) / c;
        dp[k + 1] = ((x - d) * dp[k] + p[k] - c_prev * dpm) / c;
        c_prev = c;
    }
    (p, dp)
}

/// `q_0(x), …, q_{n-1}(x)` with `q_k = √w p_k`.
pub fn eval_weighted_direct(family: &dyn RecurrenceFamily, n: usize, x: f64) -> Result<Vec<f64>> {
    let w = check_support(family, x)?;
    let sw = w.sqrt();
    let (p, _) = orthonormal_with_derivative(family, n.saturating_sub(1), x);
    Ok(p.into_iter().take(n).map(|v| sw * v).collect())
}

/// `S_kk = √(Σ_{m<n} q_m(x)²)` by direct summation.
pub fn scaling_direct(family: &dyn RecurrenceFamily, n: usize, x: f64) -> Result<f64> {
    Ok(eval_weighted_direct(family, n, x)?
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt())
}

/// `S_kk² = c_{n-1} q_{n-1}(x) q_n'(x)` at a zero `x` of `p_n`.
pub fn scaling_explicit(family: &dyn RecurrenceFamily, n: usize, x: f64) -> Result<f64> {
    let w = check_support(family, x)?;
    let (p, dp) = orthonormal_with_derivative(family, n, x);
    let (c, _) = family.coeffs(n - 1);
    // q_n' = √w p_n' because p_n vanishes at x
    Ok((c * w * p[n - 1] * dp[n]).sqrt())
}

/// `S_kk = √((1 - x²)/(2n + α + β + 1)) |q_n'(x)|` for Jacobi families.
pub fn scaling_jacobi(family: &dyn RecurrenceFamily, n: usize, x: f64) -> Result<f64> {
    let (a, b) = family.jacobi_parameters().ok_or_else(|| {
        Error::InvalidParameter(format!("{} is not a Jacobi family", family.name()))
    })?;
    let w = check_support(family, x)?;
    let (_, dp) = orthonormal_with_derivative(family, n, x);
    let dq = w.sqrt() * dp[n];
    Ok(((1.0 - x * x) / (2.0 * n as f64 + a + b + 1.0)).sqrt() * dq.abs())
}

/// Gauss nodes and Christoffel numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Precomputed data for [`synthesize`] and [`analyze`].
#[derive(Debug, Clone)]
pub struct PolyTransformPlan {
    family: String,
    n: usize,
    eps: f64,
    tree: SpectralTree,
    s: Vec<f64>,
    s_inv: Vec<f64>,
    /// `Uᵀ e`
    first: Vec<f64>,
    weight_integral: f64,
}

impl PolyTransformPlan {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn family_name(&self) -> &str {
        &self.family
    }

    pub fn nodes(&self) -> &[f64] {
        self.tree.eigenvalues()
    }

    /// Diagonal of `S`.
    pub fn scaling(&self) -> &[f64] {
        &self.s
    }

    pub fn tree(&self) -> &SpectralTree {
        &self.tree
    }

    /// Christoffel numbers `w_k = w(x_k) / S_kk²`.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        self.first
            .iter()
            .map(|f| f * f * self.weight_integral)
            .collect()
    }
}

/// Decomposes the Jacobi matrix and evaluates `S` from one application of
/// `Uᵀ` to `e_0`: `S_kk = √(w(x_k)/∫w) / (Uᵀe)_k`.
pub fn build_poly_plan(family: &dyn RecurrenceFamily, n: usize, eps: f64) -> Result<PolyTransformPlan> {
    check_eps(eps)?;
    let t = jacobi_matrix(family, n)?;
    let tree = decompose(&t, eps)?;
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    let first = tree.apply(&e, Side::Transpose)?;
    let integral = family.weight_integral();
    let mut s = Vec::with_capacity(n);
    for (k, (&f, &x)) in first.iter().zip(tree.eigenvalues()).enumerate() {
        if f == 0.0 {
            return Err(Error::NumericalDegeneracy {
                index: k,
                reason: "first component of the eigenvector vanishes".into(),
            });
        }
        s.push((family.weight(x) / integral).sqrt() / f.abs());
    }
    let s_inv = s.iter().map(|v| 1.0 / v).collect();
    Ok(PolyTransformPlan {
        family: family.name(),
        n,
        eps,
        tree,
        s,
        s_inv,
        first: first.iter().map(|v| v.abs()).collect(),
        weight_integral: integral,
    })
}

/// Gauss rule with `n` nodes.
pub fn gauss_rule(family: &dyn RecurrenceFamily, n: usize, eps: f64) -> Result<QuadratureRule> {
    let plan = build_poly_plan(family, n, eps)?;
    Ok(QuadratureRule {
        nodes: plan.nodes().to_vec(),
        weights: plan.quadrature_weights(),
    })
}

/// `α_j = Σ_k β_k q_k(x_j)`.
pub fn synthesize(plan: &PolyTransformPlan, beta: &[f64]) -> Result<Vec<f64>> {
    check_len(plan.n, beta.len())?;
    let ut = plan.tree.apply(beta, Side::Transpose)?;
    Ok(ut.iter().zip(&plan.s).map(|(a, s)| a * s).collect())
}

/// Inverse of [`synthesize`]: `β = U S⁻¹ α`.
pub fn analyze(plan: &PolyTransformPlan, alpha: &[f64]) -> Result<Vec<f64>> {
    check_len(plan.n, alpha.len())?;
    let scaled: Vec<f64> = alpha.iter().zip(&plan.s_inv).map(|(a, s)| a * s).collect();
    plan.tree.apply(&scaled, Side::Normal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{direct_transform, Direction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const S3: f64 = 0.577_350_269_189_625_8;

    #[test]
    fn legendre_and_chebyshev_coefficients() {
        let leg = jacobi_family(0.0, 0.0).unwrap();
        let (c0, d0) = leg.coeffs(0);
        assert!((c0 - 1.0 / 3f64.sqrt()).abs() < 4e-16 && d0 == 0.0);
        let ch = jacobi_family(-0.5, -0.5).unwrap();
        assert!((ch.coeffs(1).0 - 0.5).abs() < 4e-16);
        assert_eq!(ch.coeffs(1).1, 0.0);
        assert!((ch.coeffs(0).0 - 0.5f64.sqrt()).abs() < 4e-16);
        assert!((leg.weight_integral() - 2.0).abs() < 1e-15, "{}", leg.weight_integral());
        assert!((ch.weight_integral() - std::f64::consts::PI).abs() < 1e-14);
        assert!(jacobi_family(-1.0, 0.0).is_err());
        assert!(jacobi_family(0.0, -2.0).is_err());
    }

    #[test]
    fn general_coefficients_match_cancelled_form_nearby() {
        // the k = 0 special case agrees with the general formula where both apply
        let f = jacobi_family(0.7, 1.3).unwrap();
        let (a, b) = (0.7f64, 1.3f64);
        let s = a + b;
        let c0 = (4.0 * (a + 1.0) * (b + 1.0) * (s + 1.0)
            / ((s + 1.0) * (s + 2.0) * (s + 2.0) * (s + 3.0)))
            .sqrt();
        let d0 = (b * b - a * a) / (s * (s + 2.0));
        assert!((f.coeffs(0).0 - c0).abs() < 1e-15);
        assert!((f.coeffs(0).1 - d0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_matrices() {
        let t = jacobi_matrix(&legendre(), 2).unwrap();
        assert_eq!(t.diag(), &[0.0, 0.0]);
        assert!((t.offdiag()[0] - S3).abs() < 4e-16);
        let t = jacobi_matrix(&chebyshev(), 3).unwrap();
        assert_eq!(t.diag(), &[0.0, 0.0, 0.0]);
        assert!((t.offdiag()[0] - 0.5f64.sqrt()).abs() < 4e-16);
        assert!((t.offdiag()[1] - 0.5).abs() < 4e-16);
        let t = jacobi_matrix(&jacobi_family(1.0, 2.0).unwrap(), 1).unwrap();
        assert_eq!(t.n(), 1);
        assert!((t.diag()[0] - 0.2).abs() < 4e-16);
    }

    #[test]
    fn small_gauss_rules() {
        let r = gauss_rule(&legendre(), 2, 1e-12).unwrap();
        assert!((r.nodes[0] + S3).abs() < 1e-15 && (r.nodes[1] - S3).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-14 && (r.weights[1] - 1.0).abs() < 1e-14);
        let r = gauss_rule(&legendre(), 1, 1e-12).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert!((r.weights[0] - 2.0).abs() < 1e-15);
        let r = gauss_rule(&chebyshev(), 4, 1e-12).unwrap();
        let pi = std::f64::consts::PI;
        let mut exact: Vec<f64> = (0..4).map(|j| ((2 * j + 1) as f64 * pi / 8.0).cos()).collect();
        exact.sort_by(f64::total_cmp);
        for k in 0..4 {
            assert!((r.nodes[k] - exact[k]).abs() < 1e-15);
            assert!((r.weights[k] - pi / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn weighted_direct_values() {
        let q = eval_weighted_direct(&legendre(), 2, 0.0).unwrap();
        assert!((q[0] - 0.5f64.sqrt()).abs() < 4e-16 && q[1] == 0.0);
        let f = jacobi_family(2.0, 0.5).unwrap();
        let q = eval_weighted_direct(&f, 1, 0.3).unwrap();
        assert!((q[0] - (f.weight(0.3) / f.weight_integral()).sqrt()).abs() < 1e-15);
        assert!(eval_weighted_direct(&legendre(), 3, 1.5).is_err());
        // Chebyshev: q_0 = 1/√π · w^½, q_k = √(2/π) cos kθ · w^½
        let theta = 0.7f64;
        let x = theta.cos();
        let q = eval_weighted_direct(&chebyshev(), 9, x).unwrap();
        let sw = chebyshev().weight(x).sqrt();
        let pi = std::f64::consts::PI;
        assert!((q[0] - sw / pi.sqrt()).abs() < 1e-14);
        for k in 1..9 {
            let want = sw * (2.0 / pi).sqrt() * (k as f64 * theta).cos();
            assert!((q[k] - want).abs() < 1e-13, "{k}");
        }
    }

    #[test]
    fn plan_scaling_small_cases() {
        let plan = build_poly_plan(&legendre(), 2, 1e-12).unwrap();
        for s in plan.scaling() {
            assert!((s - 1.0).abs() < 1e-14);
        }
        let f = jacobi_family(0.3, 1.7).unwrap();
        let plan = build_poly_plan(&f, 1, 1e-12).unwrap();
        let x0 = plan.nodes()[0];
        assert!((plan.scaling()[0] - (f.weight(x0) / f.weight_integral()).sqrt()).abs() < 1e-15);
        let a = synthesize(&plan, &[2.5]).unwrap();
        assert!((analyze(&plan, &a).unwrap()[0] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn scaling_routes_agree_legendre_256() {
        let fam = legendre();
        let plan = build_poly_plan(&fam, 256, 1e-12).unwrap();
        for (k, &x) in plan.nodes().iter().enumerate() {
            let s = plan.scaling()[k];
            let direct = scaling_direct(&fam, 256, x).unwrap();
            let jac = scaling_jacobi(&fam, 256, x).unwrap();
            let expl = scaling_explicit(&fam, 256, x).unwrap();
            for other in [direct, jac] {
                assert!(((s - other) / other).abs() < 1e-10, "{k}: {s} vs {other}");
            }
            // assumes p_n(x) = 0 exactly, so node rounding is amplified near ±1
            assert!(((s - expl) / expl).abs() < 1e-8, "{k}: {s} vs {expl}");
        }
    }

    #[test]
    fn synthesis_examples() {
        let fam = legendre();
        let plan = build_poly_plan(&fam, 128, 1e-12).unwrap();
        let mut e0 = vec![0.0; 128];
        e0[0] = 1.0;
        let a = synthesize(&plan, &e0).unwrap();
        for v in a {
            assert!((v - 0.5f64.sqrt()).abs() < 1e-12);
        }
        assert_eq!(synthesize(&plan, &vec![0.0; 128]).unwrap(), vec![0.0; 128]);

        let mut rng = ChaCha8Rng::seed_from_u64(128);
        let beta: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = beta.iter().map(|v| v * v).sum::<f64>().sqrt();
        let fast = synthesize(&plan, &beta).unwrap();
        let slow = direct_transform(&fam, 128, &beta, Direction::Synthesize).unwrap();
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-9 * norm);
        }
        let alpha: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fast = analyze(&plan, &alpha).unwrap();
        let slow = direct_transform(&fam, 128, &alpha, Direction::Analyze).unwrap();
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-9);
        }
        let mut e5 = vec![0.0; 128];
        e5[5] = 1.0;
        let back = analyze(&plan, &synthesize(&plan, &e5).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&e5) {
            assert!((a - b).abs() < 1e-11);
        }
        assert!(synthesize(&plan, &[1.0]).is_err());
    }

    #[test]
    fn nodes_interlace_between_orders() {
        let fam = jacobi_family(0.5, -0.3).unwrap();
        for n in [5usize, 40, 97] {
            let a = gauss_rule(&fam, n, 1e-12).unwrap().nodes;
            let b = gauss_rule(&fam, n + 1, 1e-12).unwrap().nodes;
            for k in 0..n {
                assert!(b[k] < a[k] && a[k] < b[k + 1]);
            }
            assert!(a[0] > -1.0 && a[n - 1] < 1.0);
        }
    }

    #[test]
    fn custom_family_reproduces_legendre() {
        let custom = CustomFamily::new(
            "mine",
            |k| legendre().coeffs(k),
            |_| 1.0,
            2.0,
            (-1.0, 1.0),
        )
        .unwrap();
        let a = gauss_rule(&custom, 30, 1e-12).unwrap();
        let b = gauss_rule(&legendre(), 30, 1e-12).unwrap();
        assert_eq!(a, b);
        assert!(CustomFamily::new("bad", |_| (1.0, 0.0), |_| 1.0, 0.0, (0.0, 1.0)).is_err());
    }
}
