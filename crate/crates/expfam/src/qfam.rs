//! q-exponential families for |q| < 1: the q-derivative, the infinite
//! product weight, and the Al-Salam–Chihara orthogonality system whose
//! Jacobi matrix carries the moments of the underlying measure μ.
//!
//! For quadratic `V(m) = 1 + am + bm²` with `b > -1 + max{q, 0}` the weight
//! is the convergent product
//! `w(m,u) = Π_k (1 + a m q^k + b m² q^{2k}) / (1 + (a-(1-q)u) m q^k + (b+1-q) m² q^{2k})`
//! and satisfies `D_{q,m} w = w (u-m)/V(m)`. The measure μ is certified
//! through its moments only; no closed density is constructed for q ≠ 0.

use num_traits::{One, Zero};

use crate::series::{rat_from_f64, rat_to_f64, Rat};
use crate::specfun::{q_factorial, q_int};
use crate::{Error, Result};

/// Parameters of a q-exponential family with `V(m) = 1 + am + bm²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QExpParams {
    pub q: f64,
    pub a: f64,
    pub b: f64,
}

impl QExpParams {
    /// Validates `|q| < 1` and the positivity hypothesis
    /// `b > -1 + max{q, 0}` that keeps every recurrence coefficient β_n
    /// positive.
    pub fn new(q: f64, a: f64, b: f64) -> Result<Self> {
        if !(q.abs() < 1.0) {
            return Err(Error::InvariantViolation(format!(
                "need |q| < 1, got q = {q}"
            )));
        }
        if !(b > -1.0 + q.max(0.0)) {
            return Err(Error::InvariantViolation(format!(
                "need b > -1 + max(q, 0) = {}, got b = {b}",
                -1.0 + q.max(0.0)
            )));
        }
        Ok(QExpParams { q, a, b })
    }

    /// `V(m) = 1 + am + bm²`.
    pub fn variance_fn(&self, m: f64) -> f64 {
        1.0 + self.a * m + self.b * m * m
    }
}

/// The q-difference quotient `(f(x) - f(qx)) / (x - qx)`.
pub fn q_derivative<F: Fn(f64) -> f64>(f: F, q: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Err(Error::Domain("q_derivative is undefined at x = 0".into()));
    }
    Ok((f(x) - f(q * x)) / (x - q * x))
}

/// The weight `w(m, u)` as the truncated infinite product, relative
/// truncation error below 1e-14.
///
/// Errors when a denominator factor is nonpositive, i.e. when `m` lies
/// outside the admissible mean interval for this `u`.
pub fn q_weight(params: &QExpParams, m: f64, u: f64) -> Result<f64> {
    let QExpParams { q, a, b } = *params;
    if m == 0.0 {
        return Ok(1.0);
    }
    let a_shift = a - (1.0 - q) * u;
    let b_shift = b + 1.0 - q;
    let mut w = 1.0f64;
    let mut t = m; // m q^k
    for _ in 0..100_000 {
        let num = 1.0 + a * t + b * t * t;
        let den = 1.0 + a_shift * t + b_shift * t * t;
        if den <= 0.0 {
            return Err(Error::Domain(format!(
                "q_weight denominator factor {den} <= 0 at m = {m}, u = {u}"
            )));
        }
        w *= num / den;
        t *= q;
        // once both correction terms are below machine scale the remaining
        // factors multiply to 1 within the 1e-14 contract
        if t.abs() * (a.abs() + a_shift.abs()) + t * t * (b.abs() + b_shift.abs()) < 1e-17 {
            return Ok(w);
        }
    }
    Err(Error::NonConvergence(
        "q_weight product did not settle within 1e5 factors".into(),
    ))
}

/// Monic three-term recurrence system
/// `p_{n+1}(u) = (u - α_n) p_n(u) - β_n p_{n-1}(u)` for the Al-Salam–Chihara
/// polynomials of a q-exponential family: `α_n = a[n]_q`,
/// `β_n = (1 + b[n-1]_q)[n]_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoPolySystem {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Dilation scale `√(b+1-q)/√(1-q)` of the classical standardization.
    pub scale: f64,
    /// Shift `a/(1-q)` of the classical standardization.
    pub shift: f64,
    /// `ã = -a/(√(1-q)√(b+1-q))`.
    pub a_tilde: f64,
    /// `b̃ = b/(b+1-q)`.
    pub b_tilde: f64,
}

impl OrthoPolySystem {
    /// Number of materialized recurrence rows.
    pub fn depth(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self, n: usize) -> Result<f64> {
        self.alpha.get(n).copied().ok_or(Error::InsufficientDepth {
            need: n + 1,
            have: self.alpha.len(),
        })
    }

    pub fn beta(&self, n: usize) -> Result<f64> {
        self.beta.get(n).copied().ok_or(Error::InsufficientDepth {
            need: n + 1,
            have: self.beta.len(),
        })
    }

    /// Value of the monic polynomial `p_n(u)`.
    pub fn eval_monic(&self, n: usize, u: f64) -> Result<f64> {
        if n > self.alpha.len() {
            return Err(Error::InsufficientDepth {
                need: n,
                have: self.alpha.len(),
            });
        }
        let mut prev = 0.0; // p_{-1}
        let mut cur = 1.0; // p_0
        for k in 0..n {
            let next =
                (u - self.alpha[k]) * cur - if k == 0 { 0.0 } else { self.beta[k] * prev };
            prev = cur;
            cur = next;
        }
        Ok(cur)
    }
}

/// Builds the Al-Salam–Chihara system to `n_rows` recurrence rows.
pub fn asc_system(params: &QExpParams, n_rows: usize) -> Result<OrthoPolySystem> {
    let QExpParams { q, a, b } = *params;
    let mut alpha = Vec::with_capacity(n_rows);
    let mut beta = Vec::with_capacity(n_rows);
    for n in 0..n_rows {
        let qn = q_int(n, q);
        alpha.push(a * qn);
        let qn_minus = if n == 0 { 0.0 } else { q_int(n - 1, q) };
        beta.push((1.0 + b * qn_minus) * qn);
    }
    for (n, &bn) in beta.iter().enumerate().skip(1) {
        if bn <= 0.0 {
            return Err(Error::InvariantViolation(format!(
                "Favard positivity fails: β_{n} = {bn} <= 0"
            )));
        }
    }
    let root = (b + 1.0 - q).sqrt();
    Ok(OrthoPolySystem {
        alpha,
        beta,
        scale: root / (1.0 - q).sqrt(),
        shift: a / (1.0 - q),
        a_tilde: -a / ((1.0 - q).sqrt() * root),
        b_tilde: b / (b + 1.0 - q),
    })
}

/// n-th moment of the orthogonality measure μ via the truncated Jacobi
/// matrix: the `p_0`-coefficient of `x^n · p_0` expanded in the monic basis.
///
/// Needs at least `⌈n/2⌉ + 1` rows: paths that climb past that row cannot
/// return to row 0 within the remaining steps.
pub fn moments_from_jacobi(sys: &OrthoPolySystem, n: usize) -> Result<f64> {
    let need = n / 2 + 1;
    if sys.depth() < need {
        return Err(Error::InsufficientDepth {
            need,
            have: sys.depth(),
        });
    }
    let d = sys.depth();
    let mut c = vec![0.0f64; d + 1];
    c[0] = 1.0;
    for _ in 0..n {
        let mut next = vec![0.0f64; d + 1];
        for j in 0..=d {
            let cj = c[j];
            if cj == 0.0 {
                continue;
            }
            // x p_j = p_{j+1} + α_j p_j + β_j p_{j-1}
            if j + 1 <= d {
                next[j + 1] += cj;
            }
            if j < d {
                next[j] += sys.alpha[j] * cj;
            }
            if j >= 1 {
                if let Some(&bj) = sys.beta.get(j) {
                    next[j - 1] += bj * cj;
                }
            }
        }
        c = next;
    }
    Ok(c[0])
}

/// Truncation residual `|w(m,u) - Σ_{n≤N} m^n p_n(u)/[n]_q!|` of the
/// generating-function identity; decays like `|m|^{N+1}` inside the series
/// radius.
pub fn generating_check(params: &QExpParams, m: f64, u: f64, n_terms: usize) -> Result<f64> {
    let sys = asc_system(params, n_terms + 1)?;
    let w = q_weight(params, m, u)?;
    let mut sum = 0.0;
    for n in 0..=n_terms {
        sum += m.powi(n as i32) * sys.eval_monic(n, u)? / q_factorial(n, params.q);
    }
    Ok((w - sum).abs())
}

/// Support interval of the absolutely continuous part of μ:
/// `a/(1-q) ± 2√(b+1-q)/(1-q)`.
pub fn support_interval(params: &QExpParams) -> Result<(f64, f64)> {
    let QExpParams { q, a, b } = *params;
    let disc = b + 1.0 - q;
    if disc <= 0.0 {
        return Err(Error::InvariantViolation(format!(
            "support needs b + 1 - q > 0, got {disc}"
        )));
    }
    let center = a / (1.0 - q);
    let radius = 2.0 * disc.sqrt() / (1.0 - q);
    Ok((center - radius, center + radius))
}

// ---------------------------------------------------------------------------
// exact-rational route: recurrence, moments, and series moments of w·μ
// ---------------------------------------------------------------------------

/// Exact `[n]_q` for rational q.
fn q_int_exact(n: usize, q: &Rat) -> Rat {
    let mut acc = Rat::zero();
    let mut pow = Rat::one();
    for _ in 0..n {
        acc += pow.clone();
        pow *= q.clone();
    }
    acc
}

/// Exact recurrence coefficients (α_n, β_n) for n < n_rows.
pub(crate) fn asc_exact(q: &Rat, a: &Rat, b: &Rat, n_rows: usize) -> (Vec<Rat>, Vec<Rat>) {
    let mut alpha = Vec::with_capacity(n_rows);
    let mut beta = Vec::with_capacity(n_rows);
    for n in 0..n_rows {
        let qn = q_int_exact(n, q);
        alpha.push(a * &qn);
        let qm = if n == 0 {
            Rat::zero()
        } else {
            q_int_exact(n - 1, q)
        };
        beta.push((Rat::one() + b * &qm) * qn);
    }
    (alpha, beta)
}

/// Exact moments μ_0..μ_{n_max} of the orthogonality measure.
pub(crate) fn moments_exact(alpha: &[Rat], beta: &[Rat], n_max: usize) -> Vec<Rat> {
    let d = alpha.len();
    let mut out = Vec::with_capacity(n_max + 1);
    let mut c = vec![Rat::zero(); d + 1];
    c[0] = Rat::one();
    out.push(Rat::one());
    for _ in 1..=n_max {
        let mut next = vec![Rat::zero(); d + 1];
        for j in 0..=d {
            if c[j].is_zero() {
                continue;
            }
            if j + 1 <= d {
                let add = c[j].clone();
                next[j + 1] += add;
            }
            if j < d {
                next[j] += &c[j] * &alpha[j];
            }
            if j >= 1 {
                if let Some(bj) = beta.get(j) {
                    next[j - 1] += &c[j] * bj;
                }
            }
        }
        c = next;
        out.push(c[0].clone());
    }
    out
}

/// Exact ascending coefficients of the monic p_0..p_{n_max}.
pub(crate) fn monic_coeffs_exact(alpha: &[Rat], beta: &[Rat], n_max: usize) -> Vec<Vec<Rat>> {
    let mut polys: Vec<Vec<Rat>> = Vec::with_capacity(n_max + 1);
    polys.push(vec![Rat::one()]);
    if n_max >= 1 {
        polys.push(vec![-alpha[0].clone(), Rat::one()]);
    }
    for n in 1..n_max {
        let mut next = vec![Rat::zero(); n + 2];
        // (u - α_n) p_n
        for (i, cz) in polys[n].iter().enumerate() {
            next[i + 1] += cz;
            next[i] -= &alpha[n] * cz;
        }
        // - β_n p_{n-1}
        for (i, cz) in polys[n - 1].iter().enumerate() {
            next[i] -= &beta[n] * cz;
        }
        polys.push(next);
    }
    polys
}

/// `(mass, mean, variance)` of `w(m, u) μ(du)` through the series
/// `Σ_n m^n/[n]_q! ∫ u^j p_n(u) μ(du)` in exact rational arithmetic, for
/// |m| inside the series radius. The f64 inputs convert losslessly.
pub fn weight_moments_series(
    params: &QExpParams,
    m: f64,
    n_terms: usize,
) -> Result<(f64, f64, f64)> {
    let q = rat_from_f64(params.q)?;
    let a = rat_from_f64(params.a)?;
    let b = rat_from_f64(params.b)?;
    let mr = rat_from_f64(m)?;
    let rows = n_terms + 3;
    let (alpha, beta) = asc_exact(&q, &a, &b, rows);
    let moments = moments_exact(&alpha, &beta, n_terms + 2);
    let polys = monic_coeffs_exact(&alpha, &beta, n_terms);
    let mut raw = [Rat::zero(), Rat::zero(), Rat::zero()];
    let mut qfact = Rat::one();
    let mut mpow = Rat::one();
    let mut last_scale = [0.0f64; 3];
    for (n, poly) in polys.iter().enumerate() {
        if n > 0 {
            qfact *= q_int_exact(n, &q);
            mpow *= mr.clone();
        }
        for (j, slot) in raw.iter_mut().enumerate() {
            // ∫ u^{j} p_n dμ = Σ_i coeff_i μ_{i+j}
            let mut inner = Rat::zero();
            for (i, cz) in poly.iter().enumerate() {
                inner += cz * &moments[i + j];
            }
            let term = &mpow * inner / &qfact;
            last_scale[j] = rat_to_f64(&term).abs();
            *slot += term;
        }
    }
    if last_scale.iter().any(|&t| t > 1e-14) {
        return Err(Error::NonConvergence(format!(
            "weight-moment series still moving at order {n_terms} (last term {:.3e}); |m| too large",
            last_scale.iter().fold(0.0f64, |acc, &x| acc.max(x))
        )));
    }
    let mass = rat_to_f64(&raw[0]);
    let m1 = rat_to_f64(&raw[1]);
    let m2 = rat_to_f64(&raw[2]);
    let mean = m1 / mass;
    Ok((mass, mean, m2 / mass - mean * mean))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() < tol,
            "actual {actual:e} vs expected {expected:e} (tol {tol:e})"
        );
    }

    #[test]
    fn q_derivative_of_constant_vanishes() {
        assert_eq!(q_derivative(|_| 4.2, 0.5, 1.3).unwrap(), 0.0);
    }

    #[test]
    fn q_derivative_of_power_is_q_integer() {
        // x³: (x³-q³x³)/(x-qx) = (1+q+q²) x²
        let (q, x) = (0.5, 2.0);
        let expected = q_int(3, q) * x * x;
        assert_close(
            q_derivative(|t: f64| t * t * t, q, x).unwrap(),
            expected,
            1e-12,
        );
    }

    #[test]
    fn q_derivative_tends_to_derivative() {
        let d = q_derivative(|t: f64| t.sin(), 0.999, 1.0).unwrap();
        assert_close(d, (1.0f64).cos(), 1e-3);
    }

    #[test]
    fn q_derivative_rejects_zero() {
        assert!(q_derivative(|t| t, 0.5, 0.0).is_err());
    }

    #[test]
    fn q_weight_is_one_at_mean_zero() {
        let p = QExpParams::new(0.5, 0.2, 0.1).unwrap();
        assert_eq!(q_weight(&p, 0.0, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn q_weight_at_q_zero_is_single_factor() {
        let p = QExpParams::new(0.0, 0.3, 0.2).unwrap();
        let (m, u) = (0.2, 0.7);
        let expected =
            (1.0 + p.a * m + p.b * m * m) / (1.0 + (p.a - u) * m + (p.b + 1.0) * m * m);
        assert_close(q_weight(&p, m, u).unwrap(), expected, 1e-16);
    }

    #[test]
    fn q_weight_satisfies_q_difference_equation() {
        // D_{q,m} w = w(m,u)(u-m)/V(m)
        let p = QExpParams::new(0.5, 0.2, 0.1).unwrap();
        let (m, u) = (0.3, 1.0);
        let w = q_weight(&p, m, u).unwrap();
        let dq = q_derivative(|t| q_weight(&p, t, u).unwrap(), p.q, m).unwrap();
        let residual = (dq - w * (u - m) / p.variance_fn(m)).abs();
        assert!(residual < 1e-10 * (1.0 + w.abs()), "residual {residual}");
        // and across a small parameter grid
        for &(q, a, b) in &[(-0.4, 0.5, 0.3), (0.3, -0.2, 0.4), (0.7, 1.0, -0.2)] {
            let p = QExpParams::new(q, a, b).unwrap();
            for &(m, u) in &[(0.1, 0.5), (-0.05, 1.2), (0.2, -0.7)] {
                let w = q_weight(&p, m, u).unwrap();
                let dq = q_derivative(|t| q_weight(&p, t, u).unwrap(), p.q, m).unwrap();
                let residual = (dq - w * (u - m) / p.variance_fn(m)).abs();
                assert!(
                    residual < 1e-10 * (1.0 + w.abs()),
                    "residual {residual} at ({q},{a},{b})"
                );
            }
        }
    }

    #[test]
    fn q_weight_domain_error_outside_admissible_means() {
        let p = QExpParams::new(0.5, 0.0, 0.0).unwrap();
        // huge u at fixed m makes the k=0 denominator negative
        assert!(matches!(q_weight(&p, 0.5, 50.0), Err(Error::Domain(_))));
    }

    #[test]
    fn asc_low_order_polynomials() {
        let p = QExpParams::new(0.5, 0.7, 0.1).unwrap();
        let sys = asc_system(&p, 8).unwrap();
        // p_1(u) = u ([0]_q = 0 kills both lower terms)
        assert_eq!(sys.eval_monic(1, 1.3).unwrap(), 1.3);
        // p_2(u) = u² - a u - 1
        let u = 0.9;
        assert_close(sys.eval_monic(2, u).unwrap(), u * u - p.a * u - 1.0, 1e-14);
    }

    #[test]
    fn asc_beta_positive() {
        let p = QExpParams::new(0.7, 1.0, -0.2).unwrap();
        let sys = asc_system(&p, 51).unwrap();
        for n in 1..=50 {
            assert!(sys.beta(n).unwrap() > 0.0, "β_{n} not positive");
        }
    }

    #[test]
    fn params_invariant_enforced() {
        assert!(QExpParams::new(0.5, 0.0, -0.6).is_err());
        assert!(QExpParams::new(1.0, 0.0, 0.0).is_err());
        // q < 0 relaxes the bound to b > -1
        assert!(QExpParams::new(-0.5, 0.0, -0.8).is_ok());
    }

    #[test]
    fn jacobi_moments_low_orders() {
        let p = QExpParams::new(0.5, 0.4, 0.2).unwrap();
        let sys = asc_system(&p, 12).unwrap();
        assert_eq!(moments_from_jacobi(&sys, 0).unwrap(), 1.0);
        assert_eq!(moments_from_jacobi(&sys, 1).unwrap(), 0.0);
        assert_close(moments_from_jacobi(&sys, 2).unwrap(), 1.0, 1e-15);
        // insufficient depth is reported
        let shallow = asc_system(&p, 3).unwrap();
        assert!(matches!(
            moments_from_jacobi(&shallow, 8),
            Err(Error::InsufficientDepth { .. })
        ));
    }

    #[test]
    fn orthogonality_of_monic_polynomials_is_exact() {
        // ∫ p_n dμ = 0 for 1 ≤ n ≤ 8 in exact rational arithmetic
        let q = crate::series::rat(1, 2);
        let a = crate::series::rat(2, 5);
        let b = crate::series::rat(1, 5);
        let (alpha, beta) = asc_exact(&q, &a, &b, 12);
        let moments = moments_exact(&alpha, &beta, 10);
        let polys = monic_coeffs_exact(&alpha, &beta, 8);
        for (n, poly) in polys.iter().enumerate().skip(1) {
            let mut acc = Rat::zero();
            for (i, c) in poly.iter().enumerate() {
                acc += c * &moments[i];
            }
            assert!(acc.is_zero(), "∫p_{n} dμ = {acc} ≠ 0");
        }
    }

    #[test]
    fn generating_check_residual_scales() {
        let p = QExpParams::new(0.5, 0.0, 0.0).unwrap();
        assert_eq!(generating_check(&p, 0.0, 1.0, 6).unwrap(), 0.0);
        let r = generating_check(&p, 0.1, 1.0, 12).unwrap();
        assert!(r < 1e-10, "residual {r}");
        // order of convergence: halving m should shrink the residual ~2^{N+1}
        let n = 8;
        let r1 = generating_check(&p, 0.2, 1.0, n).unwrap();
        let r2 = generating_check(&p, 0.1, 1.0, n).unwrap();
        let order = (r1 / r2).log2();
        assert!(
            order > (n as f64) * 0.9,
            "measured order {order} below expectation for N = {n}"
        );
    }

    #[test]
    fn support_interval_examples() {
        let semicircle = QExpParams::new(0.0, 0.0, 0.0).unwrap();
        assert_eq!(support_interval(&semicircle).unwrap(), (-2.0, 2.0));
        let p = QExpParams::new(0.5, 0.0, 0.0).unwrap();
        let (lo, hi) = support_interval(&p).unwrap();
        let expect = 2.0 * (0.5f64).sqrt() / 0.5;
        assert_close(lo, -expect, 1e-15);
        assert_close(hi, expect, 1e-15);
    }

    #[test]
    fn standardized_parameters_exposed() {
        let p = QExpParams::new(0.5, 0.3, 0.1).unwrap();
        let sys = asc_system(&p, 4).unwrap();
        let root = (p.b + 1.0 - p.q).sqrt();
        assert_close(sys.scale, root / (0.5f64).sqrt(), 1e-15);
        assert_close(sys.shift, p.a / 0.5, 1e-15);
        assert_close(sys.a_tilde, -p.a / ((0.5f64).sqrt() * root), 1e-15);
        assert_close(sys.b_tilde, p.b / (p.b + 1.0 - p.q), 1e-15);
    }

    #[test]
    fn weight_moments_match_family_contract() {
        let p = QExpParams::new(0.5, 0.2, 0.1).unwrap();
        let m = 0.1;
        let (mass, mean, var) = weight_moments_series(&p, m, 40).unwrap();
        assert_close(mass, 1.0, 1e-12);
        assert_close(mean, m, 1e-12);
        assert_close(var, p.variance_fn(m), 1e-11);
    }
}
