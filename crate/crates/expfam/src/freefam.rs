//! Free exponential families (q = 0): free-Meixner laws, the
//! Cauchy–Stieltjes transform and its inverse relation to the variance
//! function, free cumulants, and free convolution powers.
//!
//! The family with quadratic `V(m) = 1 + am + bm²`, `b > -1`, is generated
//! by the free-Meixner measure: a semicircle-over-quadratic density on
//! `(a - 2√(1+b), a + 2√(1+b))` plus at most two atoms sitting at the zeros
//! of `bu² + au + 1` outside the continuum. The member at mean m reweights
//! μ by `V(m)/(V(m) + m(m-u))`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::classical::{VarianceKind, VarianceSpec};
use crate::measure::{FamilyMember, Measure};
use crate::series::{rat_from_f64, rat_to_f64, Rat};
use crate::specfun::gl_integrate;
use crate::{Error, Result};

/// A free-Meixner law: absolutely continuous part on
/// `(a - 2√(1+b), a + 2√(1+b))` plus up to two atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeMeixnerLaw {
    pub a: f64,
    pub b: f64,
    /// Endpoints of the absolutely continuous support.
    pub ac_support: (f64, f64),
    /// Atoms `(location, mass)`, masses clamped at 0 and carrying locations
    /// strictly outside the open continuum.
    pub atoms: Vec<(f64, f64)>,
}

impl FreeMeixnerLaw {
    /// Density of the absolutely continuous part,
    /// `√(4(1+b) - (u-a)²) / (2π (bu² + au + 1))` on the support, else 0.
    pub fn density(&self, u: f64) -> f64 {
        let rad = 4.0 * (1.0 + self.b) - (u - self.a) * (u - self.a);
        if rad <= 0.0 {
            return 0.0;
        }
        rad.sqrt() / (2.0 * std::f64::consts::PI * (self.b * u * u + self.a * u + 1.0))
    }

    /// `∫ f dμ_ac` through the substitution `u = a + 2√(1+b) sin t`, which
    /// removes both the square-root edge of the numerator and the
    /// coinciding zero of the quadratic in the boundary cases.
    pub fn ac_integral<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let r = 2.0 * (1.0 + self.b).sqrt();
        if r == 0.0 {
            return 0.0;
        }
        let (a, b) = (self.a, self.b);
        let integrand = |t: f64| {
            let c = t.cos();
            let u = a + r * t.sin();
            r * r * c * c / (2.0 * std::f64::consts::PI * (b * u * u + a * u + 1.0)) * f(u)
        };
        gl_integrate(
            &integrand,
            -std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_2,
            0.05,
        )
    }

    /// `∫ f dμ` including the atoms.
    pub fn integrate_against<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = self.ac_integral(&f);
        for &(u, p) in &self.atoms {
            acc += p * f(u);
        }
        acc
    }

    /// Total mass (should be 1; certified by the tests to 1e-8).
    pub fn total_mass(&self) -> f64 {
        self.integrate_against(|_| 1.0)
    }

    /// Raw moment `∫ u^n dμ`.
    pub fn moment(&self, n: usize) -> f64 {
        self.integrate_against(|u| u.powi(n as i32))
    }
}

/// Constructs the free-Meixner law for `V(m) = 1 + am + bm²`, `b > -1`.
///
/// Atom masses are clamped at 0 in every case (the published case for
/// `-1 ≤ b < 0` prints possibly-negative masses without the clamp its
/// `b > 0` case carries; total mass 1 is the arbitrating invariant). At the
/// degenerate boundary `a² = 4b` no atom is attached.
pub fn free_meixner(a: f64, b: f64) -> Result<FreeMeixnerLaw> {
    if !(b > -1.0) {
        return Err(Error::Domain(format!(
            "free_meixner requires b > -1, got {b}"
        )));
    }
    let r = 2.0 * (1.0 + b).sqrt();
    let ac_support = (a - r, a + r);
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    if b == 0.0 {
        if a * a > 1.0 {
            atoms.push((-1.0 / a, (1.0 - 1.0 / (a * a)).max(0.0)));
        }
    } else if a * a > 4.0 * b {
        let root = (a * a - 4.0 * b).sqrt();
        if b > 0.0 {
            // single atom opposite to the sign of a
            let u1 = -a.signum() * (a.abs() - root) / (2.0 * b);
            let p1 = (1.0 - (a.abs() - root) / (2.0 * b * root)).max(0.0);
            atoms.push((u1, p1));
        } else {
            let u1 = (-a + root) / (2.0 * b);
            let p1 = (1.0 + (root - a) / (2.0 * b * root)).max(0.0);
            let u2 = (-a - root) / (2.0 * b);
            let p2 = (1.0 + (root + a) / (2.0 * b * root)).max(0.0);
            atoms.push((u1, p1));
            atoms.push((u2, p2));
        }
    }
    atoms.retain(|&(_, p)| p > 0.0);
    // atoms must not sit inside the open continuum
    for &(u, _) in &atoms {
        if u > ac_support.0 + 1e-12 && u < ac_support.1 - 1e-12 {
            return Err(Error::InvariantViolation(format!(
                "atom at {u} falls inside the continuous support"
            )));
        }
    }
    // the quadratic must stay positive strictly inside the support
    let law = FreeMeixnerLaw {
        a,
        b,
        ac_support,
        atoms,
    };
    for i in 1..64 {
        let u = ac_support.0 + (ac_support.1 - ac_support.0) * i as f64 / 64.0;
        if b * u * u + a * u + 1.0 <= 0.0 {
            return Err(Error::InvariantViolation(format!(
                "density denominator nonpositive inside the support at u = {u}"
            )));
        }
    }
    Ok(law)
}

/// Cauchy–Stieltjes transform of the free-Meixner law,
/// `G(z) = (a + z + 2bz - S)/(2(1 + az + bz²))` with
/// `S = sign(z-a)·√((a-z)² - 4(1+b))`, the branch that makes `G(z) ~ 1/z`
/// at both infinities.
pub fn cauchy_transform(a: f64, b: f64, z: f64) -> Result<f64> {
    if !(b > -1.0) {
        return Err(Error::Domain(format!(
            "cauchy_transform requires b > -1, got {b}"
        )));
    }
    let disc = (a - z) * (a - z) - 4.0 * (1.0 + b);
    if disc <= 0.0 {
        return Err(Error::Domain(format!(
            "z = {z} lies on the continuous support"
        )));
    }
    let den = 1.0 + a * z + b * z * z;
    if den == 0.0 {
        return Err(Error::Domain(format!("z = {z} is a pole (atom location)")));
    }
    let s = (z - a).signum() * disc.sqrt();
    Ok((a + z + 2.0 * b * z - s) / (2.0 * den))
}

/// Residual of the inverse relation `G(m + V(m)/m) = m/V(m)` for quadratic
/// `V = 1 + am + bm²`.
///
/// At `m = 0` the relation degenerates to the Stieltjes normalization
/// `z G(z) → 1`, which is evaluated at a large z instead.
pub fn g2v_residual(spec: &VarianceSpec, m: f64) -> Result<f64> {
    let (a, b) = match spec.kind {
        VarianceKind::Quadratic { c0, c1, c2 } if c0 == 1.0 => (c1, c2),
        _ => {
            return Err(Error::Domain(
                "g2v_residual needs a quadratic variance with V(0) = 1".into(),
            ))
        }
    };
    if m == 0.0 {
        let z = 1e8;
        return Ok((cauchy_transform(a, b, z)? * z - 1.0).abs());
    }
    let v = 1.0 + a * m + b * m * m;
    let z = m + v / m;
    Ok((cauchy_transform(a, b, z)? - m / v).abs())
}

/// Member weight `V(m) / (V(m) + m(m-u))` of the free exponential family.
///
/// For quadratic V the denominator is evaluated in the expanded form
/// `1 + (a-u)m + (b+1)m²`, the better-conditioned grouping (and the exact
/// q = 0 limit of the q-weight product).
pub fn free_weight(spec: &VarianceSpec, m: f64, u: f64) -> Result<f64> {
    let v = spec.value(m);
    let den = match spec.kind {
        VarianceKind::Quadratic { c0, c1, c2 } => c0 + (c1 - u) * m + (c2 + 1.0) * m * m,
        _ => v + m * (m - u),
    };
    if den <= 0.0 {
        return Err(Error::Domain(format!(
            "free weight denominator {den} <= 0 at m = {m}, u = {u}"
        )));
    }
    Ok(v / den)
}

/// Free cumulant sequence `k_1, k_2, …, k_N` of the centered measure
/// generating the family with (effective) variance function `V(m)/λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeCumulantSeq {
    k: Vec<Rat>,
}

impl FreeCumulantSeq {
    /// `k_n`, 1-indexed.
    pub fn cumulant(&self, n: usize) -> Result<f64> {
        self.cumulant_exact(n).map(|r| rat_to_f64(&r))
    }

    /// Exact rational `k_n`, 1-indexed.
    pub fn cumulant_exact(&self, n: usize) -> Result<Rat> {
        if n == 0 || n > self.k.len() {
            return Err(Error::InsufficientDepth {
                need: n,
                have: self.k.len(),
            });
        }
        Ok(self.k[n - 1].clone())
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }
}

/// Free cumulants from the variance function:
/// `k_1 = 0`, `k_{n+1} = [t^{n-1}] V_eff(t)^n / n` with
/// `V_eff = V/λ`, in exact series arithmetic.
///
/// The centering `k_1 = 0` is what makes the generating measure unique.
pub fn free_cumulants(spec: &VarianceSpec, n_max: usize) -> Result<FreeCumulantSeq> {
    if n_max == 0 {
        return Ok(FreeCumulantSeq { k: vec![] });
    }
    let order = n_max.saturating_sub(2).max(1);
    let v = spec
        .series_at_zero(order)?
        .scale(&(Rat::one() / rat_from_f64(spec.lambda)?));
    let mut k = Vec::with_capacity(n_max);
    k.push(Rat::zero()); // k_1 = 0
    let mut v_pow = v.truncated(order);
    for n in 1..n_max {
        // k_{n+1} = [t^{n-1}] V^n / n
        if n > 1 {
            v_pow = v_pow.mul(&v);
        }
        k.push(v_pow.coeff(n - 1) / Rat::from(BigInt::from(n)));
    }
    Ok(FreeCumulantSeq { k })
}

/// Variance spec of the free convolution power: `V(m)/λ` for `λ ≥ 1`.
///
/// `λ < 1` is rejected: only infinite divisibility would license fractional
/// powers, and that direction is not constructive.
pub fn free_power(spec: &VarianceSpec, lambda: f64) -> Result<VarianceSpec> {
    if !(lambda >= 1.0) {
        return Err(Error::Domain(format!(
            "free_power needs lambda >= 1 (fractional powers exist only for freely infinitely divisible generators), got {lambda}"
        )));
    }
    let mut out = spec.clone();
    out.lambda = spec.lambda * lambda;
    Ok(out)
}

/// Member of the free exponential family at mean m: the measure
/// `w(m, u) μ(du)` with `w = V(m)/(V(m)+m(m-u))` and μ the free-Meixner law.
pub fn free_family_member(a: f64, b: f64, m: f64) -> Result<FamilyMember> {
    let law = free_meixner(a, b)?;
    let spec = VarianceSpec::quadratic(1.0, a, b, admissible_mean_interval(&law), 1.0)?;
    // admissibility: the weight denominator must stay positive on supp μ
    let check = |u: f64| 1.0 + (a - u) * m + (b + 1.0) * m * m;
    let mut worst = f64::INFINITY;
    let mut at = 0.0;
    for i in 0..=64 {
        let u = law.ac_support.0
            + (law.ac_support.1 - law.ac_support.0) * i as f64 / 64.0;
        if check(u) < worst {
            worst = check(u);
            at = u;
        }
    }
    for &(u, _) in &law.atoms {
        if check(u) < worst {
            worst = check(u);
            at = u;
        }
    }
    if worst <= 0.0 {
        return Err(Error::PositivityViolation { location: at });
    }
    let spec_for_density = spec.clone();
    let law_for_density = law.clone();
    let density: crate::measure::DensityFn = Arc::new(move |u: f64| {
        law_for_density.density(u) * free_weight(&spec_for_density, m, u).unwrap_or(0.0)
    });
    let atoms: Vec<(f64, f64)> = law
        .atoms
        .iter()
        .map(|&(u, p)| Ok((u, p * free_weight(&spec, m, u)?)))
        .collect::<Result<_>>()?;
    Ok(FamilyMember {
        family: "free_meixner",
        measure: Measure::Mixed {
            density,
            support: law.ac_support,
            core: law.ac_support,
            tail: Arc::new(|_, _| 0.0),
            atoms,
        },
        mean: m,
        variance: spec.variance_at(m),
        spec,
        probability: true,
    })
}

/// Largest symmetric-ish interval of means around 0 on which the weight
/// denominator stays positive over supp μ, found by bisection on each side.
fn admissible_mean_interval(law: &FreeMeixnerLaw) -> (f64, f64) {
    let (a, b) = (law.a, law.b);
    let mut us: Vec<f64> = (0..=64)
        .map(|i| law.ac_support.0 + (law.ac_support.1 - law.ac_support.0) * i as f64 / 64.0)
        .collect();
    us.extend(law.atoms.iter().map(|&(u, _)| u));
    let ok = |m: f64| us.iter().all(|&u| 1.0 + (a - u) * m + (b + 1.0) * m * m > 0.0);
    let side = |dir: f64| {
        let mut lo = 0.0;
        let mut hi = dir;
        if ok(hi) {
            // positivity may hold arbitrarily far; cap the interval
            for _ in 0..20 {
                hi *= 2.0;
                if !ok(hi) {
                    break;
                }
            }
            if ok(hi) {
                return hi;
            }
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    (side(-1.0), side(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfam;
    use crate::series::RatSeries;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() < tol,
            "actual {actual:e} vs expected {expected:e} (tol {tol:e})"
        );
    }

    #[test]
    fn semicircle_law() {
        let law = free_meixner(0.0, 0.0).unwrap();
        assert_eq!(law.ac_support, (-2.0, 2.0));
        assert!(law.atoms.is_empty());
        assert_close(law.density(0.0), 2.0 / (2.0 * std::f64::consts::PI), 1e-15);
        assert_close(law.total_mass(), 1.0, 1e-12);
    }

    #[test]
    fn marchenko_pastur_type_atom() {
        // (a, b) = (2, 0): one atom at -1/2 with mass 3/4
        let law = free_meixner(2.0, 0.0).unwrap();
        assert_eq!(law.atoms.len(), 1);
        let (u, p) = law.atoms[0];
        assert_close(u, -0.5, 1e-15);
        assert_close(p, 0.75, 1e-15);
        assert_close(law.total_mass(), 1.0, 1e-10);
    }

    #[test]
    fn atomless_hyperbolic_regime() {
        let law = free_meixner(1.0, 1.0).unwrap();
        assert!(law.atoms.is_empty(), "a² < 4b must carry no atoms");
        assert_close(law.total_mass(), 1.0, 1e-8);
    }

    #[test]
    fn free_binomial_regime_two_atoms() {
        // deep in the b < 0 regime both atoms survive the clamp
        let law = free_meixner(0.0, -0.96).unwrap();
        assert_eq!(law.atoms.len(), 2);
        let expected_u = (1.0f64 / 0.96).sqrt();
        let expected_p = 1.0 - 1.0 / 1.92;
        for &(u, p) in &law.atoms {
            assert_close(u.abs(), expected_u, 1e-12);
            assert_close(p, expected_p, 1e-12);
        }
        assert_close(law.total_mass(), 1.0, 1e-8);
    }

    #[test]
    fn boundary_b_is_domain_error() {
        assert!(matches!(free_meixner(0.0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(free_meixner(0.5, -1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn clamped_masses_keep_total_at_one() {
        // b < 0 with both printed masses fractional: total mass arbitrates
        for &(a, b) in &[(0.3, -0.25), (0.0, -0.5), (1.0, -0.75), (-0.8, -0.4)] {
            let law = free_meixner(a, b).unwrap();
            assert_close(law.total_mass(), 1.0, 1e-8);
            for &(_, p) in &law.atoms {
                assert!(p >= 0.0);
            }
        }
    }

    #[test]
    fn mean_zero_variance_one() {
        for &(a, b) in &[(0.0, 0.0), (0.5, 0.3), (2.0, 0.0), (0.3, -0.25), (1.5, 0.25)] {
            let law = free_meixner(a, b).unwrap();
            assert_close(law.moment(1), 0.0, 1e-9);
            assert_close(law.moment(2), 1.0, 1e-8);
        }
    }

    #[test]
    fn cauchy_transform_semicircle_value() {
        // a = b = 0, z = 5/2: (z - √(z²-4))/2 = 1/2
        assert_close(cauchy_transform(0.0, 0.0, 2.5).unwrap(), 0.5, 1e-14);
    }

    #[test]
    fn cauchy_transform_stieltjes_normalization() {
        let z = 1e3;
        for &(a, b) in &[(0.3, 0.2), (0.0, 0.0), (-0.7, 0.5)] {
            let g = cauchy_transform(a, b, z).unwrap();
            assert!((g * z - 1.0).abs() < 2e-3, "zG residual at ({a},{b})");
            let g_neg = cauchy_transform(a, b, -z).unwrap();
            assert!((g_neg * -z - 1.0).abs() < 2e-3, "zG residual at -z");
        }
    }

    #[test]
    fn cauchy_transform_matches_quadrature() {
        let (a, b, z) = (0.5, 0.3, 4.0);
        let law = free_meixner(a, b).unwrap();
        let direct = law.integrate_against(|u| 1.0 / (z - u));
        assert_close(cauchy_transform(a, b, z).unwrap(), direct, 1e-8);
    }

    #[test]
    fn cauchy_transform_rejects_support() {
        assert!(matches!(
            cauchy_transform(0.0, 0.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn g2v_identity() {
        let spec = VarianceSpec::quadratic(1.0, 0.0, 0.0, (-1.0, 1.0), 1.0).unwrap();
        assert_close(g2v_residual(&spec, 0.5).unwrap(), 0.0, 1e-14);
        let spec = VarianceSpec::quadratic(1.0, 0.3, 0.2, (-1.0, 1.0), 1.0).unwrap();
        for &m in &[-0.4, -0.1, 0.1, 0.4] {
            let r = g2v_residual(&spec, m).unwrap();
            assert!(r < 1e-10, "g2v residual {r} at m = {m}");
        }
        // m = 0 degenerates to the z→∞ normalization
        assert!(g2v_residual(&spec, 0.0).unwrap() < 1e-6);
    }

    #[test]
    fn free_weight_trivial_points() {
        let spec = VarianceSpec::quadratic(1.0, 0.3, 0.2, (-1.0, 1.0), 1.0).unwrap();
        assert_eq!(free_weight(&spec, 0.0, 1.7).unwrap(), 1.0);
        assert_close(free_weight(&spec, 0.4, 0.4).unwrap(), 1.0, 1e-15);
    }

    #[test]
    fn free_weight_integrates_to_one() {
        let (a, b, m) = (0.3, 0.2, 0.2);
        let spec = VarianceSpec::quadratic(1.0, a, b, (-1.0, 1.0), 1.0).unwrap();
        let law = free_meixner(a, b).unwrap();
        let mass = law.integrate_against(|u| free_weight(&spec, m, u).unwrap());
        assert_close(mass, 1.0, 1e-8);
    }

    #[test]
    fn free_cumulants_of_constant_variance() {
        let spec = VarianceSpec::quadratic(1.0, 0.0, 0.0, (-1.0, 1.0), 1.0).unwrap();
        let k = free_cumulants(&spec, 8).unwrap();
        assert_eq!(k.cumulant(1).unwrap(), 0.0);
        assert_eq!(k.cumulant(2).unwrap(), 1.0);
        for n in 3..=8 {
            assert_eq!(k.cumulant(n).unwrap(), 0.0, "k_{n} should vanish");
        }
    }

    #[test]
    fn free_cumulants_linear_variance_is_geometric() {
        // V = 1 + am: k_{n+1} = a^{n-1}
        let a = 0.5;
        let spec = VarianceSpec::quadratic(1.0, a, 0.0, (-1.0, 1.0), 1.0).unwrap();
        let k = free_cumulants(&spec, 9).unwrap();
        for n in 1..=8 {
            assert_close(k.cumulant(n + 1).unwrap(), a.powi(n as i32 - 1), 1e-14);
        }
    }

    #[test]
    fn free_cumulants_pure_quadratic() {
        // V = 1 + bm²: k_2 = 1, k_3 = 0, k_4 = b
        let b = 0.3;
        let spec = VarianceSpec::quadratic(1.0, 0.0, b, (-1.0, 1.0), 1.0).unwrap();
        let k = free_cumulants(&spec, 6).unwrap();
        assert_close(k.cumulant(2).unwrap(), 1.0, 1e-15);
        assert_close(k.cumulant(3).unwrap(), 0.0, 1e-15);
        assert_close(k.cumulant(4).unwrap(), b, 1e-15);
    }

    #[test]
    fn free_cumulants_match_reversion_oracle_exactly() {
        // oracle: invert z = m/V(m) by brute-force series reversion and
        // read R(z) = m(z); k_n is the coefficient of z^{n-1}
        let order = 9;
        // dyadic coefficients are exactly representable in f64, so the
        // f64-built spec and the exact oracle see identical inputs
        for &(c1n, c2n) in &[(1i64, 1i64), (2, -1), (-1, 2), (0, 3)] {
            let c1 = crate::series::rat(c1n, 4);
            let c2 = crate::series::rat(c2n, 8);
            let v = RatSeries::new(vec![Rat::one(), c1.clone(), c2.clone()]).truncated(order);
            let z_series = RatSeries::identity(order).mul(&v.inverse().unwrap());
            let m_of_z = z_series.reversion().unwrap();
            let spec = VarianceSpec::quadratic(
                1.0,
                rat_to_f64(&c1),
                rat_to_f64(&c2),
                (-0.5, 0.5),
                1.0,
            );
            // c2 negative enough can break V > 0 on the domain; skip those
            let Ok(spec) = spec else { continue };
            let k = free_cumulants(&spec, order).unwrap();
            for n in 1..=8usize {
                let oracle = m_of_z.coeff(n - 1);
                assert_eq!(
                    k.cumulant_exact(n).unwrap(),
                    oracle,
                    "cumulant k_{n} mismatch for V = 1 + {c1n}/3 m + {c2n}/4 m²"
                );
            }
        }
    }

    #[test]
    fn free_power_scales_cumulants() {
        let spec = VarianceSpec::quadratic(1.0, 0.5, 0.0, (-1.0, 1.0), 1.0).unwrap();
        let lambda = 2.0;
        let powered = free_power(&spec, lambda).unwrap();
        let k1 = free_cumulants(&spec, 7).unwrap();
        let k2 = free_cumulants(&powered, 7).unwrap();
        for n in 1..=6usize {
            let expected = k1.cumulant(n + 1).unwrap() / lambda.powi(n as i32);
            assert_close(k2.cumulant(n + 1).unwrap(), expected, 1e-14);
        }
        // λ = 1 is the identity
        let id = free_power(&spec, 1.0).unwrap();
        assert_eq!(id, spec);
        // semicircle scaling: k_2 = 1/4 under λ = 4
        let semi = VarianceSpec::quadratic(1.0, 0.0, 0.0, (-1.0, 1.0), 1.0).unwrap();
        let k4 = free_cumulants(&free_power(&semi, 4.0).unwrap(), 4).unwrap();
        assert_close(k4.cumulant(2).unwrap(), 0.25, 1e-15);
        assert!(free_power(&spec, 0.5).is_err());
    }

    #[test]
    fn meixner_moments_match_q_zero_jacobi() {
        for &(a, b) in &[(0.3, 0.2), (0.0, 0.0), (1.5, 0.25), (0.5, -0.25)] {
            let law = free_meixner(a, b).unwrap();
            let (qr, ar, br) = (
                crate::series::rat(0, 1),
                rat_from_f64(a).unwrap(),
                rat_from_f64(b).unwrap(),
            );
            let (alpha, beta) = qfam::asc_exact(&qr, &ar, &br, 8);
            let jacobi = qfam::moments_exact(&alpha, &beta, 8);
            for n in 0..=8 {
                assert_close(
                    law.moment(n),
                    rat_to_f64(&jacobi[n]),
                    1e-8,
                );
            }
        }
    }

    #[test]
    fn member_moments() {
        let member = free_family_member(0.3, 0.2, 0.2).unwrap();
        let rep = crate::measure::moment_report(&member, 1e-9).unwrap();
        assert_close(rep.mass, 1.0, 1e-6);
        assert_close(rep.mean, 0.2, 1e-6);
        assert_close(rep.variance, member.variance, 1e-5);
    }

    #[test]
    fn q_weight_at_zero_equals_free_weight() {
        let params = qfam::QExpParams::new(0.0, 0.3, 0.2).unwrap();
        let spec = VarianceSpec::quadratic(1.0, 0.3, 0.2, (-1.0, 1.0), 1.0).unwrap();
        for &m in &[-0.3, -0.1, 0.05, 0.2, 0.4] {
            for &u in &[-1.5, -0.3, 0.0, 0.7, 1.9] {
                let qv = qfam::q_weight(&params, m, u).unwrap();
                let fv = free_weight(&spec, m, u).unwrap();
                assert!(
                    ((qv - fv) / fv).abs() < 1e-15,
                    "q=0 weight {qv} vs free weight {fv} at (m,u)=({m},{u})"
                );
            }
        }
    }

    #[test]
    fn support_endpoints_match_density_zeros() {
        // q = 0 support interval ends exactly where the density vanishes
        let params = qfam::QExpParams::new(0.0, 0.3, 0.2).unwrap();
        let (lo, hi) = qfam::support_interval(&params).unwrap();
        let law = free_meixner(0.3, 0.2).unwrap();
        assert_close(lo, law.ac_support.0, 1e-14);
        assert_close(hi, law.ac_support.1, 1e-14);
        assert!(law.density(lo - 1e-9) == 0.0 && law.density(hi + 1e-9) == 0.0);
        assert!(law.density(lo + 1e-6) > 0.0 && law.density(hi - 1e-6) > 0.0);
    }
}
