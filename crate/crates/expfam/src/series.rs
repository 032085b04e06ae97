//! Truncated power series over exact rationals and the Lagrange expansion
//! engine.
//!
//! Iterated differentiation loses precision catastrophically in doubles past
//! order ~12, so everything here runs on [`num_rational::BigRational`]. f64
//! inputs convert losslessly (every finite f64 is a rational), and results
//! convert back at the very end.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Exact rational scalar.
pub type Rat = BigRational;

/// Rational from an integer pair.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Lossless conversion from a finite f64.
pub fn rat_from_f64(x: f64) -> Result<Rat> {
    Rat::from_float(x).ok_or_else(|| Error::Domain(format!("{x} is not a finite number")))
}

/// Rounds a rational to the nearest f64, safe for numerators and
/// denominators far beyond the f64 exponent range.
pub fn rat_to_f64(r: &Rat) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let num = r.numer();
    let den = r.denom();
    let shift = 64i64 - (num.bits() as i64 - den.bits() as i64);
    let (scaled, sign) = if shift >= 0 {
        ((num << shift as u64) / den, 1.0)
    } else {
        ((num / (BigInt::one() << (-shift) as u64)) / den, 1.0)
    };
    let _ = sign;
    let q = scaled.to_f64().unwrap_or(f64::NAN);
    q * (2.0f64).powi(-shift as i32)
}

/// Natural log of |r|, stable for rationals far outside the f64 range.
pub(crate) fn rat_log_abs(r: &Rat) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    fn log_bigint(x: &BigInt) -> f64 {
        let b = x.bits();
        if b <= 53 {
            return x.abs().to_f64().unwrap().ln();
        }
        let top = (x.abs() >> (b - 53)).to_f64().unwrap();
        top.ln() + (b - 53) as f64 * std::f64::consts::LN_2
    }
    log_bigint(r.numer()) - log_bigint(r.denom())
}

#[cfg(test)]
pub(crate) fn big_factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    acc
}

/// Power series truncated at a fixed order; `coeffs[k]` multiplies `x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatSeries {
    coeffs: Vec<Rat>,
}

impl RatSeries {
    /// Series from ascending rational coefficients.
    pub fn new(coeffs: Vec<Rat>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least the constant term");
        RatSeries { coeffs }
    }

    /// Series from integer coefficients.
    pub fn from_ints(coeffs: &[i64]) -> Self {
        RatSeries::new(coeffs.iter().map(|&c| rat(c, 1)).collect())
    }

    /// Lossless series from f64 coefficients.
    pub fn from_f64s(coeffs: &[f64]) -> Result<Self> {
        let v: Result<Vec<Rat>> = coeffs.iter().map(|&c| rat_from_f64(c)).collect();
        Ok(RatSeries::new(v?))
    }

    /// The zero series up to `order`.
    pub fn zero(order: usize) -> Self {
        RatSeries {
            coeffs: vec![Rat::zero(); order + 1],
        }
    }

    /// The monomial x (identity map) up to `order`.
    pub fn identity(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = Rat::one();
        }
        s
    }

    /// exp(x) truncated at `order`.
    pub fn exp_series(order: usize) -> Self {
        let mut coeffs = Vec::with_capacity(order + 1);
        let mut c = Rat::one();
        coeffs.push(c.clone());
        for k in 1..=order {
            c /= Rat::from(BigInt::from(k));
            coeffs.push(c.clone());
        }
        RatSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `x^k` (zero beyond the truncation order).
    pub fn coeff(&self, k: usize) -> Rat {
        self.coeffs.get(k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    /// Pads or cuts to the given order.
    pub fn truncated(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, Rat::zero());
        RatSeries { coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().max(other.order());
        let mut coeffs = vec![Rat::zero(); order + 1];
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c = self.coeff(k) + other.coeff(k);
        }
        RatSeries { coeffs }
    }

    pub fn scale(&self, s: &Rat) -> Self {
        RatSeries {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Product truncated at the smaller operand order.
    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let mut coeffs = vec![Rat::zero(); order + 1];
        for i in 0..=order {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..=(order - i) {
                if other.coeffs[j].is_zero() {
                    continue;
                }
                let prod = &self.coeffs[i] * &other.coeffs[j];
                coeffs[i + j] += prod;
            }
        }
        RatSeries { coeffs }
    }

    /// Integer power by repeated multiplication, truncated at self's order.
    pub fn pow(&self, n: usize) -> Self {
        let mut acc = {
            let mut one = Self::zero(self.order());
            one.coeffs[0] = Rat::one();
            one
        };
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Formal derivative (order drops by one).
    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return Self::zero(0);
        }
        let coeffs = (1..=self.order())
            .map(|k| &self.coeffs[k] * Rat::from(BigInt::from(k)))
            .collect();
        RatSeries { coeffs }
    }

    /// Composition self(g(x)) for g with g(0) = 0, truncated at self's order.
    pub fn compose(&self, g: &Self) -> Result<Self> {
        if !g.coeff(0).is_zero() {
            return Err(Error::Domain(
                "series composition requires g(0) = 0".into(),
            ));
        }
        let order = self.order();
        let g = g.truncated(order);
        let mut acc = Self::zero(order);
        acc.coeffs[0] = self.coeff(0);
        let mut g_pow = {
            let mut one = Self::zero(order);
            one.coeffs[0] = Rat::one();
            one
        };
        for k in 1..=order {
            g_pow = g_pow.mul(&g);
            let ck = self.coeff(k);
            if !ck.is_zero() {
                acc = acc.add(&g_pow.scale(&ck));
            }
        }
        Ok(acc)
    }

    /// Compositional inverse of a series with zero constant term and
    /// invertible linear term, by order-doubling Newton iteration.
    ///
    /// This is the brute-force reversion companion used to cross-check the
    /// Lagrange engine and the free-cumulant extraction; neither of those
    /// goes through this routine.
    pub fn reversion(&self) -> Result<Self> {
        if !self.coeff(0).is_zero() {
            return Err(Error::Domain("reversion requires f(0) = 0".into()));
        }
        let c1 = self.coeff(1);
        if c1.is_zero() {
            return Err(Error::Domain("reversion requires f'(0) != 0".into()));
        }
        let order = self.order();
        // g_1(y) = y / c1, then lift order by Newton: g ← g − (f∘g − y)/(f'∘g)
        let mut g = Self::zero(order);
        if order >= 1 {
            g.coeffs[1] = Rat::one() / c1;
        }
        let fprime = self.derivative().truncated(order);
        let y = Self::identity(order);
        for _ in 0..order + 2 {
            let fg = self.compose(&g)?;
            let err = fg.add(&y.scale(&-Rat::one()));
            if err.coeffs.iter().all(|c| c.is_zero()) {
                break;
            }
            let fpg = fprime.compose(&g)?;
            let corr = err.mul(&fpg.inverse()?);
            g = g.add(&corr.scale(&-Rat::one()));
        }
        Ok(g)
    }

    /// Multiplicative inverse 1/self for nonzero constant term.
    pub fn inverse(&self) -> Result<Self> {
        let c0 = self.coeff(0);
        if c0.is_zero() {
            return Err(Error::Domain("series inverse requires f(0) != 0".into()));
        }
        let order = self.order();
        let mut inv = Self::zero(order);
        inv.coeffs[0] = Rat::one() / &c0;
        for k in 1..=order {
            // c0·inv[k] = −Σ_{j=1..k} self[j]·inv[k−j]
            let mut acc = Rat::zero();
            for j in 1..=k {
                let prod = self.coeff(j) * &inv.coeffs[k - j];
                acc += prod;
            }
            inv.coeffs[k] = -acc / &c0;
        }
        Ok(inv)
    }

    /// All coefficients rounded to f64.
    pub fn to_f64s(&self) -> Vec<f64> {
        self.coeffs.iter().map(rat_to_f64).collect()
    }
}

/// Lagrange expansion: coefficients of `f(m(ξ))` in powers of `ξ = m/φ(m)`.
///
/// Returns `N+1` exact coefficients; entry `n ≥ 1` is
/// `[x^{n-1}] (f'(x) φ(x)^n) / n`, which is the derivative form of the
/// expansion theorem with the evaluation at 0 done by coefficient extraction.
pub fn lagrange_series(f: &RatSeries, phi: &RatSeries, n_max: usize) -> Result<Vec<Rat>> {
    if phi.coeff(0).is_zero() {
        return Err(Error::Domain(
            "lagrange expansion requires phi(0) != 0".into(),
        ));
    }
    let order = n_max.max(1);
    let f = f.truncated(order);
    let phi = phi.truncated(order);
    let fprime = f.derivative().truncated(order);
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(f.coeff(0));
    let mut phi_pow = phi.clone();
    for n in 1..=n_max {
        let prod = fprime.mul(&phi_pow);
        out.push(prod.coeff(n - 1) / Rat::from(BigInt::from(n)));
        phi_pow = phi_pow.mul(&phi);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rat_to_f64_handles_huge_scales() {
        let big = Rat::new(BigInt::from(3) << 2000u32, BigInt::one() << 1999u32);
        assert_eq!(rat_to_f64(&big), 6.0);
        let tiny = Rat::new(BigInt::from(5), BigInt::one() << 2000u32);
        assert!(rat_to_f64(&tiny) >= 0.0 && rat_to_f64(&tiny) < 1e-300);
        assert_eq!(rat_to_f64(&rat(-7, 2)), -3.5);
    }

    #[test]
    fn mul_and_pow_agree() {
        let s = RatSeries::from_ints(&[1, 2, 3, 0, 0, 0, 0]);
        let sq = s.mul(&s);
        assert_eq!(sq, s.pow(2));
        assert_eq!(sq.coeff(2), rat(10, 1)); // 2·3 + 2·2 = 10
    }

    #[test]
    fn inverse_is_inverse() {
        let s = RatSeries::from_ints(&[2, -1, 4, 5, -3, 1, 2, 7]);
        let inv = s.inverse().unwrap();
        let prod = s.mul(&inv);
        assert_eq!(prod.coeff(0), Rat::one());
        for k in 1..=7 {
            assert!(prod.coeff(k).is_zero(), "coeff {k} not cleared");
        }
    }

    #[test]
    fn lagrange_identity_when_phi_is_one() {
        // φ ≡ 1 means ξ = m, so f(m(ξ)) = f(ξ)
        let f = RatSeries::from_ints(&[0, 1, 0, 0, 0, 0, 0, 0, 0]);
        let phi = RatSeries::from_ints(&[1, 0, 0, 0, 0, 0, 0, 0, 0]);
        let coeffs = lagrange_series(&f, &phi, 8).unwrap();
        assert_eq!(coeffs[1], Rat::one());
        for (n, c) in coeffs.iter().enumerate() {
            if n != 1 {
                assert!(c.is_zero());
            }
        }
    }

    #[test]
    fn lagrange_tree_function() {
        // φ = e^x, f = id: n-th coefficient is n^{n-1}/n!
        let order = 8;
        let f = RatSeries::identity(order);
        let phi = RatSeries::exp_series(order);
        let coeffs = lagrange_series(&f, &phi, order).unwrap();
        for n in 1..=order {
            let expected = Rat::new(BigInt::from(n).pow(n as u32 - 1), big_factorial(n));
            assert_eq!(coeffs[n], expected, "tree coefficient at n = {n}");
        }
    }

    #[test]
    fn lagrange_requires_nonzero_phi0() {
        let f = RatSeries::identity(4);
        let phi = RatSeries::from_ints(&[0, 1, 0, 0, 0]);
        assert!(lagrange_series(&f, &phi, 4).is_err());
    }

    #[test]
    fn reversion_round_trips() {
        // ξ(m) = m − m² + 3m³; m(ξ(x)) = x to the truncation order
        let xi = RatSeries::from_ints(&[0, 1, -1, 3, 0, 0, 0, 0, 0]);
        let inv = xi.reversion().unwrap();
        let comp = xi.compose(&inv).unwrap();
        assert_eq!(comp.coeff(1), Rat::one());
        for k in 2..=8 {
            assert!(comp.coeff(k).is_zero(), "residual at order {k}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn lagrange_matches_reversion_oracle(
            c1 in -4i64..=4,
            c2 in -4i64..=4,
            c3 in -4i64..=4,
            f1 in -3i64..=3,
            f2 in -3i64..=3,
        ) {
            // random polynomial φ with φ(0) = 1; oracle: brute-force reversion
            let order = 8;
            let phi = RatSeries::from_ints(&[1, c1, c2, c3, 0, 0, 0, 0, 0]);
            let f = RatSeries::from_ints(&[0, f1, f2, 1, 0, 0, 0, 0, 0]);
            let engine = lagrange_series(&f, &phi, order).unwrap();

            // ξ(m) = m/φ(m) as a series, then m(ξ) by reversion, then f(m(ξ))
            let xi = RatSeries::identity(order).mul(&phi.truncated(order).inverse().unwrap());
            let m_of_xi = xi.reversion().unwrap();
            let f_of_m = f.truncated(order).compose(&m_of_xi).unwrap();
            for n in 0..=order {
                prop_assert_eq!(engine[n].clone(), f_of_m.coeff(n), "mismatch at order {}", n);
            }
        }
    }
}
