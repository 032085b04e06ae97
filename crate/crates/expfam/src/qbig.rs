//! q > 1 families (written with p = 1/q ∈ (0,1)) and the Hahn-shifted
//! lattice families.
//!
//! Both q-Laguerre analogues of the gamma family satisfy the same
//! q-difference equation `D_{q,m} w = p(1-p^λ)/(m²(1-p)) · w · (u-m)` and so
//! share the variance function `m² (1-p)/(p(1-p^λ))` — a continuous and a
//! discrete family with identical V, which is the point. The q = ∞
//! construction `(1 + λmu) C(du)` shows the non-uniqueness even more
//! directly: any centered generator with variance 1/λ works.

use std::sync::Arc;

use crate::classical::VarianceSpec;
use crate::measure::{FamilyMember, Measure};
use crate::specfun::q_pochhammer_inf;
use crate::{Error, Result};

/// Parameters p = 1/q ∈ (0,1) and λ > 0 of the q > 1 families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PParams {
    pub p: f64,
    pub lambda: f64,
}

impl PParams {
    pub fn new(p: f64, lambda: f64) -> Result<Self> {
        if !(0.0 < p && p < 1.0) {
            return Err(Error::Domain(format!("need 0 < p < 1, got p = {p}")));
        }
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!("need lambda > 0, got {lambda}")));
        }
        Ok(PParams { p, lambda })
    }

    /// `λ_q = (1-p)/(p(1-p^λ))`; the shared variance function of both
    /// q-Laguerre analogues is `V(m) = λ_q m²` (the q-difference equation
    /// forces λ_q into the numerator; as p → 1, λ_q → 1/λ and V → m²/λ).
    pub fn lambda_q(&self) -> f64 {
        (1.0 - self.p) / (self.p * (1.0 - self.p.powf(self.lambda)))
    }

    /// `λ_1 = λ(1-p) ∈ (0, λ)`.
    pub fn lambda_1(&self) -> f64 {
        self.lambda * (1.0 - self.p)
    }
}

/// Hahn's q-differentiation operator centered at θ:
/// `(f(x) - f(qx + (1-q)θ)) / ((1-q)(x-θ))`.
pub fn hahn_derivative<F: Fn(f64) -> f64>(f: F, q: f64, theta: f64, x: f64) -> Result<f64> {
    if x == theta {
        return Err(Error::Domain(format!(
            "hahn_derivative is undefined at x = θ = {theta}"
        )));
    }
    if q == 1.0 {
        return Err(Error::Domain("hahn_derivative needs q ≠ 1".into()));
    }
    Ok((f(x) - f(q * x + (1.0 - q) * theta)) / ((1.0 - q) * (x - theta)))
}

/// `sin(πλ)/(p^{1-λ}; p)_∞`, with the removable singularity at integer
/// λ ≥ 1 evaluated analytically: both factors have simple zeros there.
fn sin_over_pochhammer(lambda: f64, p: f64) -> f64 {
    let j = lambda.round();
    let delta = lambda - j;
    let near_integer = j >= 1.0 && delta.abs() < 1e-4;
    if !near_integer {
        let mut prod = 1.0;
        let mut k = 0usize;
        loop {
            let factor = 1.0 - p.powf(k as f64 + 1.0 - lambda);
            prod *= factor;
            if p.powf(k as f64 + 1.0 - lambda) < 1e-18 {
                break;
            }
            k += 1;
            if k > 100_000 {
                break;
            }
        }
        return (std::f64::consts::PI * lambda).sin() / prod;
    }
    // sin(πλ) = (-1)^j sin(πδ); the k = j-1 factor is 1 - p^{-δ}.
    // sin(πδ)/(1 - p^{-δ}) → -π/ln(1/p) as δ → 0.
    let big_l = (1.0 / p).ln();
    let pi_d = std::f64::consts::PI * delta;
    let dl = delta * big_l;
    let head = -(std::f64::consts::PI / big_l) * (1.0 - pi_d * pi_d / 6.0)
        / (1.0 + dl / 2.0 + dl * dl / 6.0);
    let sign = if (j as i64) % 2 == 0 { 1.0 } else { -1.0 };
    let mut prod = 1.0;
    let mut k = 0usize;
    loop {
        if k as f64 != j - 1.0 {
            prod *= 1.0 - p.powf(k as f64 + 1.0 - lambda);
        }
        if p.powf(k as f64 + 1.0 - lambda) < 1e-18 && k as f64 > j {
            break;
        }
        k += 1;
        if k > 100_000 {
            break;
        }
    }
    sign * head / prod
}

/// Density of the continuous q-Laguerre (p-Laguerre) gamma analogue at
/// mean m:
/// `(p^{-λ}-1)^λ (p;p)_∞ sin(πλ) / (π m^λ (p^{1-λ};p)_∞) · u^{λ-1}/(-cu;p)_∞`
/// with `c = (p^{-λ}-1)/m`. Integer λ is the analytic limit of the
/// `sin(πλ)/(p^{1-λ};p)_∞` ratio.
pub fn q_laguerre_continuous(params: &PParams, m: f64, u: f64) -> Result<f64> {
    if m <= 0.0 || u <= 0.0 {
        return Err(Error::Domain(format!(
            "q_laguerre_continuous needs m, u > 0, got m = {m}, u = {u}"
        )));
    }
    let PParams { p, lambda } = *params;
    let c = (p.powf(-lambda) - 1.0) / m;
    let amp = (p.powf(-lambda) - 1.0).powf(lambda) * q_pochhammer_inf(p, p)?
        * sin_over_pochhammer(lambda, p)
        / (std::f64::consts::PI * m.powf(lambda));
    Ok(amp * u.powf(lambda - 1.0) / q_pochhammer_inf(-c * u, p)?)
}

/// Member of the continuous q-Laguerre family (λ ≥ 1; smaller λ makes the
/// `u^{λ-1}` head uncertifiable for the bisection quadrature, as with the
/// ε-gamma family).
pub fn q_laguerre_member(params: &PParams, m: f64) -> Result<FamilyMember> {
    if m <= 0.0 {
        return Err(Error::Domain(format!("needs m > 0, got {m}")));
    }
    let PParams { p, lambda } = *params;
    if lambda < 1.0 {
        return Err(Error::Domain(format!(
            "q_laguerre members need lambda >= 1, got {lambda}"
        )));
    }
    let lambda_q = params.lambda_q();
    let spec = VarianceSpec::quadratic(0.0, 0.0, lambda_q, (0.0, f64::INFINITY), 1.0)?;
    let c = (p.powf(-lambda) - 1.0) / m;
    let amp = (p.powf(-lambda) - 1.0).powf(lambda) * q_pochhammer_inf(p, p)?
        * sin_over_pochhammer(lambda, p)
        / (std::f64::consts::PI * m.powf(lambda));
    let par = *params;
    let density: crate::measure::DensityFn =
        Arc::new(move |u: f64| q_laguerre_continuous(&par, m, u).unwrap_or(0.0));
    // tail: (-cu;p)_∞ ≥ (cu)^K p^{K(K-1)/2} once cu ≥ p^{1-K}
    let k_cut = lambda.ceil() as i32 + 4;
    let head = 1e-12f64;
    let sigma = (lambda_q * m * m).sqrt();
    let core = (head, (m + 10.0 * sigma + 10.0) * 20.0);
    let tail: crate::measure::TailFn = Arc::new(move |wl: f64, wr: f64| {
        let head_bound = if wl <= 0.0 {
            0.0
        } else {
            amp.abs() * (1.0 + wl + wl * wl) * wl.powf(lambda) / lambda
        };
        let right = if c * wr < p.powi(1 - k_cut) {
            f64::INFINITY
        } else {
            let kf = k_cut as f64;
            amp.abs() * c.powi(-k_cut) * p.powf(-kf * (kf - 1.0) / 2.0) * 3.0
                * wr.powf(lambda + 2.0 - kf)
                / (kf - lambda - 2.0)
        };
        head_bound + right
    });
    Ok(FamilyMember {
        family: "q_laguerre_continuous",
        measure: Measure::Continuous {
            density,
            support: (0.0, f64::INFINITY),
            core,
            tail,
        },
        mean: m,
        variance: lambda_q * m * m,
        spec,
        probability: true,
    })
}

/// Weight of the discrete q-Laguerre analogue at a lattice point u > 0:
/// `u^λ (-c, -p/c; p)_∞ / ((-cu, -cp^λ, -p^{1-λ}/c; p)_∞)`,
/// `c = (p^{-λ}-1)/m`.
///
/// The printed Pochhammer lists drop their ∞ subscripts and write the last
/// base point as `-c^{-1}p^{-λ+1}`; the bilateral summation identity forces
/// exactly the form above (total mass 1 is exact under it).
pub fn q_laguerre_discrete_weight(params: &PParams, m: f64, u: f64) -> Result<f64> {
    if m <= 0.0 || u <= 0.0 {
        return Err(Error::Domain(format!(
            "q_laguerre_discrete_weight needs m, u > 0, got m = {m}, u = {u}"
        )));
    }
    let PParams { p, lambda } = *params;
    let c = (p.powf(-lambda) - 1.0) / m;
    let num = q_pochhammer_inf(-c, p)? * q_pochhammer_inf(-p / c, p)?;
    let den = q_pochhammer_inf(-c * u, p)?
        * q_pochhammer_inf(-c * p.powf(lambda), p)?
        * q_pochhammer_inf(-p.powf(1.0 - lambda) / c, p)?;
    Ok(u.powf(lambda) * num / den)
}

/// Discrete q-Laguerre member: lattice {p^n : n ∈ Z} with base measure
/// `(p^λ;p)_∞/(p;p)_∞ Σ δ_{p^n}`; doubly infinite, truncated independently
/// on both ends (the `p^{n²}`-type decay makes the n → -∞ side immediate).
pub fn q_laguerre_discrete(params: &PParams, m: f64) -> Result<FamilyMember> {
    if m <= 0.0 {
        return Err(Error::Domain(format!("needs m > 0, got {m}")));
    }
    let PParams { p, lambda } = *params;
    let lambda_q = params.lambda_q();
    let spec = VarianceSpec::quadratic(0.0, 0.0, lambda_q, (0.0, f64::INFINITY), 1.0)?;
    let c = (p.powf(-lambda) - 1.0) / m;
    let base = q_pochhammer_inf(p.powf(lambda), p)? / q_pochhammer_inf(p, p)?;
    // mass_n = K p^{nλ} / (-c p^n; p)_∞ over n ∈ Z
    let kconst = base * q_pochhammer_inf(-c, p)? * q_pochhammer_inf(-p / c, p)?
        / (q_pochhammer_inf(-c * p.powf(lambda), p)?
            * q_pochhammer_inf(-p.powf(1.0 - lambda) / c, p)?);
    let site = |i: usize| -> i64 {
        if i == 0 {
            0
        } else if i % 2 == 1 {
            (i as i64 + 1) / 2
        } else {
            -(i as i64 / 2)
        }
    };
    let atoms: crate::measure::AtomFn = Arc::new(move |i: usize| {
        let n = site(i);
        let u = p.powi(n as i32);
        let w = kconst * p.powf(n as f64 * lambda)
            / q_pochhammer_inf(-c * u, p).unwrap_or(f64::INFINITY);
        Some((u, w))
    });
    let minus_c_inf = q_pochhammer_inf(-c, p)?;
    let tail: crate::measure::AtomTailFn = Arc::new(move |i: usize| {
        if i == 0 {
            return f64::INFINITY;
        }
        // next positive site and next negative site not yet emitted
        let n_pos = (site(i).max(site(i + 1)).max(1)) as f64;
        let k_neg = (-site(i).min(site(i + 1)).min(-1)) as f64;
        // n → +∞: locations ≤ 1, mass_n ≤ K p^{nλ}, ratio ≤ p^λ
        let rho_plus = p.powf(lambda);
        let plus = 3.0 * kconst.abs() * p.powf(n_pos * lambda) / (1.0 - rho_plus);
        // n = -k: (−cp^{-k};p)_∞ ≥ c^k p^{-k(k+1)/2} (−c;p)_∞, weight ≤ 3p^{-2k}
        let bound_minus = |k: f64| {
            3.0 * kconst.abs() / minus_c_inf
                * p.powf(-k * lambda + k * (k + 1.0) / 2.0 - 2.0 * k)
                * c.powf(-k)
        };
        let ratio_minus = p.powf(k_neg + 1.0 - lambda - 2.0) / c;
        let minus = if ratio_minus < 0.5 {
            2.0 * bound_minus(k_neg)
        } else {
            f64::INFINITY
        };
        plus + minus
    });
    Ok(FamilyMember {
        family: "q_laguerre_discrete",
        measure: Measure::Discrete { atoms, tail },
        mean: m,
        variance: lambda_q * m * m,
        spec,
        probability: true,
    })
}

// ---------------------------------------------------------------------------
// q = ∞: any centered generator with variance 1/λ spawns a family
// ---------------------------------------------------------------------------

/// A base generator for the q = ∞ construction: a measure with mean 0 and
/// variance 1/λ together with its third moment.
pub struct QInfGenerator {
    pub label: &'static str,
    pub measure: Measure,
    pub third_moment: f64,
    /// Extreme support points, enough to certify `1 + λmu ≥ 0` (the factor
    /// is linear in u).
    pub extremes: (f64, f64),
}

/// Symmetric two-point generator `½(δ_{-1/√λ} + δ_{1/√λ})`.
pub fn q_inf_two_point(lambda: f64) -> Result<QInfGenerator> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("need lambda > 0, got {lambda}")));
    }
    let x = 1.0 / lambda.sqrt();
    let atoms: Vec<(f64, f64)> = vec![(-x, 0.5), (x, 0.5)];
    let list = atoms.clone();
    Ok(QInfGenerator {
        label: "two_point",
        measure: Measure::Discrete {
            atoms: Arc::new(move |i| list.get(i).copied()),
            tail: Arc::new(move |i| if i < 2 { 3.0 } else { 0.0 }),
        },
        third_moment: 0.0,
        extremes: (-x, x),
    })
}

/// Semicircle generator of radius `2/√λ` (variance 1/λ, third moment 0).
pub fn q_inf_semicircle(lambda: f64) -> Result<QInfGenerator> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("need lambda > 0, got {lambda}")));
    }
    let r = 2.0 / lambda.sqrt();
    let density: crate::measure::DensityFn = Arc::new(move |u: f64| {
        let t = r * r - u * u;
        if t <= 0.0 {
            0.0
        } else {
            2.0 * t.sqrt() / (std::f64::consts::PI * r * r)
        }
    });
    // inset core: the √ endpoints are certified by a δ^{3/2} sliver bound
    let amp = 2.0 / (std::f64::consts::PI * r * r) * (1.0 + r + r * r) * (2.0 * r).sqrt();
    let tail: crate::measure::TailFn = Arc::new(move |wl: f64, wr: f64| {
        let dl = (wl + r).max(0.0);
        let dr = (r - wr).max(0.0);
        amp * (dl.powf(1.5) + dr.powf(1.5))
    });
    let delta = 1e-9 * r;
    Ok(QInfGenerator {
        label: "semicircle",
        measure: Measure::Continuous {
            density,
            support: (-r, r),
            core: (-r + delta, r - delta),
            tail,
        },
        third_moment: 0.0,
        extremes: (-r, r),
    })
}

/// Variance of the q = ∞ member at mean m:
/// `V(m) = (1 + λ²T₃ m - λm²)/λ` with `T₃ = ∫u³ C(du)`.
pub fn q_infinity_variance(gen: &QInfGenerator, lambda: f64, m: f64) -> f64 {
    (1.0 + lambda * lambda * gen.third_moment * m - lambda * m * m) / lambda
}

/// Member `(1 + λmu) C(du)` of the q = ∞ family; errors with the offending
/// u if the weight goes negative on the support of C.
pub fn q_infinity_family(gen: &QInfGenerator, lambda: f64, m: f64) -> Result<FamilyMember> {
    let weight = move |u: f64| 1.0 + lambda * m * u;
    for &u in &[gen.extremes.0, gen.extremes.1] {
        if weight(u) < 0.0 {
            return Err(Error::PositivityViolation { location: u });
        }
    }
    let spec = VarianceSpec::custom_series(
        vec![1.0, lambda * lambda * gen.third_moment, -lambda],
        (
            -1.0 / (lambda * gen.extremes.1.abs().max(1e-300)),
            1.0 / (lambda * gen.extremes.0.abs().max(1e-300)),
        ),
        lambda,
    )?;
    let measure = match &gen.measure {
        Measure::Discrete { atoms, tail } => {
            let atoms = Arc::clone(atoms);
            let tail = Arc::clone(tail);
            let wmax = 1.0 + lambda * m.abs() * gen.extremes.1.abs().max(gen.extremes.0.abs());
            Measure::Discrete {
                atoms: Arc::new(move |i| atoms(i).map(|(u, w)| (u, w * weight(u)))),
                tail: Arc::new(move |i| wmax * tail(i)),
            }
        }
        Measure::Continuous {
            density,
            support,
            core,
            tail,
        } => {
            let density = Arc::clone(density);
            let tail = Arc::clone(tail);
            let wmax = 1.0 + lambda * m.abs() * gen.extremes.1.abs().max(gen.extremes.0.abs());
            Measure::Continuous {
                density: Arc::new(move |u| density(u) * weight(u)),
                support: *support,
                core: *core,
                tail: Arc::new(move |wl, wr| wmax * tail(wl, wr)),
            }
        }
        Measure::Mixed { .. } => {
            return Err(Error::Domain(
                "mixed generators are not wired for the q = ∞ family".into(),
            ))
        }
    };
    Ok(FamilyMember {
        family: "q_infinity",
        measure,
        mean: m,
        variance: q_infinity_variance(gen, lambda, m),
        spec,
        probability: true,
    })
}

// ---------------------------------------------------------------------------
// Hahn-shifted families (θ = 1)
// ---------------------------------------------------------------------------

/// Wall-family weight `w(m, u) = a^{ln u / ln q} (aq; q)_∞`, `a = (1-m)/q`.
pub fn wall_weight(q: f64, m: f64, u: f64) -> Result<f64> {
    if !(0.0 < q && q < 1.0) {
        return Err(Error::Domain(format!("need 0 < q < 1, got q = {q}")));
    }
    if !(0.0 < m && m < 1.0) {
        return Err(Error::Domain(format!("need 0 < m < 1, got m = {m}")));
    }
    if !(u > 0.0) {
        return Err(Error::Domain(format!("need u > 0, got u = {u}")));
    }
    let a = (1.0 - m) / q;
    Ok(a.powf(u.ln() / q.ln()) * q_pochhammer_inf(a * q, q)?)
}

/// Wall family: atoms at q^n with masses `(1-m)^n (aq;q)_∞ / (q;q)_n`; the
/// shifted analogue of the q-binomial family with
/// `V(m) = m(1-m)(1-q)` on 0 < m < 1.
pub fn wall_family(q: f64, m: f64) -> Result<FamilyMember> {
    if !(0.0 < q && q < 1.0) {
        return Err(Error::Domain(format!("need 0 < q < 1, got q = {q}")));
    }
    if !(0.0 < m && m < 1.0) {
        return Err(Error::Domain(format!("need 0 < m < 1, got m = {m}")));
    }
    let spec = VarianceSpec::quadratic(0.0, 1.0 - q, -(1.0 - q), (0.0, 1.0), 1.0)?;
    let aq = 1.0 - m;
    let amp = q_pochhammer_inf(aq, q)?;
    let qq_inf = q_pochhammer_inf(q, q)?;
    let atoms: crate::measure::AtomFn = Arc::new(move |i: usize| {
        let mut mass = amp * aq.powi(i as i32);
        for k in 1..=i {
            mass /= 1.0 - q.powi(k as i32);
        }
        Some((q.powi(i as i32), mass))
    });
    let tail: crate::measure::AtomTailFn =
        Arc::new(move |i: usize| 3.0 * amp / qq_inf * aq.powi(i as i32) / (1.0 - aq));
    Ok(FamilyMember {
        family: "wall",
        measure: Measure::Discrete { atoms, tail },
        mean: m,
        variance: spec.variance_at(m),
        spec,
        probability: true,
    })
}

/// Al-Salam–Carlitz weight `w(m, u) = a^{-ln u/ln p} (ap/u; p)_∞`,
/// `a = m - 1`.
///
/// The printed weight reads `(aq/u; p)_∞` with q = 1/p; summing the lattice
/// with the `Σ p^{k²} a^k / ((p;p)_k (ap;p)_k) = 1/(ap;p)_∞` identity forces
/// `(ap/u; p)_∞`, under which the total mass is exactly 1.
pub fn al_salam_carlitz_weight(p: f64, m: f64, u: f64) -> Result<f64> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Domain(format!("need 0 < p < 1, got p = {p}")));
    }
    if !(m > 1.0) {
        return Err(Error::Domain(format!("need m > 1, got m = {m}")));
    }
    if !(u > 0.0) {
        return Err(Error::Domain(format!("need u > 0, got u = {u}")));
    }
    let a = m - 1.0;
    Ok(a.powf(-u.ln() / p.ln()) * q_pochhammer_inf(a * p / u, p)?)
}

/// Al-Salam–Carlitz family: atoms at p^{-n} with masses
/// `(ap;p)_∞ a^n p^{n²} / ((p;p)_n (ap;p)_n)`, `a = m-1`; the shifted
/// q-analogue of the Poisson family with `V(m) = (1-p)(m-1)/p` on m > 1.
///
/// Needs `(m-1)p < 1`: beyond that the printed masses go negative and no
/// probability member exists on this lattice.
pub fn al_salam_carlitz_family(p: f64, m: f64) -> Result<FamilyMember> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Domain(format!("need 0 < p < 1, got p = {p}")));
    }
    if !(m > 1.0) {
        return Err(Error::Domain(format!("need m > 1, got m = {m}")));
    }
    let a = m - 1.0;
    if !(a * p < 1.0) {
        return Err(Error::Domain(format!(
            "al_salam_carlitz_family needs (m-1)p < 1, got {}",
            a * p
        )));
    }
    let spec = VarianceSpec::quadratic(
        -(1.0 - p) / p,
        (1.0 - p) / p,
        0.0,
        (1.0, 1.0 + 1.0 / p),
        1.0,
    )?;
    let amp = q_pochhammer_inf(a * p, p)?;
    let floor = q_pochhammer_inf(p, p)? * amp;
    let atoms: crate::measure::AtomFn = Arc::new(move |i: usize| {
        let mut mass = amp * a.powi(i as i32) * p.powi((i * i) as i32);
        for k in 1..=i {
            mass /= (1.0 - p.powi(k as i32)) * (1.0 - a * p.powi(k as i32));
        }
        Some((p.powi(-(i as i32)), mass))
    });
    let tail: crate::measure::AtomTailFn = Arc::new(move |i: usize| {
        let k = i as f64;
        let bound = 3.0 * amp / floor * a.powf(k) * p.powf(k * k - 2.0 * k);
        let ratio = a * p.powf(2.0 * k - 1.0) / ((1.0 - p) * (1.0 - a * p));
        if ratio < 0.5 {
            2.0 * bound
        } else if i == 0 {
            f64::INFINITY
        } else {
            f64::INFINITY
        }
    });
    Ok(FamilyMember {
        family: "al_salam_carlitz",
        measure: Measure::Discrete { atoms, tail },
        mean: m,
        variance: spec.variance_at(m),
        spec,
        probability: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::moment_report;
    use crate::qfam::q_derivative;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() < tol,
            "actual {actual:e} vs expected {expected:e} (tol {tol:e})"
        );
    }

    #[test]
    fn hahn_derivative_basics() {
        // annihilates constants, maps x to 1
        assert_eq!(hahn_derivative(|_| 3.0, 0.5, 1.0, 2.0).unwrap(), 0.0);
        assert_close(hahn_derivative(|x| x, 0.5, 1.0, 2.0).unwrap(), 1.0, 1e-15);
        // x² with θ = 1: (1+q)x + (1-q) at (q,x) = (0.5, 2) → 3.5
        assert_close(
            hahn_derivative(|x| x * x, 0.5, 1.0, 2.0).unwrap(),
            3.5,
            1e-13,
        );
        assert!(hahn_derivative(|x| x, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn q_laguerre_continuous_normalizes() {
        for &(p, lambda, m) in &[(0.5, 1.0, 1.0), (0.5, 2.0, 0.7), (0.3, 1.5, 1.2)] {
            let params = PParams::new(p, lambda).unwrap();
            let member = q_laguerre_member(&params, m).unwrap();
            let rep = moment_report(&member, 1e-8).unwrap();
            assert_close(rep.mass, 1.0, 1e-6);
            assert_close(rep.mean, m, 1e-6);
            assert_close(rep.variance, params.lambda_q() * m * m, 1e-5);
        }
    }

    #[test]
    fn q_laguerre_q_difference_equation() {
        // D_{q,m} w = p(1-p^λ)/(m²(1-p)) w (u-m), q = 1/p
        let params = PParams::new(0.5, 1.0).unwrap();
        let (m, u) = (1.0, 2.0);
        let q = 1.0 / params.p;
        let w = q_laguerre_continuous(&params, m, u).unwrap();
        let dq = q_derivative(|t| q_laguerre_continuous(&params, t, u).unwrap(), q, m).unwrap();
        let coeff = params.p * (1.0 - params.p.powf(params.lambda))
            / (m * m * (1.0 - params.p));
        let residual = (dq - coeff * w * (u - m)).abs();
        assert!(residual < 1e-10 * (1.0 + w.abs()), "residual {residual}");
    }

    #[test]
    fn q_laguerre_integer_lambda_is_analytic_limit() {
        // the ratio at λ = 1 must match nearby non-integer evaluations
        let p = 0.5;
        let at = sin_over_pochhammer(1.0, p);
        let near = sin_over_pochhammer(1.0 + 1e-7, p);
        assert_close(at, near, 1e-6 * at.abs());
        let far_lo = sin_over_pochhammer(0.995, p);
        let far_hi = sin_over_pochhammer(1.005, p);
        let mid = 0.5 * (far_lo + far_hi);
        assert_close(at, mid, 1e-4 * at.abs());
    }

    #[test]
    fn q_laguerre_discrete_normalizes() {
        let params = PParams::new(0.5, 1.0).unwrap();
        let member = q_laguerre_discrete(&params, 1.0).unwrap();
        let rep = moment_report(&member, 1e-10).unwrap();
        assert_close(rep.mass, 1.0, 1e-8);
        assert_close(rep.mean, 1.0, 1e-7);
        assert_close(rep.variance, params.lambda_q(), 1e-6);
    }

    #[test]
    fn q_laguerre_analogues_share_everything() {
        // same q-difference equation, same variance function
        let params = PParams::new(0.5, 1.5).unwrap();
        let (m, u) = (0.8, 0.5);
        let q = 1.0 / params.p;
        let coeff =
            params.p * (1.0 - params.p.powf(params.lambda)) / (m * m * (1.0 - params.p));
        let w = q_laguerre_discrete_weight(&params, m, u).unwrap();
        let dq = q_derivative(
            |t| q_laguerre_discrete_weight(&params, t, u).unwrap(),
            q,
            m,
        )
        .unwrap();
        let residual = (dq - coeff * w * (u - m)).abs();
        assert!(residual < 1e-10 * (1.0 + w.abs()), "residual {residual}");
        let cont = q_laguerre_member(&params, m).unwrap();
        let disc = q_laguerre_discrete(&params, m).unwrap();
        assert_eq!(cont.variance, disc.variance);
    }

    #[test]
    fn q_infinity_two_generators_same_variance_function() {
        let lambda = 1.0;
        let m = 0.3;
        let two = q_inf_two_point(lambda).unwrap();
        let semi = q_inf_semicircle(lambda).unwrap();
        let member_two = q_infinity_family(&two, lambda, m).unwrap();
        let member_semi = q_infinity_family(&semi, lambda, m).unwrap();
        // identical v(m) = 1 - λm² (both have T₃ = 0) …
        assert_eq!(member_two.variance, member_semi.variance);
        // … but genuinely different measures
        let rep_two = moment_report(&member_two, 1e-10).unwrap();
        let rep_semi = moment_report(&member_semi, 1e-9).unwrap();
        assert_close(rep_two.mass, 1.0, 1e-9);
        assert_close(rep_semi.mass, 1.0, 1e-8);
        assert_close(rep_two.mean, m, 1e-9);
        assert_close(rep_semi.mean, m, 1e-8);
        assert_close(rep_two.variance, member_two.variance, 1e-8);
        assert_close(rep_semi.variance, member_semi.variance, 1e-8);
        let fourth_two =
            crate::measure::apply_operator(&member_two, &|u: f64| u.powi(4), 1e-9).unwrap();
        let fourth_semi =
            crate::measure::apply_operator(&member_semi, &|u: f64| u.powi(4), 1e-9).unwrap();
        assert!(
            (fourth_two - fourth_semi).abs() > 0.5,
            "fourth moments should separate the two generators"
        );
    }

    #[test]
    fn q_infinity_mean_is_m_for_any_admissible_generator() {
        let lambda = 2.0;
        for gen in [q_inf_two_point(lambda).unwrap(), q_inf_semicircle(lambda).unwrap()] {
            for &m in &[-0.3, 0.0, 0.3] {
                let member = q_infinity_family(&gen, lambda, m).unwrap();
                let rep = moment_report(&member, 1e-10).unwrap();
                assert_close(rep.mean, m, 1e-8);
            }
        }
    }

    #[test]
    fn q_infinity_positivity_violation_reported() {
        let lambda = 1.0;
        let gen = q_inf_two_point(lambda).unwrap();
        // m beyond 1/(λ·max|u|) = 1 breaks 1 + λmu at u = -1
        match q_infinity_family(&gen, lambda, 1.5) {
            Err(Error::PositivityViolation { location }) => {
                assert_close(location, -1.0, 1e-12);
            }
            Err(other) => panic!("expected positivity violation, got {other:?}"),
            Ok(_) => panic!("expected positivity violation, got a member"),
        }
    }

    #[test]
    fn wall_family_moments() {
        let member = wall_family(0.5, 0.5).unwrap();
        let rep = moment_report(&member, 1e-12).unwrap();
        assert_close(rep.mass, 1.0, 1e-10);
        assert_close(rep.mean, 0.5, 1e-9);
        assert_close(rep.variance, 0.5 * 0.5 * 0.5, 1e-8);
    }

    #[test]
    fn wall_hahn_equation() {
        let (q, m, u) = (0.5, 0.5, 0.25);
        let w = wall_weight(q, m, u).unwrap();
        let dh = hahn_derivative(|t| wall_weight(q, t, u).unwrap(), q, 1.0, m).unwrap();
        let residual = (dh - w * (u - m) / ((1.0 - q) * m * (1.0 - m))).abs();
        assert!(residual < 1e-10 * (1.0 + w.abs()), "residual {residual}");
    }

    #[test]
    fn wall_mass_concentrates_at_one_as_q_drops() {
        let m = 0.95;
        let mut prev = 0.0;
        for &q in &[0.5, 0.2, 0.05, 0.01] {
            let member = wall_family(q, m).unwrap();
            let mass_at_one = match &member.measure {
                Measure::Discrete { atoms, .. } => atoms(0).unwrap().1,
                _ => unreachable!(),
            };
            assert!(
                mass_at_one > prev,
                "mass at u=1 should increase as q decreases"
            );
            prev = mass_at_one;
        }
        assert!(prev > 0.9, "mass at u=1 should approach m = 0.95, got {prev}");
        assert_close(prev, m, 0.01);
    }

    #[test]
    fn al_salam_carlitz_moments() {
        let member = al_salam_carlitz_family(0.5, 1.5).unwrap();
        let rep = moment_report(&member, 1e-10).unwrap();
        assert_close(rep.mass, 1.0, 1e-8);
        assert_close(rep.mean, 1.5, 1e-7);
        assert_close(rep.variance, 0.5 * 0.5 / 0.5, 1e-6);
    }

    #[test]
    fn al_salam_carlitz_hahn_equation() {
        let (p, m, u) = (0.5, 1.5, 2.0);
        let q = 1.0 / p;
        let w = al_salam_carlitz_weight(p, m, u).unwrap();
        let dh = hahn_derivative(|t| al_salam_carlitz_weight(p, t, u).unwrap(), q, 1.0, m)
            .unwrap();
        let residual = (dh - (p / (1.0 - p)) * w * (u - m) / (m - 1.0)).abs();
        assert!(residual < 1e-10 * (1.0 + w.abs()), "residual {residual}");
    }

    #[test]
    fn al_salam_carlitz_domain_errors() {
        assert!(al_salam_carlitz_family(0.5, 1.0).is_err());
        assert!(al_salam_carlitz_family(0.5, 0.5).is_err());
        // (m-1)p ≥ 1 has no probability member
        assert!(al_salam_carlitz_family(0.5, 3.5).is_err());
    }
}
