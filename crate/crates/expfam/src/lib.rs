//! Exponential families built from variance functions.
//!
//! A natural exponential family reparameterized by its mean `m` is determined
//! by the variance function `V(m)` on a mean domain `(A, B)`. This crate
//! constructs the classical ε-deformed families (Gaussian, gamma, Poisson and
//! the discrete Gaussian analogue), the q-exponential families for `|q| < 1`
//! through the Al-Salam–Chihara recurrence, the free (q = 0) families built on
//! free-Meixner laws, and the q > 1 and Hahn-shifted lattice families.
//!
//! Every family constructor returns measures whose defining identities —
//! normalization, mean, variance, and the (q-)differential equation
//! `D w = w (u - m) / V(m)` — are numerically certified by the [`harness`]
//! module. Two deliberate counterexamples (the `m√(1-m)` coefficient family
//! and the arcsine weight) are constructed as well; their *failure* of
//! positivity is part of the contract.
//!
//! Module map:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`specfun`] | scalar kernels: modified Bessel, Hermite/Laguerre, terminating ₂F₁, q-Pochhammer |
//! | [`series`] | exact-rational power series and the Lagrange expansion engine |
//! | [`measure`] | measures with certified tails, family members, moment reports |
//! | [`classical`] | ε-deformed families and the rational/square-root coefficient engines |
//! | [`qfam`] | q-exponential weights and Al-Salam–Chihara orthogonal systems |
//! | [`freefam`] | free-Meixner laws, Cauchy/R-transforms, free cumulants |
//! | [`qbig`] | q > 1 families, the q = ∞ construction, Wall and Al-Salam–Carlitz lattices |
//! | [`harness`] | quadrature, certified series summation, validation suite, JSON/CSV export |

pub mod classical;
pub mod freefam;
pub mod harness;
pub mod measure;
pub mod qbig;
pub mod qfam;
pub mod series;
pub mod specfun;

use std::fmt;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    Domain(String),
    /// A value exceeds the representable floating-point range.
    Overflow(String),
    /// A hypergeometric denominator parameter hit a nonpositive integer.
    Pole(String),
    /// An iterative computation did not meet its tolerance within the cap.
    NonConvergence(String),
    /// A recurrence system was queried deeper than it was materialized.
    InsufficientDepth { need: usize, have: usize },
    /// A construction requires pointwise positivity that fails at `location`.
    PositivityViolation { location: f64 },
    /// A structural invariant on parameters is violated.
    InvariantViolation(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Overflow(msg) => write!(f, "overflow: {msg}"),
            Error::Pole(msg) => write!(f, "pole: {msg}"),
            Error::NonConvergence(msg) => write!(f, "did not converge: {msg}"),
            Error::InsufficientDepth { need, have } => {
                write!(f, "recurrence depth {have} insufficient, need {need}")
            }
            Error::PositivityViolation { location } => {
                write!(f, "weight becomes negative at u = {location}")
            }
            Error::InvariantViolation(msg) => write!(f, "invariant violated: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
