//! Normalized SIRSD state space, rates, vector field and Jacobian.
//!
//! States are proportions `(s, i, r, d)` of the initial population. The
//! living fraction is `1 - d`, so every rational term carries a guard on `d`.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, SimplexViolation};

/// Absolute tolerance on `s + i + r + d = 1`, also applied to the sign of each component.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Smallest admissible living fraction `1 - d`.
pub const LIVING_GUARD: f64 = 1e-12;

/// The four rates defining a disease, all per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams {
    /// Transmission rate.
    pub beta: f64,
    /// Recovery rate.
    pub gamma: f64,
    /// Disease-induced mortality rate.
    pub mu: f64,
    /// Immunity-loss rate (R back to S).
    pub omega: f64,
}

impl EpidemicParams {
    /// Builds a parameter set, checking `beta, gamma, mu > 0` and `omega >= 0`.
    pub fn new(beta: f64, gamma: f64, mu: f64, omega: f64) -> Result<Self> {
        let p = EpidemicParams {
            beta,
            gamma,
            mu,
            omega,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("beta", self.beta), ("gamma", self.gamma), ("mu", self.mu)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return Err(Error::Config(format!(
                "omega must be non-negative, got {}",
                self.omega
            )));
        }
        Ok(())
    }
}

/// Compartment proportions. Construction is unchecked so that free-run
/// predictions, which may leave the simplex, share the type; use
/// [`validate_state`] at API boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVec {
    pub s: f64,
    pub i: f64,
    pub r: f64,
    pub d: f64,
}

impl StateVec {
    pub const fn new(s: f64, i: f64, r: f64, d: f64) -> Self {
        StateVec { s, i, r, d }
    }

    /// `(1 - i0, i0, 0, 0)`.
    pub fn seeded(i0: f64) -> Self {
        StateVec::new(1.0 - i0, i0, 0.0, 0.0)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.s, self.i, self.r, self.d]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        StateVec::new(a[0], a[1], a[2], a[3])
    }

    pub fn sum(&self) -> f64 {
        self.s + self.i + self.r + self.d
    }

    /// Living fraction `1 - d`, or a domain error when it is below [`LIVING_GUARD`].
    pub fn living(&self) -> Result<f64> {
        let living = 1.0 - self.d;
        if living < LIVING_GUARD || living.is_nan() {
            return Err(Error::Domain { living, step: None });
        }
        Ok(living)
    }

    pub fn max_abs_diff(&self, other: &StateVec) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Time derivatives of the four proportions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DerivVec {
    pub ds: f64,
    pub di: f64,
    pub dr: f64,
    pub dd: f64,
}

impl DerivVec {
    pub fn to_array(self) -> [f64; 4] {
        [self.ds, self.di, self.dr, self.dd]
    }

    pub fn sum(&self) -> f64 {
        self.ds + self.di + self.dr + self.dd
    }
}

/// Checks the simplex invariants, reporting every one that fails.
pub fn validate_state(x: StateVec) -> Result<StateVec> {
    let mut violations = Vec::new();
    let comps = x.to_array();
    if comps.iter().any(|v| !v.is_finite()) {
        violations.push(SimplexViolation::NonFinite);
    } else {
        let sum = x.sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            violations.push(SimplexViolation::Sum { sum });
        }
        for (c, v) in ['s', 'i', 'r', 'd'].into_iter().zip(comps) {
            if v < -SIMPLEX_TOL {
                violations.push(SimplexViolation::Negative {
                    compartment: c,
                    value: v,
                });
            }
        }
        if 1.0 - x.d < LIVING_GUARD {
            violations.push(SimplexViolation::NoLivingPopulation { d: x.d });
        }
    }
    if violations.is_empty() {
        Ok(x)
    } else {
        Err(Error::Simplex {
            violations,
            step: None,
        })
    }
}

/// Right-hand side of the normalized system with frequency-dependent incidence
/// `beta * s * i / (1 - d)`.
pub fn vector_field(x: &StateVec, p: &EpidemicParams) -> Result<DerivVec> {
    let living = x.living()?;
    let incidence = p.beta * x.s * x.i / living;
    Ok(DerivVec {
        ds: -incidence + p.omega * x.r,
        di: incidence - (p.gamma + p.mu) * x.i,
        dr: p.gamma * x.i - p.omega * x.r,
        dd: p.mu * x.i,
    })
}

/// Analytic Jacobian of [`vector_field`] with rows `(ds, di, dr, dd)` and
/// columns `(s, i, r, d)`.
pub fn jacobian(x: &StateVec, p: &EpidemicParams) -> Result<Matrix4<f64>> {
    let living = x.living()?;
    let (b, g, m, w) = (p.beta, p.gamma, p.mu, p.omega);
    let di_ds = b * x.i / living;
    let di_di = b * x.s / living;
    let di_dd = b * x.s * x.i / (living * living);
    #[rustfmt::skip]
    let j = Matrix4::new(
        -di_ds, -di_di,           w,  -di_dd,
         di_ds,  di_di - (g + m), 0.0, di_dd,
         0.0,    g,               -w,  0.0,
         0.0,    m,               0.0, 0.0,
    );
    Ok(j)
}
