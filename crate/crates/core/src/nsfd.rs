//! Nonstandard finite difference (NSFD) integration of the normalized model.
//!
//! Each step solves the three semi-implicit updates in sequence:
//!
//! ```text
//! s' = (s + omega*r*phi) / (1 + beta*i*phi/(1-d))
//! i' = (i + beta*s'*i*phi/(1-d)) / (1 + (gamma+mu)*phi)
//! r' = (r + gamma*i'*phi) / (1 + omega*phi)
//! d' = 1 - s' - i' - r'
//! ```
//!
//! Numerators are non-negative and denominators are at least one, so the
//! living compartments stay non-negative for any step size.

use serde::{Deserialize, Serialize};

use crate::model::{validate_state, vector_field, EpidemicParams, StateVec};
use crate::{Error, Result};

/// How `d` is advanced after `s, i, r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MortalityUpdate {
    /// `d' = 1 - s' - i' - r'`; exact discrete conservation.
    #[default]
    Closure,
    /// `d' = d + mu*i'*phi + omega*(r' - r)`. Only conservative when `omega = 0`;
    /// kept for comparison with the closure form.
    Differential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsfdConfig {
    /// Step size `k`.
    pub dt: f64,
    /// Rate in the denominator function; `0` means `phi = dt`.
    pub eta: f64,
    pub t_end: f64,
    pub initial: StateVec,
    pub mortality: MortalityUpdate,
}

impl NsfdConfig {
    pub fn new(dt: f64, t_end: f64, initial: StateVec) -> Self {
        NsfdConfig {
            dt,
            eta: 0.0,
            t_end,
            initial,
            mortality: MortalityUpdate::Closure,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::Config(format!(
                "t_end must be at least dt, got t_end={} dt={}",
                self.t_end, self.dt
            )));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::Config(format!(
                "eta must be non-negative, got {}",
                self.eta
            )));
        }
        validate_state(self.initial)?;
        Ok(())
    }

    /// Number of steps `M = round(t_end / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Uniformly sampled sequence of states starting at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<StateVec>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(|k| self.time(k))
    }

    /// Checks that every state lies on the simplex and that there are at least two samples.
    pub fn validate(&self) -> Result<()> {
        if self.states.len() < 2 {
            return Err(Error::Dimension(format!(
                "trajectory needs at least 2 states, has {}",
                self.states.len()
            )));
        }
        for (k, x) in self.states.iter().enumerate() {
            validate_state(*x).map_err(|e| e.at_step(k))?;
        }
        Ok(())
    }

    /// Keeps every `stride`-th sample.
    pub fn subsample(&self, stride: usize) -> Trajectory {
        assert!(stride > 0, "stride must be positive");
        Trajectory {
            t0: self.t0,
            dt: self.dt * stride as f64,
            states: self.states.iter().step_by(stride).copied().collect(),
        }
    }

    /// Largest component-wise absolute difference over all samples.
    pub fn sup_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "trajectory lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max))
    }
}

/// Denominator function `phi(dt) = (exp(eta*dt) - 1) / eta`, with `phi = dt` at `eta = 0`.
pub fn denominator_phi(dt: f64, eta: f64) -> f64 {
    if eta == 0.0 {
        dt
    } else {
        // exp_m1 keeps full precision when eta*dt is small.
        (eta * dt).exp_m1() / eta
    }
}

/// One NSFD step with the closure form for `d`.
pub fn nsfd_step(x: &StateVec, p: &EpidemicParams, phi: f64) -> Result<StateVec> {
    nsfd_step_with(x, p, phi, MortalityUpdate::Closure)
}

pub fn nsfd_step_with(
    x: &StateVec,
    p: &EpidemicParams,
    phi: f64,
    mortality: MortalityUpdate,
) -> Result<StateVec> {
    let living = x.living()?;
    // The s-update uses the current r; r' is not yet known at this point.
    let s = (x.s + p.omega * x.r * phi) / (1.0 + p.beta * x.i * phi / living);
    let i = (x.i + p.beta * s * x.i * phi / living) / (1.0 + (p.gamma + p.mu) * phi);
    let r = (x.r + p.gamma * i * phi) / (1.0 + p.omega * phi);
    let d = match mortality {
        MortalityUpdate::Closure => 1.0 - s - i - r,
        MortalityUpdate::Differential => x.d + p.mu * i * phi + p.omega * (r - x.r),
    };
    Ok(StateVec::new(s, i, r, d))
}

/// Iterates [`nsfd_step`] `round(t_end/dt)` times from `cfg.initial`.
pub fn simulate_nsfd(cfg: &NsfdConfig, p: &EpidemicParams) -> Result<Trajectory> {
    cfg.validate()?;
    p.validate()?;
    let phi = denominator_phi(cfg.dt, cfg.eta);
    let steps = cfg.steps();
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = cfg.initial;
    states.push(x);
    for k in 1..=steps {
        x = nsfd_step_with(&x, p, phi, cfg.mortality).map_err(|e| e.at_step(k))?;
        validate_state(x).map_err(|e| e.at_step(k))?;
        states.push(x);
    }
    Ok(Trajectory {
        t0: 0.0,
        dt: cfg.dt,
        states,
    })
}

/// Classical fixed-step RK4 over [`vector_field`] at `cfg.dt`. Used as a
/// convergence oracle for the NSFD scheme; `eta` and `mortality` are ignored.
pub fn simulate_reference(cfg: &NsfdConfig, p: &EpidemicParams) -> Result<Trajectory> {
    cfg.validate()?;
    p.validate()?;
    let h = cfg.dt;
    let steps = cfg.steps();
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = cfg.initial.to_array();
    states.push(cfg.initial);

    let f = |y: [f64; 4]| vector_field(&StateVec::from_array(y), p).map(|d| d.to_array());
    let axpy = |y: [f64; 4], a: f64, k: [f64; 4]| std::array::from_fn(|c| y[c] + a * k[c]);

    for step in 1..=steps {
        let stage = || -> Result<[f64; 4]> {
            let k1 = f(x)?;
            let k2 = f(axpy(x, 0.5 * h, k1))?;
            let k3 = f(axpy(x, 0.5 * h, k2))?;
            let k4 = f(axpy(x, h, k3))?;
            Ok(std::array::from_fn(|c| {
                x[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c])
            }))
        };
        x = stage().map_err(|e| e.at_step(step))?;
        let next = StateVec::from_array(x);
        next.living().map_err(|e| e.at_step(step))?;
        states.push(next);
    }
    Ok(Trajectory {
        t0: 0.0,
        dt: h,
        states,
    })
}
