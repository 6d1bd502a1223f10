//! Observable dictionaries and lifting.
//!
//! A [`Dictionary`] is an ordered list of labelled scalar functions of the
//! state. Four of them must be the identity observables `s, i, r, d`; their
//! positions form the linear block used to read states back out of lifted
//! vectors.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::model::StateVec;
use crate::nsfd::Trajectory;
use crate::{Error, Result};

type ObservableFn = dyn Fn(&StateVec) -> f64 + Send + Sync;

/// A labelled scalar function of the state.
#[derive(Clone)]
pub struct Observable {
    label: String,
    needs_living: bool,
    eval: Arc<ObservableFn>,
}

impl Observable {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(&StateVec) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Observable {
            label: label.into(),
            needs_living: false,
            eval: Arc::new(f),
        }
    }

    /// An observable that divides by the living fraction `1 - d`; lifting
    /// checks the guard before evaluating it.
    pub fn rational(
        label: impl Into<String>,
        f: impl Fn(&StateVec) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Observable {
            needs_living: true,
            ..Observable::new(label, f)
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &StateVec) -> f64 {
        (self.eval)(x)
    }
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("label", &self.label)
            .field("needs_living", &self.needs_living)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub struct Dictionary {
    name: String,
    observables: Vec<Observable>,
    linear_block: [usize; 4],
    needs_living: bool,
}

impl Dictionary {
    /// Builds a dictionary. `linear_block` gives the indices of the `s, i, r, d`
    /// identity observables in that order; they are probed at a few simplex
    /// points to make sure they really are identities.
    pub fn new(
        name: impl Into<String>,
        observables: Vec<Observable>,
        linear_block: [usize; 4],
    ) -> Result<Self> {
        let name = name.into();
        let mut seen = HashSet::new();
        for o in &observables {
            if !seen.insert(o.label.as_str()) {
                return Err(Error::Config(format!(
                    "dictionary {name}: duplicate label '{}'",
                    o.label
                )));
            }
        }
        if observables.len() < 4 {
            return Err(Error::Config(format!(
                "dictionary {name}: needs at least 4 observables, has {}",
                observables.len()
            )));
        }
        if linear_block.iter().collect::<HashSet<_>>().len() != 4
            || linear_block.iter().any(|&j| j >= observables.len())
        {
            return Err(Error::Config(format!(
                "dictionary {name}: invalid linear block {linear_block:?}"
            )));
        }
        let probes = [
            StateVec::new(0.4, 0.3, 0.2, 0.1),
            StateVec::new(0.125, 0.5, 0.25, 0.125),
        ];
        for x in &probes {
            let want = x.to_array();
            for (c, &j) in linear_block.iter().enumerate() {
                if observables[j].eval(x) != want[c] {
                    return Err(Error::Config(format!(
                        "dictionary {name}: observable '{}' is not the identity on {}",
                        observables[j].label,
                        ["s", "i", "r", "d"][c]
                    )));
                }
            }
        }
        let needs_living = observables.iter().any(|o| o.needs_living);
        Ok(Dictionary {
            name,
            observables,
            linear_block,
            needs_living,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of observables `N`.
    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn labels(&self) -> Vec<&str> {
        self.observables.iter().map(|o| o.label()).collect()
    }

    pub fn linear_block(&self) -> [usize; 4] {
        self.linear_block
    }

    /// Reads `(s, i, r, d)` from the identity entries of a lifted vector.
    pub fn readback(&self, values: &DVector<f64>) -> StateVec {
        let [a, b, c, d] = self.linear_block;
        StateVec::new(values[a], values[b], values[c], values[d])
    }
}

/// A state mapped into observable space.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedVec {
    pub values: DVector<f64>,
    pub dictionary: String,
}

fn identity(label: &'static str, c: usize) -> Observable {
    Observable::new(label, move |x: &StateVec| x.to_array()[c])
}

fn incidence() -> Observable {
    Observable::rational("s*i/(1-d)", |x: &StateVec| x.s * x.i / (1.0 - x.d))
}

fn compartments() -> Vec<Observable> {
    vec![
        identity("s", 0),
        identity("i", 1),
        identity("r", 2),
        identity("d", 3),
    ]
}

/// Minimal dictionary `{s, i, r, d, s*i/(1-d)}`.
pub fn dictionary_d1() -> Dictionary {
    let mut obs = compartments();
    obs.push(incidence());
    Dictionary::new("d1", obs, [0, 1, 2, 3]).expect("d1 is well formed")
}

/// Extended dictionary `{s, i, r, d, s*i, s*r, i*r, s*i/(1-d), s^2, i^2, r^2, d^2}`.
pub fn dictionary_d2() -> Dictionary {
    let mut obs = compartments();
    obs.extend([
        Observable::new("s*i", |x: &StateVec| x.s * x.i),
        Observable::new("s*r", |x: &StateVec| x.s * x.r),
        Observable::new("i*r", |x: &StateVec| x.i * x.r),
        incidence(),
        Observable::new("s^2", |x: &StateVec| x.s * x.s),
        Observable::new("i^2", |x: &StateVec| x.i * x.i),
        Observable::new("r^2", |x: &StateVec| x.r * x.r),
        Observable::new("d^2", |x: &StateVec| x.d * x.d),
    ]);
    Dictionary::new("d2", obs, [0, 1, 2, 3]).expect("d2 is well formed")
}

/// Looks up one of the built-in dictionaries by name (`d1` or `d2`).
pub fn builtin(name: &str) -> Option<Dictionary> {
    match name.to_ascii_lowercase().as_str() {
        "d1" => Some(dictionary_d1()),
        "d2" => Some(dictionary_d2()),
        _ => None,
    }
}

/// Evaluates every observable of `dict` at `x`.
pub fn lift(x: &StateVec, dict: &Dictionary) -> Result<LiftedVec> {
    if dict.needs_living {
        x.living()?;
    }
    let values = DVector::from_iterator(dict.len(), dict.observables.iter().map(|o| o.eval(x)));
    if let Some(j) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Format {
            what: "lifted vector",
            detail: format!("observable '{}' is not finite", dict.observables[j].label),
        });
    }
    Ok(LiftedVec {
        values,
        dictionary: dict.name.clone(),
    })
}

/// Lifts every state of a trajectory, preserving order.
pub fn lift_trajectory(traj: &Trajectory, dict: &Dictionary) -> Result<Vec<LiftedVec>> {
    traj.states
        .iter()
        .enumerate()
        .map(|(k, x)| lift(x, dict).map_err(|e| e.at_step(k)))
        .collect()
}
