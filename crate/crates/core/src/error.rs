use std::fmt;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One failed simplex invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum SimplexViolation {
    NonFinite,
    Sum { sum: f64 },
    Negative { compartment: char, value: f64 },
    NoLivingPopulation { d: f64 },
}

impl fmt::Display for SimplexViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimplexViolation::NonFinite => write!(f, "non-finite component"),
            SimplexViolation::Sum { sum } => write!(f, "components sum to {sum}, expected 1"),
            SimplexViolation::Negative { compartment, value } => {
                write!(f, "{compartment} = {value} is negative")
            }
            SimplexViolation::NoLivingPopulation { d } => {
                write!(f, "d = {d} leaves no living population")
            }
        }
    }
}

/// Errors returned by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The living fraction `1 - d` fell below the division guard.
    #[error("domain error: 1 - d = {living} is below the guard{}", step_suffix(*.step))]
    Domain { living: f64, step: Option<usize> },

    /// A state failed one or more simplex invariants.
    #[error("state is not on the epidemic simplex{}: {}", step_suffix(*.step), join(.violations))]
    Simplex {
        violations: Vec<SimplexViolation>,
        step: Option<usize>,
    },

    /// Rates or integrator settings are out of their admissible range.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("decomposition did not converge: {0}")]
    Convergence(&'static str),

    /// A zero eigenvalue has no continuous-time rate.
    #[error("eigenvalue {index} is zero; its continuous rate is -inf")]
    ZeroEigenvalue { index: usize },

    /// A free run left the representable range.
    #[error("free run diverged at step {step}: |entry| = {magnitude:e}")]
    Overflow { step: usize, magnitude: f64 },

    #[error("unknown preset '{0}' (expected covid, influenza, ebola or measles)")]
    UnknownPreset(String),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse error classes, used by the CLI for its exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Numeric,
    Io,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::UnknownPreset(_) | Error::Simplex { step: None, .. } => {
                ErrorCategory::Config
            }
            Error::Io { .. } | Error::Format { .. } => ErrorCategory::Io,
            _ => ErrorCategory::Numeric,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Attaches a step index to errors raised inside an iteration.
    pub(crate) fn at_step(self, k: usize) -> Self {
        match self {
            Error::Domain { living, .. } => Error::Domain {
                living,
                step: Some(k),
            },
            Error::Simplex { violations, .. } => Error::Simplex {
                violations,
                step: Some(k),
            },
            other => other,
        }
    }
}

fn step_suffix(step: Option<usize>) -> String {
    step.map(|k| format!(" at step {k}")).unwrap_or_default()
}

fn join(v: &[SimplexViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
