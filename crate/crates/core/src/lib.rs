//! Normalized SIRSD epidemic dynamics and their Koopman surrogates.
//!
//! The crate is organized as a pipeline:
//!
//! - [`model`]: the normalized compartment state, rates, vector field and Jacobian.
//! - [`nsfd`]: a positivity-preserving nonstandard finite difference integrator
//!   that produces ground-truth trajectories, plus a classical RK4 oracle.
//! - [`dictionary`]: observable dictionaries and lifting of states into them.
//! - [`edmd`]: snapshot matrices, the EDMD least-squares fit, spectra and free-run
//!   prediction.
//! - [`scenarios`]: the four disease presets and the end-to-end experiment.
//! - [`export`]: CSV and JSON artifacts.
//!
//! ```
//! use sirsd_koopman::{dictionary, edmd, nsfd, scenarios::Preset};
//!
//! let preset = Preset::Covid.scenario();
//! let truth = nsfd::simulate_nsfd(&preset.nsfd_config(), &preset.params).unwrap();
//! let d2 = dictionary::dictionary_d2();
//! let lifted = dictionary::lift_trajectory(&truth, &d2).unwrap();
//! let snaps = edmd::build_snapshots(&lifted, truth.dt).unwrap();
//! let model = edmd::fit_edmd(&snaps, edmd::DEFAULT_SVD_TOL).unwrap();
//! let pred = edmd::predict(&model, &truth.states[0], &d2, truth.len() - 1).unwrap();
//! assert_eq!(pred.len(), truth.len());
//! ```

pub mod dictionary;
pub mod edmd;
mod error;
pub mod export;
mod linalg;
pub mod model;
pub mod nsfd;
pub mod scenarios;

pub use error::{Error, ErrorCategory, Result, SimplexViolation};
pub use linalg::pseudoinverse;
