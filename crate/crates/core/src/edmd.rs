//! Extended dynamic mode decomposition.
//!
//! Given lifted snapshots `y_0 .. y_M`, the Koopman matrix is the least-squares
//! solution of `Y' ~= K Y`, i.e. `K = Y' Y+` where `Y = [y_0 .. y_{M-1}]`,
//! `Y' = [y_1 .. y_M]` and `Y+` is the truncated-SVD pseudoinverse.

use nalgebra::{Complex, DMatrix, DVector};

use crate::dictionary::{lift, Dictionary, LiftedVec};
use crate::linalg::{eigen_decomposition, eigen_residual, pseudoinverse};
use crate::model::StateVec;
use crate::nsfd::Trajectory;
use crate::{Error, Result};

/// Relative singular-value cutoff used when none is given.
pub const DEFAULT_SVD_TOL: f64 = 1e-10;

/// Free runs abort once any lifted entry exceeds this magnitude.
pub const OVERFLOW_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrices {
    /// Columns `y_0 .. y_{M-1}`.
    pub y: DMatrix<f64>,
    /// Columns `y_1 .. y_M`.
    pub yp: DMatrix<f64>,
    pub dictionary: String,
    pub dt: f64,
}

impl SnapshotMatrices {
    /// `(N, M)`.
    pub fn shape(&self) -> (usize, usize) {
        self.y.shape()
    }
}

pub fn build_snapshots(lifted: &[LiftedVec], dt: f64) -> Result<SnapshotMatrices> {
    if lifted.len() < 2 {
        return Err(Error::Dimension(format!(
            "need at least 2 snapshots, got {}",
            lifted.len()
        )));
    }
    let first = &lifted[0];
    let n = first.values.len();
    for (k, l) in lifted.iter().enumerate() {
        if l.dictionary != first.dictionary || l.values.len() != n {
            return Err(Error::Dimension(format!(
                "snapshot {k} comes from dictionary '{}' (N={}), expected '{}' (N={n})",
                l.dictionary,
                l.values.len(),
                first.dictionary
            )));
        }
    }
    let m = lifted.len() - 1;
    let y = DMatrix::from_fn(n, m, |r, c| lifted[c].values[r]);
    let yp = DMatrix::from_fn(n, m, |r, c| lifted[c + 1].values[r]);
    Ok(SnapshotMatrices {
        y,
        yp,
        dictionary: first.dictionary.clone(),
        dt,
    })
}

/// A fitted finite-dimensional Koopman approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct KoopmanModel {
    pub k: DMatrix<f64>,
    pub dictionary: String,
    pub dt: f64,
    pub svd_tol: f64,
    pub eigenvalues: Vec<Complex<f64>>,
    pub modes: Vec<DVector<Complex<f64>>>,
    /// `||Y' - K Y||_F` on the training snapshots.
    pub residual: f64,
}

impl KoopmanModel {
    /// Wraps an already computed matrix, decomposing it.
    pub fn from_matrix(
        k: DMatrix<f64>,
        dictionary: impl Into<String>,
        dt: f64,
        svd_tol: f64,
        residual: f64,
    ) -> Result<Self> {
        if !k.is_square() {
            return Err(Error::Dimension(format!(
                "Koopman matrix must be square, got {:?}",
                k.shape()
            )));
        }
        let (eigenvalues, modes) = eigen_decomposition(&k)?;
        Ok(KoopmanModel {
            k,
            dictionary: dictionary.into(),
            dt,
            svd_tol,
            eigenvalues,
            modes,
            residual,
        })
    }

    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    /// Largest relative eigen-equation residual over the stored pairs.
    pub fn max_eigen_residual(&self) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.modes)
            .map(|(l, v)| eigen_residual(&self.k, *l, v))
            .fold(0.0, f64::max)
    }
}

/// Fits `K = Y' Y+` and decomposes it.
pub fn fit_edmd(snap: &SnapshotMatrices, svd_tol: f64) -> Result<KoopmanModel> {
    let (_, m) = snap.shape();
    if m < 1 {
        return Err(Error::Dimension("no snapshot pairs".into()));
    }
    if !(svd_tol.is_finite() && svd_tol >= 0.0) {
        return Err(Error::Config(format!(
            "svd_tol must be non-negative, got {svd_tol}"
        )));
    }
    let pinv = pseudoinverse(&snap.y, svd_tol)?;
    let k = &snap.yp * pinv;
    let residual = frobenius_residual(&k, snap);
    KoopmanModel::from_matrix(k, snap.dictionary.clone(), snap.dt, svd_tol, residual)
}

/// `||Y' - K Y||_F` for an arbitrary candidate `K`.
pub fn frobenius_residual(k: &DMatrix<f64>, snap: &SnapshotMatrices) -> f64 {
    (&snap.yp - k * &snap.y).norm()
}

/// One eigenvalue with its continuous-time rate and mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralComponent {
    pub eigenvalue: Complex<f64>,
    /// `ln(lambda) / dt` on the principal branch; `-inf` real part for `lambda = 0`.
    pub continuous_rate: Complex<f64>,
    pub mode: DVector<Complex<f64>>,
}

/// Continuous-time rate of a discrete eigenvalue.
pub fn continuous_rate(lambda: Complex<f64>, dt: f64, index: usize) -> Result<Complex<f64>> {
    if lambda.norm() == 0.0 {
        return Err(Error::ZeroEigenvalue { index });
    }
    Ok(lambda.ln() / dt)
}

/// Spectrum sorted by modulus, conjugate pairs adjacent. Zero eigenvalues
/// get a rate of `-inf + 0i`.
pub fn spectrum(model: &KoopmanModel) -> Vec<SpectralComponent> {
    model
        .eigenvalues
        .iter()
        .zip(&model.modes)
        .enumerate()
        .map(|(j, (&eigenvalue, mode))| SpectralComponent {
            eigenvalue,
            continuous_rate: continuous_rate(eigenvalue, model.dt, j)
                .unwrap_or(Complex::new(f64::NEG_INFINITY, 0.0)),
            mode: mode.clone(),
        })
        .collect()
}

/// Free run: `y_0 = lift(x0)`, `y_{k+1} = K y_k`, reading each state from the
/// identity entries. Predictions are not projected back onto the simplex.
pub fn predict(
    model: &KoopmanModel,
    x0: &StateVec,
    dict: &Dictionary,
    steps: usize,
) -> Result<Trajectory> {
    if model.dictionary != dict.name() || model.dim() != dict.len() {
        return Err(Error::Dimension(format!(
            "model was fitted on '{}' (N={}), dictionary is '{}' (N={})",
            model.dictionary,
            model.dim(),
            dict.name(),
            dict.len()
        )));
    }
    let mut y = lift(x0, dict)?.values;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(dict.readback(&y));
    for step in 1..=steps {
        y = &model.k * &y;
        let magnitude = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if magnitude.is_nan() || magnitude > OVERFLOW_LIMIT {
            return Err(Error::Overflow { step, magnitude });
        }
        states.push(dict.readback(&y));
    }
    Ok(Trajectory {
        t0: 0.0,
        dt: model.dt,
        states,
    })
}

/// Optional post-processing: clip negative components to zero and renormalize
/// each state to sum to one.
pub fn clamp_to_simplex(traj: &Trajectory) -> Trajectory {
    let states = traj
        .states
        .iter()
        .map(|x| {
            let c = x.to_array().map(|v| v.max(0.0));
            let total: f64 = c.iter().sum();
            if total > 0.0 {
                StateVec::from_array(c.map(|v| v / total))
            } else {
                StateVec::new(1.0, 0.0, 0.0, 0.0)
            }
        })
        .collect();
    Trajectory {
        states,
        ..traj.clone()
    }
}

/// Per-compartment values in `s, i, r, d` order.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct PerCompartment<T> {
    pub s: T,
    pub i: T,
    pub r: T,
    pub d: T,
}

impl<T: Copy> PerCompartment<T> {
    pub fn from_array(a: [T; 4]) -> Self {
        PerCompartment {
            s: a[0],
            i: a[1],
            r: a[2],
            d: a[3],
        }
    }

    pub fn to_array(self) -> [T; 4] {
        [self.s, self.i, self.r, self.d]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionError {
    pub rmse: PerCompartment<f64>,
    /// Root mean square of the four per-compartment RMSEs.
    pub total: f64,
    pub max_abs: f64,
    pub max_time: f64,
    pub max_compartment: char,
}

fn check_aligned(truth: &Trajectory, pred: &Trajectory) -> Result<()> {
    if truth.len() != pred.len() || truth.is_empty() {
        return Err(Error::Dimension(format!(
            "trajectory lengths differ: truth {} vs prediction {}",
            truth.len(),
            pred.len()
        )));
    }
    if (truth.dt - pred.dt).abs() > 1e-12 * truth.dt.abs().max(1.0) || truth.t0 != pred.t0 {
        return Err(Error::Dimension(format!(
            "sampling differs: truth dt={} t0={}, prediction dt={} t0={}",
            truth.dt, truth.t0, pred.dt, pred.t0
        )));
    }
    Ok(())
}

pub fn reconstruction_error(truth: &Trajectory, pred: &Trajectory) -> Result<ReconstructionError> {
    check_aligned(truth, pred)?;
    let mut sq = [0.0f64; 4];
    let mut max_abs = 0.0;
    let mut max_at = (0usize, 's');
    for (k, (a, b)) in truth.states.iter().zip(&pred.states).enumerate() {
        for (c, (x, y)) in a.to_array().into_iter().zip(b.to_array()).enumerate() {
            let e = x - y;
            sq[c] += e * e;
            if e.abs() > max_abs {
                max_abs = e.abs();
                max_at = (k, ['s', 'i', 'r', 'd'][c]);
            }
        }
    }
    let count = truth.len() as f64;
    let rmse = sq.map(|v| (v / count).sqrt());
    let total = (rmse.iter().map(|v| v * v).sum::<f64>() / 4.0).sqrt();
    Ok(ReconstructionError {
        rmse: PerCompartment::from_array(rmse),
        total,
        max_abs,
        max_time: truth.time(max_at.0),
        max_compartment: max_at.1,
    })
}

/// Largest absolute state error over samples with `start <= t <= end`.
/// Returns `None` when no sample falls in the window.
pub fn window_max_error(
    truth: &Trajectory,
    pred: &Trajectory,
    start: f64,
    end: f64,
) -> Result<Option<f64>> {
    check_aligned(truth, pred)?;
    let slack = 1e-9 * truth.dt;
    let mut best: Option<f64> = None;
    for (k, (a, b)) in truth.states.iter().zip(&pred.states).enumerate() {
        let t = truth.time(k);
        if t >= start - slack && t <= end + slack {
            let e = a.max_abs_diff(b);
            best = Some(best.map_or(e, |m| m.max(e)));
        }
    }
    Ok(best)
}
