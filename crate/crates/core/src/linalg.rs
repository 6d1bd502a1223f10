//! Dense kernels behind EDMD: a truncated-SVD pseudoinverse and a real
//! nonsymmetric eigensolver (Schur eigenvalues, inverse-iteration vectors).

use nalgebra::{Complex, DMatrix, DVector};

use crate::{Error, Result};

type C64 = Complex<f64>;

const SVD_MAX_ITER: usize = 10_000;
const SCHUR_MAX_ITER: usize = 10_000;

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// `svd_tol * sigma_max` are treated as zero.
pub fn pseudoinverse(a: &DMatrix<f64>, svd_tol: f64) -> Result<DMatrix<f64>> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format {
            what: "matrix",
            detail: "pseudoinverse input has non-finite entries".into(),
        });
    }
    let (n, m) = a.shape();
    if n == 0 || m == 0 {
        return Ok(DMatrix::zeros(m, n));
    }
    let svd = a
        .clone()
        .try_svd(true, true, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::Convergence("singular value decomposition"))?;
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    let cutoff = svd_tol * sigma_max;

    // A+ = V * diag(1/sigma) * U^T over the retained singular values.
    let mut pinv = DMatrix::zeros(m, n);
    for (k, &s) in sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let v_k = v_t.row(k).transpose();
        let u_k = u.column(k);
        pinv.ger(1.0 / s, &v_k, &u_k, 1.0);
    }
    Ok(pinv)
}

/// Eigenvalues and unit eigenvectors of a real square matrix.
///
/// Pairs are ordered by modulus, largest first; each complex eigenvalue with
/// positive imaginary part is immediately followed by its conjugate, whose
/// vector is the conjugate of the first.
pub fn eigen_decomposition(k: &DMatrix<f64>) -> Result<(Vec<C64>, Vec<DVector<C64>>)> {
    let n = k.nrows();
    assert_eq!(n, k.ncols(), "eigen_decomposition needs a square matrix");
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let schur = nalgebra::Schur::try_new(k.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(Error::Convergence("real Schur decomposition"))?;
    let raw: Vec<C64> = schur.complex_eigenvalues().iter().copied().collect();

    // Representatives: real eigenvalues and the upper member of each pair.
    let mut reps: Vec<C64> = raw.iter().copied().filter(|l| l.im >= 0.0).collect();
    reps.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });

    let kc = k.map(|v| C64::new(v, 0.0));
    let scale = k.norm().max(f64::MIN_POSITIVE);
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for (idx, &lambda) in reps.iter().enumerate() {
        let v = inverse_iteration(&kc, lambda, scale, idx)?;
        values.push(lambda);
        vectors.push(v.clone());
        if lambda.im > 0.0 {
            values.push(lambda.conj());
            vectors.push(v.map(|z| z.conj()));
        }
    }
    debug_assert_eq!(values.len(), n);
    Ok((values, vectors))
}

/// A unit vector `v` with `K v ~= lambda v`, found by a few solves with the
/// slightly shifted matrix `K - (lambda + delta) I`.
fn inverse_iteration(
    kc: &DMatrix<C64>,
    lambda: C64,
    scale: f64,
    seed: usize,
) -> Result<DVector<C64>> {
    let n = kc.nrows();
    let shift = lambda + C64::new(scale * 1e-10, 0.0);
    let mut a = kc.clone();
    for j in 0..n {
        a[(j, j)] -= shift;
    }
    let lu = a.lu();
    // Distinct starting vectors let repeated eigenvalues pick distinct vectors.
    let mut v = DVector::from_fn(n, |j, _| {
        C64::new(if j == seed % n { 2.0 } else { 1.0 }, 0.0)
    });
    normalize(&mut v);
    for _ in 0..3 {
        match lu.solve(&v) {
            Some(mut w) if w.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                if normalize(&mut w) {
                    v = w;
                }
            }
            _ => break,
        }
    }
    // Fix the phase so the largest entry is real and positive.
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(C64::new(1.0, 0.0));
    if pivot.norm() > 0.0 {
        let phase = pivot.conj() / pivot.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
    if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Convergence("eigenvector inverse iteration"));
    }
    Ok(v)
}

fn normalize(v: &mut DVector<C64>) -> bool {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        v.iter_mut().for_each(|z| *z /= norm);
        true
    } else {
        false
    }
}

/// `||K v - lambda v|| / (||K||_F ||v||)`.
pub(crate) fn eigen_residual(k: &DMatrix<f64>, lambda: C64, v: &DVector<C64>) -> f64 {
    let kc = k.map(|x| C64::new(x, 0.0));
    let r = &kc * v - v * lambda;
    let rn = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    rn / (k.norm().max(f64::MIN_POSITIVE) * vn.max(f64::MIN_POSITIVE))
}
