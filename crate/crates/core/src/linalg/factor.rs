//! QR, LU-positive and symmetric-pivot ("Cholesky-like") factorizations.
//!
//! All factorizations use the uniqueness conventions of the isospectral
//! flows: `R` and `U` carry a strictly positive diagonal, `L` a unit one.

use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Default relative threshold below which a pivot counts as non-positive.
pub const DEFAULT_POSITIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrFactors {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LuFactors {
    pub l: DenseMatrix,
    pub u: DenseMatrix,
}

/// Householder QR with the sign fix `diag(r) > 0`. Returns the factors and
/// `det(q)` (which is `±1`; the sign of `det(m)`).
fn householder_qr(m: &DenseMatrix, tol: f64) -> Result<(QrFactors, f64)> {
    let n = m.dim();
    let scale = m.frobenius_norm();
    if !m.is_finite() {
        return Err(Error::Factorization("non-finite entries".into()));
    }
    let mut r = m.clone();
    let mut q = DenseMatrix::identity(n);
    let mut det_q = 1.0;
    let mut v = vec![0.0; n];

    for k in 0..n.saturating_sub(1) {
        let tail: f64 = (k + 1..n).map(|i| r[(i, k)] * r[(i, k)]).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = r[(k, k)];
        let norm = (x0 * x0 + tail).sqrt();
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        v[k] = x0 - alpha;
        for i in k + 1..n {
            v[i] = r[(i, k)];
        }
        let vnorm2 = v[k] * v[k] + tail;
        // r <- (I - 2 v vᵀ / vᵀv) r, rows k..n
        for j in k..n {
            let dot: f64 = (k..n).map(|i| v[i] * r[(i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                r[(i, j)] -= f * v[i];
            }
        }
        // q <- q (I - 2 v vᵀ / vᵀv)
        for i in 0..n {
            let dot: f64 = (k..n).map(|c| q[(i, c)] * v[c]).sum();
            let f = 2.0 * dot / vnorm2;
            for c in k..n {
                q[(i, c)] -= f * v[c];
            }
        }
        for i in k + 1..n {
            r[(i, k)] = 0.0;
        }
        det_q = -det_q;
    }

    for k in 0..n {
        let d = r[(k, k)];
        if !(d.abs() > tol * scale) {
            return Err(Error::Factorization(format!(
                "singular input: |r[{k},{k}]| = {:e} below threshold",
                d.abs()
            )));
        }
        if d < 0.0 {
            for j in k..n {
                r[(k, j)] = -r[(k, j)];
            }
            for i in 0..n {
                q[(i, k)] = -q[(i, k)];
            }
            det_q = -det_q;
        }
    }
    Ok((QrFactors { q, r }, det_q))
}

/// QR factorization `m = q r` with `q ∈ SO(n)` and `diag(r) > 0`.
///
/// Requires `det(m) > 0`; singular or negative-determinant inputs are
/// rejected because the `SO(n)` factor would not exist.
pub fn qr_factor(m: &DenseMatrix) -> Result<QrFactors> {
    let (f, det_q) = householder_qr(m, DEFAULT_POSITIVITY_TOL)?;
    if det_q < 0.0 {
        return Err(Error::Factorization("determinant is negative".into()));
    }
    Ok(f)
}

/// QR factorization of any invertible matrix with `diag(r) > 0`; `q` is only
/// orthogonal (its determinant carries the sign of `det(m)`).
pub fn qr_positive_r(m: &DenseMatrix) -> Result<QrFactors> {
    householder_qr(m, DEFAULT_POSITIVITY_TOL).map(|(f, _)| f)
}

/// Same as [`qr_positive_r`] with a caller-chosen singularity threshold
/// (relative to the Frobenius norm).
pub fn qr_positive_r_with_tol(m: &DenseMatrix, tol: f64) -> Result<QrFactors> {
    householder_qr(m, tol).map(|(f, _)| f)
}

/// `m = l u` with unit lower `l` and upper `u` with positive diagonal.
pub fn lu_positive_factor(m: &DenseMatrix) -> Result<LuFactors> {
    lu_positive_factor_with_tol(m, DEFAULT_POSITIVITY_TOL)
}

/// LU-positive factorization with a configurable pivot threshold
/// `tol * ‖m‖_F`. Errors name the first (1-based) failing leading minor.
pub fn lu_positive_factor_with_tol(m: &DenseMatrix, tol: f64) -> Result<LuFactors> {
    let n = m.dim();
    let threshold = tol * m.frobenius_norm();
    let mut l = DenseMatrix::identity(n);
    let mut u = DenseMatrix::zeros(n);
    for k in 0..n {
        for j in k..n {
            let s: f64 = (0..k).map(|p| l[(k, p)] * u[(p, j)]).sum();
            u[(k, j)] = m[(k, j)] - s;
        }
        let pivot = u[(k, k)];
        // pivot_k = minor_k / minor_{k-1}; previous minors are positive here
        if !(pivot > threshold) {
            return Err(Error::NotInDomain { minor: k + 1 });
        }
        for i in k + 1..n {
            let s: f64 = (0..k).map(|p| l[(i, p)] * u[(p, k)]).sum();
            l[(i, k)] = (m[(i, k)] - s) / pivot;
        }
    }
    Ok(LuFactors { l, u })
}

/// Splits `m = m_l m_u` with lower `m_l`, upper `m_u` and
/// `diag(m_l) = diag(m_u) > 0`, by moving the square root of each
/// LU pivot onto both factors.
pub fn cholesky_like_factor(m: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let LuFactors { mut l, mut u } = lu_positive_factor(m)?;
    let n = m.dim();
    for k in 0..n {
        let root = u[(k, k)].sqrt();
        for i in k..n {
            l[(i, k)] *= root;
        }
        for j in k..n {
            u[(k, j)] /= root;
        }
        // exact equality of the shared diagonal
        l[(k, k)] = root;
        u[(k, k)] = root;
    }
    Ok((l, u))
}

/// Inverse of an upper triangular matrix with nonzero diagonal.
pub fn upper_inverse(u: &DenseMatrix) -> DenseMatrix {
    let n = u.dim();
    let mut inv = DenseMatrix::zeros(n);
    for j in 0..n {
        inv[(j, j)] = 1.0 / u[(j, j)];
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|k| u[(i, k)] * inv[(k, j)]).sum();
            inv[(i, j)] = -s / u[(i, i)];
        }
    }
    inv
}

/// Inverse of a lower triangular matrix with nonzero diagonal.
pub fn lower_inverse(l: &DenseMatrix) -> DenseMatrix {
    upper_inverse(&l.transpose()).transpose()
}
