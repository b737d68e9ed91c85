//! Functions of symmetric matrices and the triangular/skew splittings.

use super::{symmetric_eigen, DenseMatrix, EigenDecomposition};
use crate::error::Result;
use crate::func::FlowFunction;

const SYM_TOL: f64 = 1e-10;

/// `Q f(Λ) Qᵀ` through the symmetric eigendecomposition.
pub fn matrix_function(s: &DenseMatrix, f: &FlowFunction) -> Result<DenseMatrix> {
    let eig = symmetric_eigen(s, SYM_TOL)?;
    apply_on_eigenbasis(&eig, |x| f.eval(x))
}

/// `Q g(Λ) Qᵀ` for a fallible scalar map `g`.
pub fn spectral_map(s: &DenseMatrix, g: impl Fn(f64) -> Result<f64>) -> Result<DenseMatrix> {
    let eig = symmetric_eigen(s, SYM_TOL)?;
    apply_on_eigenbasis(&eig, g)
}

pub fn apply_on_eigenbasis(
    eig: &EigenDecomposition,
    g: impl Fn(f64) -> Result<f64>,
) -> Result<DenseMatrix> {
    let vals = eig
        .values
        .iter()
        .map(|&x| g(x))
        .collect::<Result<Vec<f64>>>()?;
    let mut it = vals.into_iter();
    Ok(eig.recompose(|_| it.next().unwrap_or(0.0)))
}

/// Polynomial `Σ c_k M^k` by Horner's rule, no eigendecomposition.
pub fn matrix_polynomial(m: &DenseMatrix, coeffs: &[f64]) -> DenseMatrix {
    let n = m.dim();
    let mut acc = DenseMatrix::zeros(n);
    for &c in coeffs.iter().rev() {
        acc = acc.matmul(m);
        for i in 0..n {
            acc[(i, i)] += c;
        }
    }
    acc
}

/// `f(M)` for a symmetric `M`, using Horner's rule for polynomial `f`
/// and the eigenbasis otherwise.
pub fn flow_function_of(m: &DenseMatrix, f: &FlowFunction) -> Result<DenseMatrix> {
    match f {
        FlowFunction::Identity => Ok(m.clone()),
        FlowFunction::Polynomial(c) => Ok(matrix_polynomial(m, c)),
        _ => matrix_function(m, f),
    }
}

/// `M = Π_sk M + Π_up M`: the skew part shares the strictly lower triangle
/// of `M`; the remainder is upper triangular.
pub fn split_skew_upper(m: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let n = m.dim();
    let skew = DenseMatrix::from_fn(n, |i, j| {
        if i > j {
            m[(i, j)]
        } else if i < j {
            -m[(j, i)]
        } else {
            0.0
        }
    });
    let upper = DenseMatrix::from_fn(n, |i, j| if i > j { 0.0 } else { m[(i, j)] - skew[(i, j)] });
    (skew, upper)
}

/// `Π_sk M` only.
pub fn skew_part(m: &DenseMatrix) -> DenseMatrix {
    split_skew_upper(m).0
}

/// `M = Π_sl M + Π_u M`: strictly lower and upper (with diagonal) parts.
pub fn split_strictlower_upper(m: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let n = m.dim();
    let lower = DenseMatrix::from_fn(n, |i, j| if i > j { m[(i, j)] } else { 0.0 });
    let upper = DenseMatrix::from_fn(n, |i, j| if i > j { 0.0 } else { m[(i, j)] });
    (lower, upper)
}
