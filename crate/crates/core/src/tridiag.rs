use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Real symmetric tridiagonal matrix: diagonal `a` and off-diagonal `b`
/// (`b[k]` sits at `(k+1, k)` and `(k, k+1)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTridiagonal {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || b.len() + 1 != a.len() {
            return Err(Error::InvalidInput(format!(
                "tridiagonal needs n diagonal and n-1 off-diagonal entries (got {} and {})",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("tridiagonal entries must be finite".into()));
        }
        Ok(Self { a, b })
    }

    /// Reads the tridiagonal band of `m` (lower off-diagonal), ignoring the rest.
    pub fn from_dense(m: &DenseMatrix) -> Self {
        let n = m.dim();
        Self {
            a: m.diagonal(),
            b: (0..n.saturating_sub(1)).map(|k| m[(k + 1, k)]).collect(),
        }
    }

    /// Like [`from_dense`](Self::from_dense) but rejects entries outside the
    /// band larger than `tol`.
    pub fn from_dense_checked(m: &DenseMatrix, tol: f64) -> Result<Self> {
        let outside = m.outside_band(1);
        if outside > tol {
            return Err(Error::InvalidInput(format!(
                "matrix is not tridiagonal (entry of size {outside:e} outside the band)"
            )));
        }
        if m.symmetry_defect() > tol {
            return Err(Error::InvalidInput("matrix is not symmetric".into()));
        }
        Ok(Self::from_dense(m))
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self {
            a: d.to_vec(),
            b: vec![0.0; d.len().saturating_sub(1)],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Jacobi predicate: every off-diagonal entry strictly positive.
    pub fn is_jacobi(&self) -> bool {
        self.b.iter().all(|&x| x > 0.0)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut m = DenseMatrix::from_diagonal(&self.a);
        for k in 0..n - 1 {
            m[(k + 1, k)] = self.b[k];
            m[(k, k + 1)] = self.b[k];
        }
        m
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_dense().max_abs_diff(&other.to_dense())
    }
}
