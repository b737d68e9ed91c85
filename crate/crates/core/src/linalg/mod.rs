//! Dense small-matrix kernels.

mod eigen;
mod factor;
mod funcs;
mod matrix;

pub use eigen::{
    jacobi_eigen, jacobi_eigenvalues, symmetric_eigen, symmetric_eigenvalues, EigenDecomposition,
};
pub use factor::{
    cholesky_like_factor, lower_inverse, lu_positive_factor, lu_positive_factor_with_tol,
    qr_factor, qr_positive_r, qr_positive_r_with_tol, upper_inverse, LuFactors, QrFactors,
    DEFAULT_POSITIVITY_TOL,
};
pub use funcs::{
    apply_on_eigenbasis, flow_function_of, matrix_function, matrix_polynomial, skew_part,
    spectral_map, split_skew_upper, split_strictlower_upper,
};
pub use matrix::DenseMatrix;

/// Minimal eigenvalue gap below which a spectrum is treated as degenerate.
pub const DEFAULT_MIN_GAP: f64 = 1e-8;

/// Largest absolute difference between two equally long vectors.
pub fn max_abs_diff_vec(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
