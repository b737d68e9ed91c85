//! Symmetric eigendecomposition.
//!
//! Householder reduction to tridiagonal form followed by the implicit QL
//! iteration (the classic tred2/tql2 pair). The cyclic Jacobi solver at the
//! bottom of this file is an independent oracle used to validate it and the
//! QR-iteration module.

use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Entries below this magnitude are skipped when fixing eigenvector signs.
const SIGN_EPS: f64 = 1e-13;
const MAX_QL_ITER: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenDecomposition {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthogonal matrix; column `k` is the eigenvector of `values[k]`.
    pub vectors: DenseMatrix,
}

impl EigenDecomposition {
    /// Smallest gap between consecutive eigenvalues (`+∞` for n = 1).
    pub fn min_gap(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// `Q diag(g(λ)) Qᵀ`.
    pub fn recompose(&self, mut g: impl FnMut(f64) -> f64) -> DenseMatrix {
        let n = self.values.len();
        let gv: Vec<f64> = self.values.iter().map(|&x| g(x)).collect();
        let q = &self.vectors;
        DenseMatrix::from_fn(n, |i, j| (0..n).map(|k| q[(i, k)] * gv[k] * q[(j, k)]).sum())
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.recompose(|x| x)
    }
}

/// Eigendecomposition of a symmetric matrix. Eigenvalues ascend; each
/// eigenvector's first entry of magnitude above `1e-13` is positive.
pub fn symmetric_eigen(s: &DenseMatrix, tol: f64) -> Result<EigenDecomposition> {
    if !s.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix entries".into()));
    }
    if !s.is_symmetric(tol) {
        return Err(Error::InvalidInput(format!(
            "matrix is not symmetric (defect {:e})",
            s.symmetry_defect()
        )));
    }
    let n = s.dim();
    let mut v = s.symmetrized();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 0 {
        return Ok(EigenDecomposition {
            values: d,
            vectors: v,
        });
    }
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut vectors = DenseMatrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        let sign = col
            .iter()
            .find(|x| x.abs() > SIGN_EPS)
            .map_or(1.0, |x| x.signum());
        for x in col.iter_mut() {
            *x *= sign / norm;
        }
        vectors.set_column(dst, &col);
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn symmetric_eigenvalues(s: &DenseMatrix) -> Result<Vec<f64>> {
    symmetric_eigen(s, 1e-10).map(|e| e.values)
}

fn tred2(v: &mut DenseMatrix, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn tql2(v: &mut DenseMatrix, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITER {
                    return Err(Error::Convergence { iterations: iter });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let hk = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * hk;
                        v[(k, i)] = c * v[(k, i)] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Cyclic Jacobi rotation eigenvalues (ascending). Independent of the QL path.
pub fn jacobi_eigenvalues(s: &DenseMatrix) -> Result<Vec<f64>> {
    jacobi_eigen(s).map(|(vals, _)| vals)
}

/// Cyclic Jacobi eigen-solver returning unsorted-then-sorted values and the
/// accumulated rotation (columns are eigenvectors, same order as values).
pub fn jacobi_eigen(s: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = s.dim();
    let mut a = s.symmetrized();
    let mut v = DenseMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            let mut pairs: Vec<(f64, Vec<f64>)> =
                (0..n).map(|k| (a[(k, k)], v.column(k))).collect();
            pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut vecs = DenseMatrix::zeros(n);
            for (k, (_, col)) in pairs.iter().enumerate() {
                vecs.set_column(k, col);
            }
            return Ok((pairs.into_iter().map(|p| p.0).collect(), vecs));
        }
        let _ = sweep;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::Convergence { iterations: 100 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_symmetric, Rng64};

    #[test]
    fn diagonal_input() {
        let e = symmetric_eigen(&DenseMatrix::from_diagonal(&[3.0, 1.0, 2.0]), 1e-12).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        let p = DenseMatrix::from_rows(&[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert!(e.vectors.max_abs_diff(&p) < 1e-15);
    }

    #[test]
    fn closed_form_2x2() {
        let s = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        let e = symmetric_eigen(&s, 1e-12).unwrap();
        assert!((e.values[0] - 0.0).abs() < 1e-15);
        assert!((e.values[1] - 2.0).abs() < 1e-15);
        let h = 0.5f64.sqrt();
        let expect = DenseMatrix::from_rows(&[[h, h], [-h, h]]);
        assert!(e.vectors.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn random_5x5_reconstructs_and_matches_jacobi() {
        let mut rng = Rng64::seeded(5);
        let s = random_symmetric(&mut rng, 5);
        let e = symmetric_eigen(&s, 1e-12).unwrap();
        assert!(e.reconstruct().max_abs_diff(&s) < 1e-13);
        let qtq = e.vectors.transpose().matmul(&e.vectors);
        assert!(qtq.max_abs_diff(&DenseMatrix::identity(5)) < 1e-14);
        let jac = jacobi_eigenvalues(&s).unwrap();
        for (a, b) in e.values.iter().zip(&jac) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_oracle_agrees_on_8x8() {
        let mut rng = Rng64::seeded(88);
        for _ in 0..20 {
            let s = random_symmetric(&mut rng, 8);
            let a = symmetric_eigen(&s, 1e-12).unwrap().values;
            let b = jacobi_eigenvalues(&s).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_nonsymmetric() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]);
        assert!(matches!(symmetric_eigen(&m, 1e-12), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn min_gap_reports_closest_pair() {
        let e = symmetric_eigen(&DenseMatrix::from_diagonal(&[0.0, 1.0, 1.25]), 1e-12).unwrap();
        assert!((e.min_gap() - 0.25).abs() < 1e-15);
    }
}
