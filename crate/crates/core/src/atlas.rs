//! Bidiagonal coordinates on the isospectral manifold of tridiagonal
//! matrices with a fixed simple spectrum.
//!
//! For a permutation `π` write `Λ_π = diag(λ_π(1), …, λ_π(n))`. A matrix
//! `T = Q_πᵀ Λ_π Q_π` lies in the chart of `π` when the rows of `Q_π`
//! (eigenvectors ordered by `π`) can be signed so that `Q_π = L U` is LU
//! positive. Then `B_π = L⁻¹ Λ_π L = U T U⁻¹` is lower bidiagonal and its
//! subdiagonal is the chart point `β`.
//!
//! Permutations are 1-based throughout, as in the JSON form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::FlowFunction;
use crate::linalg::{
    lu_positive_factor_with_tol, lower_inverse, qr_positive_r_with_tol, symmetric_eigen, DenseMatrix,
    DEFAULT_MIN_GAP,
};
use crate::tridiag::SymTridiagonal;

/// Leading minors of `Q_π` smaller than this (relative to the row norms of
/// the block) put the matrix outside the chart domain.
pub const CHART_MINOR_TOL: f64 = 1e-10;
const PATTERN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChart")]
pub struct BidiagonalChart {
    pi: Vec<usize>,
    lambdas: Vec<f64>,
    betas: Vec<f64>,
}

#[derive(Deserialize)]
struct RawChart {
    pi: Vec<usize>,
    lambdas: Vec<f64>,
    betas: Vec<f64>,
}

impl TryFrom<RawChart> for BidiagonalChart {
    type Error = Error;
    fn try_from(r: RawChart) -> Result<Self> {
        BidiagonalChart::new(r.pi, r.lambdas, r.betas)
    }
}

impl BidiagonalChart {
    pub fn new(pi: Vec<usize>, lambdas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        let n = lambdas.len();
        validate_permutation(&pi, n)?;
        if betas.len() + 1 != n {
            return Err(Error::InvalidInput(format!("expected {} betas, got {}", n - 1, betas.len())));
        }
        if lambdas.iter().chain(&betas).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("chart entries must be finite".into()));
        }
        if lambdas.windows(2).any(|w| w[1] - w[0] < DEFAULT_MIN_GAP) {
            return Err(Error::InvalidInput("chart spectrum must be strictly increasing and simple".into()));
        }
        Ok(Self { pi, lambdas, betas })
    }

    pub fn pi(&self) -> &[usize] {
        &self.pi
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// Diagonal of `Λ_π`.
    pub fn permuted_spectrum(&self) -> Vec<f64> {
        permuted(&self.lambdas, &self.pi)
    }
}

fn validate_permutation(pi: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if pi.len() != n {
        return Err(Error::InvalidInput(format!("permutation has length {}, expected {n}", pi.len())));
    }
    for &p in pi {
        if p == 0 || p > n || seen[p - 1] {
            return Err(Error::InvalidInput(format!("{pi:?} is not a permutation of 1..{n}")));
        }
        seen[p - 1] = true;
    }
    Ok(())
}

fn permuted(lambdas: &[f64], pi: &[usize]) -> Vec<f64> {
    pi.iter().map(|&p| lambdas[p - 1]).collect()
}

/// Every intermediate object of the forward chart map.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartFactors {
    /// Signed eigenvector matrix; rows ordered by `π`.
    pub q_pi: DenseMatrix,
    pub l: DenseMatrix,
    pub u: DenseMatrix,
    /// `L⁻¹ Λ_π L`.
    pub b: DenseMatrix,
    /// Largest entry of `B` off its bidiagonal pattern (including the diagonal's distance to `Λ_π`).
    pub pattern_residual: f64,
    pub chart: BidiagonalChart,
}

/// Forward chart map with its factors exposed.
pub fn chart_factors(t_mat: &SymTridiagonal, pi: &[usize]) -> Result<ChartFactors> {
    let n = t_mat.dim();
    validate_permutation(pi, n)?;
    let eig = symmetric_eigen(&t_mat.to_dense(), 1e-12)?;
    if eig.min_gap() < DEFAULT_MIN_GAP {
        return Err(Error::Degenerate(format!("spectrum is not simple (gap {:e})", eig.min_gap())));
    }
    let mut q = DenseMatrix::from_fn(n, |i, j| eig.vectors[(j, pi[i] - 1)]);
    // greedy row signs: the k-th leading minor is linear in row k
    for k in 1..=n {
        let minor = q.leading_minor(k);
        let scale: f64 = (0..k)
            .map(|i| q.row(i)[..k].iter().map(|x| x * x).sum::<f64>().sqrt())
            .product();
        if !(minor.abs() >= CHART_MINOR_TOL * scale) || scale == 0.0 {
            return Err(Error::NotInChartDomain { minor: k });
        }
        if minor < 0.0 {
            for j in 0..n {
                q[(k - 1, j)] = -q[(k - 1, j)];
            }
        }
    }
    let lu = lu_positive_factor_with_tol(&q, 0.0).map_err(|e| match e {
        Error::NotInDomain { minor } => Error::NotInChartDomain { minor },
        other => other,
    })?;
    let lam_pi = permuted(&eig.values, pi);
    let d = DenseMatrix::from_diagonal(&lam_pi);
    let b = lower_inverse(&lu.l).matmul(&d.matmul(&lu.l));
    let mut residual: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { lam_pi[i] } else { 0.0 };
            if i != j + 1 {
                residual = residual.max((b[(i, j)] - expected).abs());
            }
        }
    }
    let betas = (0..n - 1).map(|k| b[(k + 1, k)]).collect();
    let chart = BidiagonalChart::new(pi.to_vec(), eig.values, betas)?;
    Ok(ChartFactors {
        q_pi: q,
        l: lu.l,
        u: lu.u,
        b,
        pattern_residual: residual,
        chart,
    })
}

/// Chart coordinates of `t_mat` for the permutation `pi`.
pub fn to_chart(t_mat: &SymTridiagonal, pi: &[usize]) -> Result<BidiagonalChart> {
    let f = chart_factors(t_mat, pi)?;
    let scale = f.chart.lambdas.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if f.pattern_residual > PATTERN_TOL * scale {
        return Err(Error::Consistency(format!(
            "B is not lower bidiagonal (residual {:e})",
            f.pattern_residual
        )));
    }
    Ok(f.chart)
}

/// Unit lower triangular `L` with `L⁻¹ Λ_π L = B`, solved entrywise from
/// `(d_i − d_j) L_ij = β_j L_{i,j+1}`.
pub fn chart_lower_factor(c: &BidiagonalChart) -> DenseMatrix {
    let n = c.dim();
    let d = c.permuted_spectrum();
    let mut l = DenseMatrix::identity(n);
    for i in 1..n {
        for j in (0..i).rev() {
            l[(i, j)] = c.betas[j] * l[(i, j + 1)] / (d[i] - d[j]);
        }
    }
    l
}

/// Dense `T = Q_πᵀ Λ_π Q_π` with `L = Q_π R`.
pub fn from_chart_dense(c: &BidiagonalChart) -> Result<DenseMatrix> {
    let l = chart_lower_factor(c);
    // unit lower triangular, hence never singular: no rank guard
    let q = qr_positive_r_with_tol(&l, 0.0)?.q;
    Ok(DenseMatrix::from_diagonal(&c.permuted_spectrum())
        .congruence(&q)
        .symmetrized())
}

pub fn from_chart(c: &BidiagonalChart) -> Result<SymTridiagonal> {
    Ok(SymTridiagonal::from_dense(&from_chart_dense(c)?))
}

/// `β_i(t) = exp(t (f(λ_π(i+1)) − f(λ_π(i)))) β_i`; `Log` is evaluated as `ln |λ|`.
pub fn chart_flow(c: &BidiagonalChart, f: &FlowFunction, t: f64) -> Result<BidiagonalChart> {
    let fd = c
        .permuted_spectrum()
        .iter()
        .map(|&x| f.eval_abs(x))
        .collect::<Result<Vec<f64>>>()?;
    let betas = c
        .betas
        .iter()
        .enumerate()
        .map(|(i, &b)| (t * (fd[i + 1] - fd[i])).exp() * b)
        .collect();
    BidiagonalChart::new(c.pi.clone(), c.lambdas.clone(), betas)
}

pub fn chart_transition(c: &BidiagonalChart, pi_new: &[usize]) -> Result<BidiagonalChart> {
    to_chart(&from_chart(c)?, pi_new)
}

/// `diag(Q Λ Qᵀ)` for `T = Qᵀ Λ Q` with ascending `Λ` (rows of `Q` are eigenvectors).
pub fn momentum_map(t_mat: &SymTridiagonal) -> Result<Vec<f64>> {
    let eig = symmetric_eigen(&t_mat.to_dense(), 1e-12)?;
    if eig.min_gap() < DEFAULT_MIN_GAP {
        return Err(Error::Degenerate(format!("spectrum is not simple (gap {:e})", eig.min_gap())));
    }
    let n = t_mat.dim();
    Ok((0..n)
        .map(|i| (0..n).map(|k| eig.vectors[(k, i)].powi(2) * eig.values[k]).sum())
        .collect())
}

/// True when `x` lies in the permutohedron of `lambdas`.
pub fn is_majorized(x: &[f64], lambdas: &[f64], tol: f64) -> bool {
    let mut a = x.to_vec();
    let mut b = lambdas.to_vec();
    a.sort_by(|p, q| q.total_cmp(p));
    b.sort_by(|p, q| q.total_cmp(p));
    let (mut sa, mut sb) = (0.0, 0.0);
    for (p, q) in a.iter().zip(&b) {
        sa += p;
        sb += q;
        if sa > sb + tol {
            return false;
        }
    }
    (sa - sb).abs() <= tol
}

/// All permutations of `1..=n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (1..=n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).expect("successor exists");
        p.swap(i, j);
        p[i + 1..].reverse();
    }
}

/// The permutation whose `Λ_π` lists the eigenvalues in decreasing order
/// (the chart containing the forward Toda limit).
pub fn decreasing_permutation(n: usize) -> Vec<usize> {
    (1..=n).rev().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::symes_solve;
    use crate::sample::{random_jacobi, Rng64};

    fn identity_pi(n: usize) -> Vec<usize> {
        (1..=n).collect()
    }

    #[test]
    fn diagonal_is_chart_origin() {
        let lam = [1.0, 2.0, 4.0];
        let pi = vec![3, 1, 2];
        let t = SymTridiagonal::diagonal(&[4.0, 1.0, 2.0]);
        let c = to_chart(&t, &pi).unwrap();
        assert!(c.betas().iter().all(|&b| b.abs() < 1e-14));
        assert_eq!(c.lambdas(), &lam);
        let back = from_chart(&BidiagonalChart::new(pi, lam.to_vec(), vec![0.0; 2]).unwrap()).unwrap();
        assert!(back.max_abs_diff(&t) < 1e-15);
    }

    #[test]
    fn two_by_two_hand_value() {
        // T = [[1,1],[1,1]], Λ_π = diag(2,0): Q_π rows (1,1)/√2 and (-1,1)/√2
        // give L = [[1,0],[-1,1]] and β = 2
        let t = SymTridiagonal::new(vec![1.0, 1.0], vec![1.0]).unwrap();
        let f = chart_factors(&t, &[2, 1]).unwrap();
        assert!((f.chart.betas()[0] - 2.0).abs() < 1e-14);
        assert!((f.l[(1, 0)] + 1.0).abs() < 1e-14);
        assert!(f.pattern_residual < 1e-14);
    }

    #[test]
    fn roundtrips() {
        let mut rng = Rng64::seeded(17);
        for _ in 0..20 {
            let t = random_jacobi(&mut rng, 6);
            let c = to_chart(&t, &identity_pi(6)).unwrap();
            assert!(c.betas().iter().all(|&b| b > 0.0));
            assert!(from_chart(&c).unwrap().max_abs_diff(&t) < 1e-9);
        }
        for n in 2..=6 {
            let lambdas: Vec<f64> = (0..n).map(|k| k as f64 * 0.7 - 1.0).collect();
            let mut pi = identity_pi(n);
            rng.shuffle(&mut pi);
            let betas = (0..n - 1).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let c = BidiagonalChart::new(pi.clone(), lambdas, betas).unwrap();
            let dense = from_chart_dense(&c).unwrap();
            assert!(dense.outside_band(1) < 1e-9);
            let again = to_chart(&from_chart(&c).unwrap(), &pi).unwrap();
            assert!(crate::linalg::max_abs_diff_vec(again.betas(), c.betas()) < 1e-10);
        }
    }

    #[test]
    fn positive_betas_give_jacobi() {
        let c = BidiagonalChart::new(vec![2, 3, 1], vec![-1.0, 0.5, 2.0], vec![0.3, 1.7]).unwrap();
        assert!(from_chart(&c).unwrap().is_jacobi());
    }

    #[test]
    fn flow_matches_factorization() {
        let mut rng = Rng64::seeded(3);
        let t = random_jacobi(&mut rng, 5);
        let pi = vec![2, 5, 1, 4, 3];
        let c = to_chart(&t, &pi).unwrap();
        let f = FlowFunction::Identity;
        for time in [0.5, 1.5, 3.0] {
            let moved = from_chart(&chart_flow(&c, &f, time).unwrap()).unwrap().to_dense();
            let exact = symes_solve(&t.to_dense(), &f, time).unwrap();
            assert!(moved.max_abs_diff(&exact) < 1e-6);
        }
        assert_eq!(chart_flow(&c, &f, 0.0).unwrap(), c);
    }

    #[test]
    fn transitions() {
        let mut rng = Rng64::seeded(5);
        let t = random_jacobi(&mut rng, 4);
        let c = to_chart(&t, &[1, 2, 3, 4]).unwrap();
        assert!(crate::linalg::max_abs_diff_vec(chart_transition(&c, &[1, 2, 3, 4]).unwrap().betas(), c.betas()) < 1e-10);
        let other = chart_transition(&c, &[3, 1, 4, 2]).unwrap();
        let back = chart_transition(&other, &[1, 2, 3, 4]).unwrap();
        assert!(crate::linalg::max_abs_diff_vec(back.betas(), c.betas()) < 1e-9);
    }

    #[test]
    fn reduced_matrix_lies_in_some_chart() {
        let t = SymTridiagonal::new(vec![1.0, 2.0, -1.0], vec![0.5, 0.0]).unwrap();
        let covered = all_permutations(3)
            .into_iter()
            .filter_map(|pi| to_chart(&t, &pi).ok().map(|c| (pi, c)))
            .collect::<Vec<_>>();
        assert!(!covered.is_empty());
        for (_, c) in covered {
            assert!(from_chart(&c).unwrap().max_abs_diff(&t) < 1e-9);
        }
    }

    #[test]
    fn momentum_map_examples() {
        let t = SymTridiagonal::diagonal(&[3.0, -1.0, 2.0]);
        let mut m = momentum_map(&t).unwrap();
        m.sort_by(f64::total_cmp);
        assert_eq!(m, vec![-1.0, 2.0, 3.0]);
        let two = SymTridiagonal::new(vec![1.0, 1.0], vec![1.0]).unwrap();
        let m = momentum_map(&two).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-15 && (m[1] - 1.0).abs() < 1e-15);
        assert!(momentum_map(&SymTridiagonal::diagonal(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn permutations_enumerated() {
        let p = all_permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], vec![1, 2, 3]);
        assert_eq!(p[5], vec![3, 2, 1]);
        assert!(BidiagonalChart::new(vec![1, 1, 2], vec![0.0, 1.0, 2.0], vec![0.0; 2]).is_err());
    }

    #[test]
    fn beta_over_entry_is_pivot_ratio() {
        let mut rng = Rng64::seeded(21);
        for n in 2..6 {
            let t = random_jacobi(&mut rng, n);
            for pi in all_permutations(n) {
                let Ok(f) = chart_factors(&t, &pi) else { continue };
                for k in 0..n - 1 {
                    let ratio = f.chart.betas()[k] / t.b()[k];
                    let pivots = f.u[(k + 1, k + 1)] / f.u[(k, k)];
                    assert!((ratio - pivots).abs() < 1e-9 * pivots.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn small_entry_ratio_near_diagonal_vertex() {
        // n = 2 and the chart whose Λ_π follows the diagonal order of T
        let t = SymTridiagonal::new(vec![1.0, 3.0], vec![1e-6]).unwrap();
        let c = to_chart(&t, &[1, 2]).unwrap();
        assert!((c.betas()[0] / 1e-6 - 1.0).abs() < 1e-3);
        // the other chart is far from its own diagonal point
        let c = to_chart(&t, &[2, 1]).unwrap();
        assert!((c.betas()[0] / 1e-6 - 1.0).abs() > 1.0);
    }
}
