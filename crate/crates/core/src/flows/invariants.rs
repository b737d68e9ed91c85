//! Conserved and monotone quantities of the flows.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use super::field::Trajectory;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, DenseMatrix};

/// `tr(s^k)` for `k = 1..=k_max`.
pub fn trace_invariants(s: &DenseMatrix, k_max: usize) -> Vec<f64> {
    let mut p = s.clone();
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        if k > 1 {
            p = p.matmul(s);
        }
        out.push(p.trace());
    }
    out
}

/// Roots of `det(chop_k(S − λI))`, where `chop_k` drops the first `k` rows
/// and the last `k` columns. Sorted by real then imaginary part.
///
/// The first `k` columns of the chopped pencil carry no `λ`. They are
/// eliminated by projecting onto the orthogonal complement `N` of their
/// span, leaving the square pencil `Nᵀ A₂ − λ Nᵀ B₂` of size `n − 2k`.
pub fn chop_invariants(s: &DenseMatrix, k: usize) -> Result<Vec<Complex<f64>>> {
    let n = s.dim();
    if k == 0 || 2 * k + 1 > n {
        return Err(Error::InvalidInput(format!("chop index must satisfy 1 <= k <= (n-1)/2, got k={k}, n={n}")));
    }
    let m = n - k;
    let p = n - 2 * k;
    let scale = s.max_abs().max(f64::MIN_POSITIVE);
    let a1 = DMatrix::from_fn(m, k, |r, c| s[(r + k, c)]);
    let qr = a1.clone().qr();
    let r1 = qr.r();
    if (0..k).any(|i| r1[(i, i)].abs() <= 1e-12 * scale) {
        return Err(Error::Degenerate("chopped pencil is singular (λ-free columns are dependent)".into()));
    }
    let q1 = qr.q();
    let proj = DenseMatrix::from_fn(m, |i, j| {
        let acc: f64 = (0..k).map(|c| q1[(i, c)] * q1[(j, c)]).sum();
        if i == j { 1.0 - acc } else { -acc }
    });
    // the complement basis is the eigenspace of eigenvalue 1 (the last p columns)
    let eig = symmetric_eigen(&proj.symmetrized(), 1e-10)?;
    let basis = |i: usize, c: usize| eig.vectors[(i, k + c)];
    let x2 = DMatrix::from_fn(p, p, |r, c| (0..m).map(|i| basis(i, r) * s[(i + k, c + k)]).sum::<f64>());
    // B₂ has ones at (row c, column c + k) of the chopped block
    let y2 = DMatrix::from_fn(p, p, |r, c| basis(c, r));
    let sv = y2.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::Degenerate("chopped pencil has roots at infinity".into()));
    }
    let y2_inv = y2
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("chopped pencil is singular".into()))?;
    let mut roots: Vec<Complex<f64>> = (y2_inv * x2).complex_eigenvalues().iter().copied().collect();
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

/// Largest distance after greedily pairing each root of `a` with its
/// nearest unused root of `b`; `∞` when the counts differ.
pub fn match_roots(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("equal lengths");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// `F(S) = Σ_i (n − i + 1) S_ii` (1-based `i`).
pub fn morse_function(s: &DenseMatrix) -> f64 {
    let n = s.dim();
    (0..n).map(|i| (n - i) as f64 * s[(i, i)]).sum()
}

/// `Σ_{j ≤ k} S_jj` for `k = 1..=n`.
pub fn partial_traces(s: &DenseMatrix) -> Vec<f64> {
    s.diagonal()
        .iter()
        .scan(0.0, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub final_time: f64,
    pub max_off_diagonal: f64,
    pub diagonal: Vec<f64>,
    pub direction: Direction,
    /// Diagonal strictly decreasing (forward) or increasing (backward).
    pub ordered: bool,
    /// Off-diagonal part below `tol`.
    pub converged: bool,
}

/// Diagonal limit diagnosis at the last sample of `traj`.
pub fn asymptotic_diagnosis(traj: &Trajectory, tol: f64) -> AsymptoticReport {
    let (final_time, last) = match traj.last() {
        Some((t, s)) => (t, s.clone()),
        None => (0.0, DenseMatrix::zeros(0)),
    };
    let direction = if final_time < 0.0 { Direction::Backward } else { Direction::Forward };
    let diagonal = last.diagonal();
    let ordered = diagonal.windows(2).all(|w| match direction {
        Direction::Forward => w[0] - w[1] > tol,
        Direction::Backward => w[1] - w[0] > tol,
    });
    let max_off_diagonal = last.off_diagonal_max();
    AsymptoticReport {
        final_time,
        max_off_diagonal,
        diagonal,
        direction,
        ordered,
        converged: max_off_diagonal <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{integrate, symes_solve};
    use crate::func::FlowFunction;
    use crate::ode::OdeStats;
    use crate::sample::{random_symmetric, Rng64};

    #[test]
    fn power_traces() {
        assert_eq!(trace_invariants(&DenseMatrix::identity(3), 3), vec![3.0, 3.0, 3.0]);
        let d = DenseMatrix::from_diagonal(&[2.0, 4.0, 8.0]);
        assert_eq!(trace_invariants(&d, 3), vec![14.0, 84.0, 584.0]);
    }

    #[test]
    fn chop_of_diagonal_is_degenerate() {
        let d = DenseMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        assert!(matches!(chop_invariants(&d, 1), Err(Error::Degenerate(_))));
        assert!(matches!(chop_invariants(&d, 2), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn chop_root_matches_determinant() {
        // n=3, k=1: det [[s21, s22-λ],[s31, s32]] = s21 s32 - s31 (s22 - λ)
        let s = DenseMatrix::from_rows(&[[1.0, 2.0, 0.5], [2.0, -1.0, 3.0], [0.5, 3.0, 2.0]]);
        let roots = chop_invariants(&s, 1).unwrap();
        let expected = s[(1, 1)] - s[(1, 0)] * s[(2, 1)] / s[(2, 0)];
        assert_eq!(roots.len(), 1);
        assert!((roots[0].re - expected).abs() < 1e-12 && roots[0].im == 0.0);
    }

    #[test]
    fn chop_homogeneity_and_invariance() {
        let mut rng = Rng64::seeded(4);
        let s = random_symmetric(&mut rng, 4);
        let r1 = chop_invariants(&s, 1).unwrap();
        assert_eq!(r1.len(), 2);
        let r2 = chop_invariants(&s.scale(2.0), 1).unwrap();
        let doubled: Vec<_> = r1.iter().map(|z| z * 2.0).collect();
        assert!(match_roots(&r2, &doubled) < 1e-10);

        let f = FlowFunction::Identity;
        let later = symes_solve(&s, &f, 0.7).unwrap();
        assert!(match_roots(&chop_invariants(&later, 1).unwrap(), &r1) < 1e-8);
    }

    #[test]
    fn morse_and_partial_traces() {
        let d = DenseMatrix::from_diagonal(&[2.0, 4.0, 8.0]);
        assert_eq!(morse_function(&d), 22.0);
        assert_eq!(partial_traces(&d), vec![2.0, 6.0, 14.0]);
        let perms = [[2.0, 4.0, 8.0], [2.0, 8.0, 4.0], [4.0, 2.0, 8.0], [4.0, 8.0, 2.0], [8.0, 2.0, 4.0], [8.0, 4.0, 2.0]];
        let mut values: Vec<f64> = perms.iter().map(|p| morse_function(&DenseMatrix::from_diagonal(p))).collect();
        values.sort_by(f64::total_cmp);
        assert!(values.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn diagnosis_both_directions() {
        let j = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        let fwd = asymptotic_diagnosis(&integrate(&j, &FlowFunction::Identity, 10.0, 1e-10).unwrap(), 1e-6);
        assert!(fwd.converged && fwd.ordered && fwd.direction == Direction::Forward);
        assert!((fwd.diagonal[0] - 2.0).abs() < 1e-6);
        let back = asymptotic_diagnosis(&integrate(&j, &FlowFunction::Identity, -10.0, 1e-10).unwrap(), 1e-6);
        assert!(back.converged && back.ordered && back.direction == Direction::Backward);
        assert!((back.diagonal[1] - 2.0).abs() < 1e-6);

        let d = DenseMatrix::from_diagonal(&[3.0, 1.0]);
        let still = Trajectory {
            times: vec![0.0],
            states: vec![d],
            meta: OdeStats::default(),
        };
        let rep = asymptotic_diagnosis(&still, 1e-12);
        assert!(rep.converged && rep.ordered);
    }
}
