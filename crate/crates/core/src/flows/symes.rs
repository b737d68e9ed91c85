//! Exact solution by factorization: `exp(t f(S0)) = Q R`, `S(t) = Qᵀ S0 Q`.
//!
//! `exp(t f)` has condition number `exp(|t| · spread f(λ))`, so long times
//! are split into chunks whose exponent span stays below
//! [`SYMES_CHUNK_SPAN`]; the semigroup law makes the composition exact.
//! The accumulated orthogonal factor is re-orthogonalised whenever its
//! defect exceeds `1e-10`.

use super::field::Trajectory;
use crate::error::{Error, Result};
use crate::func::FlowFunction;
use crate::linalg::{qr_factor, qr_positive_r, symmetric_eigen, DenseMatrix, EigenDecomposition};
use crate::ode::OdeStats;

/// Largest `|Δt| · (max f(λ) − min f(λ))` handled by one factorization.
pub const SYMES_CHUNK_SPAN: f64 = 8.0;
const REORTHO_TOL: f64 = 1e-10;

/// `S(t)` for the flow generated by `f`, started at the symmetric `s0`.
pub fn symes_solve(s0: &DenseMatrix, f: &FlowFunction, t: f64) -> Result<DenseMatrix> {
    if t == 0.0 {
        return Ok(s0.clone());
    }
    let traj = symes_trajectory(s0, f, &[t])?;
    Ok(traj.states.into_iter().next().expect("one sample"))
}

/// Solution by factorization sampled at `times` (monotone, starting side 0).
/// `meta.steps` counts the factorizations performed.
pub fn symes_trajectory(s0: &DenseMatrix, f: &FlowFunction, times: &[f64]) -> Result<Trajectory> {
    let n = s0.dim();
    let eig = symmetric_eigen(s0, 1e-10)
        .map_err(|_| Error::InvalidInput("initial matrix must be symmetric".into()))?;
    let fv = eig
        .values
        .iter()
        .map(|&x| f.eval(x))
        .collect::<Result<Vec<f64>>>()?;
    let fmax = fv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fmin = fv.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = fmax - fmin;

    let mut q_tot = DenseMatrix::identity(n);
    let mut now = 0.0;
    let mut stats = OdeStats::default();
    let mut out_t = Vec::with_capacity(times.len());
    let mut out_s = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - now;
        let chunks = if spread > 0.0 {
            ((span.abs() * spread) / SYMES_CHUNK_SPAN).ceil().max(1.0) as usize
        } else {
            1
        };
        let h = span / chunks as f64;
        if span != 0.0 && spread > 0.0 {
            for _ in 0..chunks {
                q_tot = q_tot.matmul(&chunk_factor(&eig, &fv, fmax, fmin, &q_tot, h)?);
                stats.steps += 1;
                if q_tot.transpose().matmul(&q_tot).max_abs_diff(&DenseMatrix::identity(n)) > REORTHO_TOL {
                    q_tot = qr_positive_r(&q_tot)?.q;
                    stats.rejected += 1;
                }
            }
        }
        now = target;
        out_t.push(target);
        out_s.push(if q_tot == DenseMatrix::identity(n) {
            s0.clone()
        } else {
            s0.congruence(&q_tot).symmetrized()
        });
    }
    Ok(Trajectory {
        times: out_t,
        states: out_s,
        meta: stats,
    })
}

/// Orthogonal factor of `exp(h f(S))` with `S = q_totᵀ S0 q_tot`, built
/// from the eigenbasis of `S0` rotated by `q_tot`.
fn chunk_factor(
    eig: &EigenDecomposition,
    fv: &[f64],
    fmax: f64,
    fmin: f64,
    q_tot: &DenseMatrix,
    h: f64,
) -> Result<DenseMatrix> {
    let n = fv.len();
    // eigenvectors of the current matrix are the columns of q_totᵀ V
    let w = q_tot.transpose().matmul(&eig.vectors);
    // subtracting the largest exponent only rescales exp(h f) by a positive scalar
    let top = if h > 0.0 { h * fmax } else { h * fmin };
    let e: Vec<f64> = fv.iter().map(|&x| (h * x - top).exp()).collect();
    let m = DenseMatrix::from_fn(n, |i, j| (0..n).map(|k| w[(i, k)] * e[k] * w[(j, k)]).sum());
    Ok(qr_factor(&m.symmetrized())?.q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigenvalues;
    use crate::sample::{random_jacobi, random_symmetric, random_with_spectrum, Rng64};

    #[test]
    fn time_zero_is_exact() {
        let mut rng = Rng64::seeded(5);
        let s = random_symmetric(&mut rng, 4);
        assert_eq!(symes_solve(&s, &FlowFunction::Identity, 0.0).unwrap(), s);
    }

    #[test]
    fn two_by_two_closed_form() {
        // J(t) for J0 = [[1,1],[1,1]]: exp(tJ0) = I + (e^{2t} - 1)/2 J0
        let j = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        for t in [0.3, 1.0, 2.5] {
            let s = symes_solve(&j, &FlowFunction::Identity, t).unwrap();
            let b = 1.0 / (2.0 * t).cosh();
            let a1 = 1.0 + (2.0 * t).tanh();
            assert!((s[(0, 0)] - a1).abs() < 1e-13, "t={t}");
            assert!((s[(1, 0)] - b).abs() < 1e-13);
        }
    }

    #[test]
    fn semigroup_and_chunking() {
        let mut rng = Rng64::seeded(9);
        let j = random_jacobi(&mut rng, 6).to_dense();
        let f = FlowFunction::Identity;
        let once = symes_solve(&j, &f, 7.0).unwrap();
        let twice = symes_solve(&symes_solve(&j, &f, 3.0).unwrap(), &f, 4.0).unwrap();
        assert!(once.max_abs_diff(&twice) < 1e-10);
        let ev0 = symmetric_eigenvalues(&j).unwrap();
        let ev1 = symmetric_eigenvalues(&once).unwrap();
        assert!(crate::linalg::max_abs_diff_vec(&ev0, &ev1) < 1e-12);
        assert!(once.outside_band(1) < 1e-12);
    }

    #[test]
    fn long_time_limit_is_sorted_diagonal() {
        // off-diagonals decay like exp(-t · gap), so use well separated eigenvalues
        let mut rng = Rng64::seeded(2);
        let ev = vec![-1.5, -0.5, 0.25, 1.0, 2.0];
        let j = random_with_spectrum(&mut rng, &ev);
        let fwd = symes_solve(&j, &FlowFunction::Identity, 40.0).unwrap();
        let back = symes_solve(&j, &FlowFunction::Identity, -40.0).unwrap();
        let mut desc = ev.clone();
        desc.reverse();
        assert!(crate::linalg::max_abs_diff_vec(&fwd.diagonal(), &desc) < 1e-8);
        assert!(crate::linalg::max_abs_diff_vec(&back.diagonal(), &ev) < 1e-8);
        assert!(fwd.off_diagonal_max() < 1e-6 && back.off_diagonal_max() < 1e-6);
    }
}
