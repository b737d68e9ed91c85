use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::FlowFunction;
use crate::linalg::{flow_function_of, skew_part, symmetric_eigenvalues, DenseMatrix};
use crate::ode::{self, OdeOptions, OdeStats};

/// Number of sample intervals used by [`integrate`].
pub const DEFAULT_SAMPLES: usize = 100;

/// Sampled solution of a Lax flow. Times are monotone in the direction of
/// integration (decreasing for backward runs) and start at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DenseMatrix>,
    pub meta: OdeStats,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, DenseMatrix::dim)
    }

    pub fn last(&self) -> Option<(f64, &DenseMatrix)> {
        self.times.last().copied().zip(self.states.last())
    }
}

/// `[T, Π_sk f(T)]`.
pub fn lax_field(t_mat: &DenseMatrix, f: &FlowFunction) -> Result<DenseMatrix> {
    let ft = flow_function_of(t_mat, f)?;
    Ok(t_mat.commutator(&skew_part(&ft)))
}

/// `samples + 1` equally spaced times from 0 to `t_end`.
pub fn uniform_times(t_end: f64, samples: usize) -> Vec<f64> {
    let m = samples.max(1);
    (0..=m).map(|k| t_end * k as f64 / m as f64).collect()
}

/// Integrates the Lax flow from `s0` to `t_end`, sampled on
/// [`DEFAULT_SAMPLES`] equal intervals.
pub fn integrate(s0: &DenseMatrix, f: &FlowFunction, t_end: f64, tol: f64) -> Result<Trajectory> {
    integrate_at(s0, f, &uniform_times(t_end, DEFAULT_SAMPLES), tol)
}

/// Integrates the Lax flow from `s0` at time 0 through the given sample times.
pub fn integrate_at(s0: &DenseMatrix, f: &FlowFunction, times: &[f64], tol: f64) -> Result<Trajectory> {
    if !s0.is_symmetric(1e-10) {
        return Err(Error::InvalidInput("initial matrix must be symmetric".into()));
    }
    for lambda in symmetric_eigenvalues(s0)? {
        f.eval(lambda)?;
    }
    let n = s0.dim();
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let m = DenseMatrix::from_row_major(n, y.to_vec())?.symmetrized();
        let v = lax_field(&m, f)?;
        dy.copy_from_slice(v.as_slice());
        Ok(())
    };
    let opts = OdeOptions {
        tol,
        ..OdeOptions::default()
    };
    let sol = ode::integrate(rhs, 0.0, s0.as_slice(), times, &opts)?;
    let states = sol
        .states
        .into_iter()
        .map(|y| DenseMatrix::from_row_major(n, y).map(|m| m.symmetrized()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times: sol.times,
        states,
        meta: sol.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_jacobi, Rng64};

    #[test]
    fn diagonal_is_equilibrium() {
        let d = DenseMatrix::from_diagonal(&[1.0, 3.0, 2.0]);
        for f in [FlowFunction::Identity, FlowFunction::Log, FlowFunction::Polynomial(vec![0.0, 0.0, 0.0, 1.0])] {
            assert_eq!(lax_field(&d, &f).unwrap().max_abs(), 0.0);
        }
        let traj = integrate(&d, &FlowFunction::Identity, 3.0, 1e-10).unwrap();
        assert!(traj.states.iter().all(|s| s == &d));
    }

    #[test]
    fn two_by_two_field() {
        let j = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        let v = lax_field(&j, &FlowFunction::Identity).unwrap();
        assert_eq!(v, DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, -2.0]]));
    }

    #[test]
    fn componentwise_toda_equations() {
        let mut rng = Rng64::seeded(11);
        let j = random_jacobi(&mut rng, 3);
        let (a, b) = (j.a(), j.b());
        let v = lax_field(&j.to_dense(), &FlowFunction::Identity).unwrap();
        for k in 0..3 {
            let bk = if k < 2 { b[k] } else { 0.0 };
            let bkm = if k > 0 { b[k - 1] } else { 0.0 };
            assert!((v[(k, k)] - 2.0 * (bk * bk - bkm * bkm)).abs() < 1e-14);
        }
        for k in 0..2 {
            assert!((v[(k + 1, k)] - b[k] * (a[k + 1] - a[k])).abs() < 1e-14);
        }
        assert_eq!(v[(2, 0)], 0.0);
        assert_eq!(v[(0, 2)], 0.0);
    }

    #[test]
    fn two_by_two_limit() {
        let j = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        let traj = integrate(&j, &FlowFunction::Identity, 10.0, 1e-10).unwrap();
        let (t, last) = traj.last().unwrap();
        assert_eq!(t, 10.0);
        assert!(last.max_abs_diff(&DenseMatrix::from_diagonal(&[2.0, 0.0])) < 1e-6);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn log_needs_positive_spectrum() {
        let j = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        assert!(matches!(
            integrate(&j, &FlowFunction::Log, 1.0, 1e-10),
            Err(Error::Domain(_))
        ));
    }
}
