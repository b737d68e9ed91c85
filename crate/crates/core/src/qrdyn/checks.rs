//! Numerical forms of the identities tying QR-type iterations to flows.

use serde::{Deserialize, Serialize};

use super::step::qr_step;
use crate::error::{Error, Result};
use crate::flows::{integrate_at, symes_solve};
use crate::func::FlowFunction;
use crate::linalg::{
    cholesky_like_factor, qr_factor, spectral_map, upper_inverse, DenseMatrix,
};
use crate::tridiag::SymTridiagonal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub flow_vs_symes: f64,
    pub flow_vs_qr: f64,
    pub symes_vs_qr: f64,
}

impl InterpolationReport {
    pub fn max_deviation(&self) -> f64 {
        self.flow_vs_symes.max(self.flow_vs_qr).max(self.symes_vs_qr)
    }
}

/// Compares the `f = ln` flow at `t = 1` (integrated and factorized) with
/// one unshifted QR step.
pub fn interpolation_check(s0: &DenseMatrix, tol: f64) -> Result<InterpolationReport> {
    let f = FlowFunction::Log;
    let flow = integrate_at(s0, &f, &[1.0], tol)?
        .states
        .pop()
        .expect("one sample");
    let sym = symes_solve(s0, &f, 1.0)?;
    let qr = qr_step(s0)?;
    Ok(InterpolationReport {
        flow_vs_symes: flow.max_abs_diff(&sym),
        flow_vs_qr: flow.max_abs_diff(&qr),
        symes_vs_qr: sym.max_abs_diff(&qr),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerIdentityReport {
    pub steps: usize,
    /// `‖S_n − Q_nᵀ S0 Q_n‖∞` with `S0ⁿ = Q_n R_n`.
    pub conjugation: f64,
    /// `‖S_n − R_n S0 R_n⁻¹‖∞`.
    pub similarity: f64,
}

impl PowerIdentityReport {
    pub fn deviation(&self) -> f64 {
        self.conjugation.max(self.similarity)
    }
}

pub fn power_qr_identity_check(s0: &DenseMatrix, n_steps: usize) -> Result<PowerIdentityReport> {
    let n = s0.dim();
    let mut iter = s0.clone();
    let mut power = DenseMatrix::identity(n);
    for _ in 0..n_steps {
        iter = qr_step(&iter)?;
        power = power.matmul(s0);
    }
    let f = qr_factor(&power.symmetrized())?;
    let conj = s0.congruence(&f.q);
    let sim = f.r.matmul(s0).matmul(&upper_inverse(&f.r));
    Ok(PowerIdentityReport {
        steps: n_steps,
        conjugation: iter.max_abs_diff(&conj),
        similarity: iter.max_abs_diff(&sim),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TodaExpReport {
    /// `‖exp J(m) − E_m‖∞` for `m = 0..=n_steps`.
    pub deviations: Vec<f64>,
}

impl TodaExpReport {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().copied().fold(0.0, f64::max)
    }
}

/// `exp J(m)` along the Toda flow against the QR sequence of `exp J0`.
pub fn toda_exp_qr_check(j0: &SymTridiagonal, n_steps: usize) -> Result<TodaExpReport> {
    let j = j0.to_dense();
    let exp = |m: &DenseMatrix| spectral_map(m, |x| Ok(x.exp()));
    let mut e = exp(&j)?;
    let mut deviations = vec![0.0];
    for m in 1..=n_steps {
        e = qr_step(&e)?;
        let jm = symes_solve(&j, &FlowFunction::Identity, m as f64)?;
        deviations.push(exp(&jm)?.max_abs_diff(&e));
    }
    Ok(TodaExpReport { deviations })
}

/// `M = M_L M_U ↦ M_U M_L` with equal positive diagonals.
pub fn cholesky_step(m: &DenseMatrix) -> Result<DenseMatrix> {
    let (ml, mu) = cholesky_like_factor(m)?;
    Ok(mu.matmul(&ml))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CholeskyReport {
    pub final_matrix: DenseMatrix,
    /// Frobenius norm of the strictly lower part after each step.
    pub lower_norms: Vec<f64>,
    pub steps_done: usize,
    /// Step at which the factorization broke down, with the reason.
    pub blowup: Option<(usize, String)>,
}

/// Iterates [`cholesky_step`]; a breakdown ends the run and is reported
/// rather than returned as an error.
pub fn cholesky_iterate(m: &DenseMatrix, steps: usize) -> Result<CholeskyReport> {
    if !m.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix".into()));
    }
    let n = m.dim();
    let mut cur = m.clone();
    let mut lower_norms = Vec::with_capacity(steps);
    let mut blowup = None;
    let mut done = 0;
    for k in 1..=steps {
        match cholesky_step(&cur) {
            Ok(next) if next.is_finite() => cur = next,
            Ok(_) => {
                blowup = Some((k, "non-finite entries".to_string()));
                break;
            }
            Err(e) => {
                blowup = Some((k, e.to_string()));
                break;
            }
        }
        done = k;
        let low: f64 = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| cur[(i, j)].powi(2))
            .sum();
        lower_norms.push(low.sqrt());
    }
    Ok(CholeskyReport {
        final_matrix: cur,
        lower_norms,
        steps_done: done,
        blowup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff_vec, symmetric_eigenvalues};
    use crate::sample::{random_jacobi_in, random_spd, Rng64};

    #[test]
    fn interpolation_trivial_cases() {
        let r = interpolation_check(&DenseMatrix::identity(3), 1e-10).unwrap();
        assert_eq!(r.max_deviation(), 0.0);
        let d = DenseMatrix::from_diagonal(&[1.0, 4.0]);
        assert_eq!(interpolation_check(&d, 1e-10).unwrap().max_deviation(), 0.0);
    }

    #[test]
    fn interpolation_random_spd() {
        let mut rng = Rng64::seeded(14);
        let s = random_spd(&mut rng, 5, 0.5, 3.0);
        let r = interpolation_check(&s, 1e-10).unwrap();
        assert!(r.max_deviation() < 1e-6, "{r:?}");
    }

    #[test]
    fn power_identity() {
        let mut rng = Rng64::seeded(15);
        let s = random_spd(&mut rng, 4, 0.5, 2.0);
        assert_eq!(power_qr_identity_check(&s, 0).unwrap().deviation(), 0.0);
        assert!(power_qr_identity_check(&s, 1).unwrap().deviation() < 1e-13);
        assert!(power_qr_identity_check(&s, 4).unwrap().deviation() < 1e-8);
    }

    #[test]
    fn toda_exp() {
        let d = SymTridiagonal::diagonal(&[0.5, -0.3, 0.1]);
        assert!(toda_exp_qr_check(&d, 3).unwrap().max_deviation() < 1e-15);
        let mut rng = Rng64::seeded(16);
        let j = random_jacobi_in(&mut rng, 5, (-0.5, 0.5), (0.1, 0.4));
        let r = toda_exp_qr_check(&j, 3).unwrap();
        assert_eq!(r.deviations.len(), 4);
        assert!(r.max_deviation() < 1e-7);
    }

    #[test]
    fn cholesky_examples() {
        assert_eq!(cholesky_step(&DenseMatrix::identity(3)).unwrap(), DenseMatrix::identity(3));
        let mut rng = Rng64::seeded(18);
        let s = random_spd(&mut rng, 4, 0.5, 3.0);
        let next = cholesky_step(&s).unwrap();
        assert!(next.is_symmetric(1e-12));
        let ev = symmetric_eigenvalues(&s).unwrap();
        assert!(max_abs_diff_vec(&symmetric_eigenvalues(&next.symmetrized()).unwrap(), &ev) < 1e-12);

        let rep = cholesky_iterate(&s, 50).unwrap();
        assert!(rep.blowup.is_none());
        assert!(rep.lower_norms.last().unwrap() < &rep.lower_norms[0]);
        let diag = rep.final_matrix.diagonal();
        assert!(diag.windows(2).all(|w| w[0] > w[1]));

        let bad = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        assert!(cholesky_step(&bad).is_err());
        assert_eq!(cholesky_iterate(&bad, 3).unwrap().blowup.map(|b| b.0), Some(1));
    }
}
