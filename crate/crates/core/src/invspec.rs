//! Moser's inverse spectral variables for Jacobi matrices: eigenvalues
//! together with the positive first components of the unit eigenvectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::FlowFunction;
use crate::linalg::{symmetric_eigen, DenseMatrix, DEFAULT_MIN_GAP};
use crate::tridiag::SymTridiagonal;

const NORM_TOL: f64 = 1e-12;
const MIN_FIRST_COMPONENT: f64 = 1e-12;
const BREAKDOWN_TOL: f64 = 1e-12;

/// Simple ascending spectrum with positive unit-norm norming constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpectralData")]
pub struct SpectralData {
    lambdas: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSpectralData {
    lambdas: Vec<f64>,
    v: Vec<f64>,
}

impl TryFrom<RawSpectralData> for SpectralData {
    type Error = Error;
    fn try_from(raw: RawSpectralData) -> Result<Self> {
        SpectralData::new(raw.lambdas, raw.v)
    }
}

impl SpectralData {
    /// Validates every invariant, including `Σ v² = 1` to `1e-12`.
    pub fn new(lambdas: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if lambdas.len() != v.len() || lambdas.is_empty() {
            return Err(Error::InvalidInput("lambdas and v must have the same nonzero length".into()));
        }
        if lambdas.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("spectral data must be finite".into()));
        }
        if let Some(w) = lambdas.windows(2).find(|w| w[1] - w[0] < DEFAULT_MIN_GAP) {
            return Err(Error::InvalidInput(format!(
                "eigenvalues must increase with gap >= {DEFAULT_MIN_GAP:e} ({} then {})",
                w[0], w[1]
            )));
        }
        if v.iter().any(|&x| x <= 0.0) {
            return Err(Error::InvalidInput("norming constants must be positive".into()));
        }
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!("norming constants must have unit norm (|v|^2 = {norm2})")));
        }
        Ok(Self { lambdas, v })
    }

    /// Like [`new`](Self::new) but rescales `v` to unit norm first.
    pub fn normalized(lambdas: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidInput("norming vector is zero".into()));
        }
        Self::new(lambdas, v.into_iter().map(|x| x / norm).collect())
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }
}

pub fn norming_constants(j: &SymTridiagonal) -> Result<SpectralData> {
    if !j.is_jacobi() {
        return Err(Error::InvalidInput("norming constants need a Jacobi matrix".into()));
    }
    let eig = symmetric_eigen(&j.to_dense(), 1e-12)?;
    if eig.min_gap() < DEFAULT_MIN_GAP {
        return Err(Error::NumericalDegeneracy(format!("eigenvalue gap {:e}", eig.min_gap())));
    }
    let v: Vec<f64> = (0..j.dim()).map(|i| eig.vectors[(0, i)].abs()).collect();
    if let Some(i) = v.iter().position(|&x| x < MIN_FIRST_COMPONENT) {
        return Err(Error::NumericalDegeneracy(format!(
            "first eigenvector component {i} vanishes ({:e})",
            v[i]
        )));
    }
    // the first row of an orthogonal matrix is already a unit vector; remove roundoff
    SpectralData::normalized(eig.values, v)
}

/// Jacobi matrix `QᵀΛQ`, where the columns of `Q` orthonormalise the
/// Krylov sequence `v, Λv, …, Λⁿ⁻¹v`. The basis is built in three-term
/// (Lanczos) form with full reorthogonalisation, which spans the same
/// nested subspaces with the same orientation as classical Gram–Schmidt.
pub fn reconstruct(sd: &SpectralData) -> Result<SymTridiagonal> {
    let n = sd.dim();
    let lam = sd.lambdas();
    let scale = lam.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let mut q = DenseMatrix::zeros(n);
    let mut cur = sd.v().to_vec();
    q.set_column(0, &cur);
    for k in 1..n {
        let mut w: Vec<f64> = cur.iter().zip(lam).map(|(x, l)| x * l).collect();
        for _pass in 0..2 {
            for j in 0..k {
                let qj = q.column(j);
                let c: f64 = qj.iter().zip(&w).map(|(a, b)| a * b).sum();
                for (wi, qi) in w.iter_mut().zip(&qj) {
                    *wi -= c * qi;
                }
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < BREAKDOWN_TOL * scale {
            return Err(Error::Reconstruction { step: k });
        }
        cur = w.into_iter().map(|x| x / norm).collect();
        q.set_column(k, &cur);
    }
    let j = DenseMatrix::from_diagonal(lam).congruence(&q).symmetrized();
    let t = SymTridiagonal::from_dense(&j);
    if !t.is_jacobi() {
        return Err(Error::Consistency("reconstructed matrix lost positive off-diagonals".into()));
    }
    Ok(t)
}

/// `v(t) = exp(t f(Λ)) v(0) / ‖·‖`, computed with the largest exponent factored out.
pub fn moser_evolve(sd: &SpectralData, f: &FlowFunction, t: f64) -> Result<SpectralData> {
    if t == 0.0 {
        return Ok(sd.clone());
    }
    let expo = sd
        .lambdas()
        .iter()
        .zip(sd.v())
        .map(|(&l, &v)| Ok(t * f.eval(l)? + v.ln()))
        .collect::<Result<Vec<f64>>>()?;
    let top = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = expo.iter().map(|e| (e - top).exp()).collect();
    if w.contains(&0.0) {
        return Err(Error::NumericalDegeneracy("a norming constant underflowed".into()));
    }
    SpectralData::normalized(sd.lambdas().to_vec(), w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::symes_solve;
    use crate::sample::{random_jacobi, Rng64};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn two_by_two_constants() {
        let j = SymTridiagonal::new(vec![1.0, 1.0], vec![1.0]).unwrap();
        let sd = norming_constants(&j).unwrap();
        assert!((sd.lambdas()[0]).abs() < 1e-15 && (sd.lambdas()[1] - 2.0).abs() < 1e-15);
        assert!(sd.v().iter().all(|x| (x - FRAC_1_SQRT_2).abs() < 1e-15));
        for b in [1e-3, 0.7, 40.0] {
            let sd = norming_constants(&SymTridiagonal::new(vec![0.0, 0.0], vec![b]).unwrap()).unwrap();
            assert!((sd.lambdas()[0] + b).abs() < 1e-12 * b.max(1.0));
            assert!(sd.v().iter().all(|x| (x - FRAC_1_SQRT_2).abs() < 1e-14));
        }
    }

    #[test]
    fn reconstruct_two_by_two() {
        let sd = SpectralData::normalized(vec![0.0, 2.0], vec![1.0, 1.0]).unwrap();
        let j = reconstruct(&sd).unwrap();
        let expected = SymTridiagonal::new(vec![1.0, 1.0], vec![1.0]).unwrap();
        assert!(j.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn roundtrips() {
        let mut rng = Rng64::seeded(21);
        for n in 2..=10 {
            let j = random_jacobi(&mut rng, n);
            let sd = norming_constants(&j).unwrap();
            assert!(sd.v().iter().all(|&x| x > 0.0));
            assert!(reconstruct(&sd).unwrap().max_abs_diff(&j) < 1e-10);
        }
        let sd = SpectralData::normalized(vec![1.0, 2.0, 3.0], vec![1.0; 3]).unwrap();
        let back = norming_constants(&reconstruct(&sd).unwrap()).unwrap();
        assert!(crate::linalg::max_abs_diff_vec(back.lambdas(), sd.lambdas()) < 1e-10);
        assert!(crate::linalg::max_abs_diff_vec(back.v(), sd.v()) < 1e-10);
    }

    #[test]
    fn gaps_are_simple() {
        let mut rng = Rng64::seeded(8);
        for _ in 0..20 {
            let sd = norming_constants(&random_jacobi(&mut rng, 8)).unwrap();
            assert!(sd.lambdas().windows(2).all(|w| w[1] - w[0] >= 1e-8));
        }
    }

    #[test]
    fn invariants_rejected() {
        assert!(SpectralData::new(vec![1.0, 1.0], vec![FRAC_1_SQRT_2; 2]).is_err());
        assert!(SpectralData::new(vec![1.0, 2.0], vec![1.0, 0.0]).is_err());
        assert!(SpectralData::new(vec![1.0, 2.0], vec![0.5, 0.5]).is_err());
        assert!(serde_json::from_str::<SpectralData>(r#"{"lambdas":[2,1],"v":[0.6,0.8]}"#).is_err());
        let ok: SpectralData = serde_json::from_str(r#"{"lambdas":[1,2],"v":[0.6,0.8]}"#).unwrap();
        assert_eq!(ok.v(), &[0.6, 0.8]);
    }

    #[test]
    fn evolution_group_law_and_flow() {
        let mut rng = Rng64::seeded(13);
        let j = random_jacobi(&mut rng, 5);
        let sd = norming_constants(&j).unwrap();
        let f = FlowFunction::Identity;
        assert_eq!(moser_evolve(&sd, &f, 0.0).unwrap(), sd);
        let a = moser_evolve(&moser_evolve(&sd, &f, 0.4).unwrap(), &f, 1.1).unwrap();
        let b = moser_evolve(&sd, &f, 1.5).unwrap();
        assert!(crate::linalg::max_abs_diff_vec(a.v(), b.v()) < 1e-12);

        let flowed = symes_solve(&j.to_dense(), &f, 1.5).unwrap();
        let via_moser = reconstruct(&b).unwrap().to_dense();
        assert!(flowed.max_abs_diff(&via_moser) < 1e-9);
    }

    #[test]
    fn two_by_two_evolution_closed_form() {
        let sd = SpectralData::normalized(vec![0.0, 2.0], vec![1.0, 1.0]).unwrap();
        let t = 0.8;
        let out = moser_evolve(&sd, &FlowFunction::Identity, t).unwrap();
        let e = (2.0 * t).exp();
        let norm = (1.0 + e * e).sqrt();
        assert!((out.v()[0] - 1.0 / norm).abs() < 1e-15);
        assert!((out.v()[1] - e / norm).abs() < 1e-15);
    }
}
