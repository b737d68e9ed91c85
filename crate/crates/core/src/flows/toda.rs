//! The physical particle chain and Flaschka's change of variables
//! `a_k = −y_k/2`, `b_k = ½ exp((x_k − x_{k+1})/2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tridiag::SymTridiagonal;

/// Positions `x` and velocities `y` of the non-periodic chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::InvalidInput("x and y must have the same nonzero length".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("phase state entries must be finite".into()));
        }
        Ok(Self { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

pub fn flaschka(p: &PhaseState) -> Result<SymTridiagonal> {
    let a = p.y.iter().map(|y| -0.5 * y).collect();
    let b = p
        .x
        .windows(2)
        .map(|w| {
            let v = 0.5 * (0.5 * (w[0] - w[1])).exp();
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(Error::Range(format!("exp((x_k - x_(k+1))/2) with gap {}", w[0] - w[1])))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    SymTridiagonal::new(a, b)
}

/// Inverse of [`flaschka`]; the translation freedom is fixed by `mean(x) = center`.
pub fn inverse_flaschka(j: &SymTridiagonal, center: f64) -> Result<PhaseState> {
    if !j.is_jacobi() {
        return Err(Error::InvalidInput("inverse Flaschka map needs positive off-diagonals".into()));
    }
    let n = j.dim();
    let y: Vec<f64> = j.a().iter().map(|a| -2.0 * a).collect();
    let mut x = vec![0.0; n];
    for k in 0..n - 1 {
        x[k + 1] = x[k] - 2.0 * (2.0 * j.b()[k]).ln();
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    for v in x.iter_mut() {
        *v += center - mean;
    }
    PhaseState::new(x, y)
}

/// `H = ½ Σ y_k² + Σ exp(x_k − x_{k+1})`.
pub fn physical_hamiltonian(p: &PhaseState) -> f64 {
    let kinetic = 0.5 * p.y.iter().map(|y| y * y).sum::<f64>();
    let potential: f64 = p.x.windows(2).map(|w| (w[0] - w[1]).exp()).sum();
    kinetic + potential
}

/// Hamiltonian vector field `(x', y') = (y, −∂H/∂x)`.
pub fn physical_field(p: &PhaseState) -> PhaseState {
    let n = p.dim();
    let e: Vec<f64> = p.x.windows(2).map(|w| (w[0] - w[1]).exp()).collect();
    let dy = (0..n)
        .map(|k| {
            let right = if k + 1 < n { e[k] } else { 0.0 };
            let left = if k > 0 { e[k - 1] } else { 0.0 };
            left - right
        })
        .collect();
    PhaseState {
        x: p.y.clone(),
        y: dy,
    }
}

/// Derivative of `flaschka(p)` along the tangent vector `dp` (chain rule).
pub fn flaschka_rate(p: &PhaseState, dp: &PhaseState) -> Result<SymTridiagonal> {
    let j = flaschka(p)?;
    let da = dp.y.iter().map(|v| -0.5 * v).collect();
    let db = (0..p.dim() - 1)
        .map(|k| 0.5 * j.b()[k] * (dp.x[k] - dp.x[k + 1]))
        .collect();
    SymTridiagonal::new(da, db)
}
