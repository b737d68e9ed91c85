use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{qr_positive_r, DenseMatrix};
use crate::tridiag::SymTridiagonal;

/// A shifted step is refused when some `|r_kk|` of `T − sI = QR` is below
/// this fraction of `‖T‖_F`.
const IMMEDIATE_DEFLATION_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "shift", rename_all = "snake_case")]
pub enum ShiftStrategy {
    None,
    Rayleigh,
    Wilkinson,
    Fixed(f64),
}

impl fmt::Display for ShiftStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => write!(f, "none"),
            Self::Rayleigh => write!(f, "rayleigh"),
            Self::Wilkinson => write!(f, "wilkinson"),
            Self::Fixed(s) => write!(f, "fixed:{s}"),
        }
    }
}

impl FromStr for ShiftStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" | "zero" => Ok(Self::None),
            "rayleigh" => Ok(Self::Rayleigh),
            "wilkinson" => Ok(Self::Wilkinson),
            other => other
                .strip_prefix("fixed:")
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .map(Self::Fixed)
                .ok_or_else(|| Error::InvalidInput(format!("unknown shift strategy '{other}'"))),
        }
    }
}

/// Sign convention for the triangular factor of a shifted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepVariant {
    /// `diag(R) > 0`.
    #[default]
    Positive,
    /// `sign(r_kk)` follows the sign of the k-th `LDLᵀ` pivot of `T − sI`,
    /// so every leading minor of `Q` is positive.
    Smooth,
}

/// Unshifted step `S = QR ↦ RQ` with `diag(R) > 0`.
pub fn qr_step(s: &DenseMatrix) -> Result<DenseMatrix> {
    let f = qr_positive_r(s)?;
    Ok(f.r.matmul(&f.q).symmetrized())
}

pub fn shifted_qr_step(t_mat: &SymTridiagonal, s: f64) -> Result<SymTridiagonal> {
    shifted_qr_step_with(t_mat, s, StepVariant::Positive)
}

/// `T − sI = QR`, `T ↦ RQ + sI`. Fails with an immediate-deflation error
/// carrying `s` when `T − sI` is numerically singular.
pub fn shifted_qr_step_with(t_mat: &SymTridiagonal, s: f64, variant: StepVariant) -> Result<SymTridiagonal> {
    let (next, rmin) = givens_step(t_mat, s, variant);
    let scale = t_mat.to_dense().frobenius_norm().max(f64::MIN_POSITIVE);
    if rmin <= IMMEDIATE_DEFLATION_TOL * scale {
        return Err(Error::ImmediateDeflation { eigenvalue: s });
    }
    Ok(next)
}

/// Shifted step by Givens rotations. Never fails; a zero `r_kk` keeps its
/// sign. Also returns `min |r_kk|`.
pub(crate) fn givens_step(t_mat: &SymTridiagonal, s: f64, variant: StepVariant) -> (SymTridiagonal, f64) {
    let n = t_mat.dim();
    let mut r = t_mat.to_dense();
    for i in 0..n {
        r[(i, i)] -= s;
    }
    let mut rots = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n.saturating_sub(1) {
        let (x, y) = (r[(k, k)], r[(k + 1, k)]);
        let h = x.hypot(y);
        let (c, sn) = if h == 0.0 { (1.0, 0.0) } else { (x / h, y / h) };
        for j in 0..n {
            let (p, q) = (r[(k, j)], r[(k + 1, j)]);
            r[(k, j)] = c * p + sn * q;
            r[(k + 1, j)] = -sn * p + c * q;
        }
        r[(k + 1, k)] = 0.0;
        rots.push((c, sn));
    }
    let signs: Vec<f64> = match variant {
        StepVariant::Positive => (0..n).map(|k| if r[(k, k)] < 0.0 { -1.0 } else { 1.0 }).collect(),
        StepVariant::Smooth => {
            let piv = ldl_pivot_signs(t_mat, s);
            (0..n)
                .map(|k| {
                    let pos = if r[(k, k)] < 0.0 { -1.0 } else { 1.0 };
                    pos * piv[k]
                })
                .collect()
        }
    };
    let rmin = (0..n).map(|k| r[(k, k)].abs()).fold(f64::INFINITY, f64::min);
    // Q = G_1ᵀ … G_{n-1}ᵀ, then Q ← Q D and R ← D R
    let mut q = DenseMatrix::identity(n);
    for (k, &(c, sn)) in rots.iter().enumerate() {
        for i in 0..n {
            let (p, w) = (q[(i, k)], q[(i, k + 1)]);
            q[(i, k)] = c * p + sn * w;
            q[(i, k + 1)] = -sn * p + c * w;
        }
    }
    for k in 0..n {
        for j in 0..n {
            r[(k, j)] *= signs[k];
            q[(j, k)] *= signs[k];
        }
    }
    // read the lower band only: (RQ)_{k+1,k} = r_{k+1,k+1} q_{k+1,k} keeps full
    // relative accuracy, while the upper entry suffers cancellation
    let mut next = r.matmul(&q);
    for i in 0..n {
        next[(i, i)] += s;
    }
    (SymTridiagonal::from_dense(&next), rmin)
}

/// Signs of the pivots of `T − sI = L D Lᵀ`; a zero pivot counts as positive.
fn ldl_pivot_signs(t_mat: &SymTridiagonal, s: f64) -> Vec<f64> {
    let (a, b) = (t_mat.a(), t_mat.b());
    let mut out = Vec::with_capacity(a.len());
    let mut d = a[0] - s;
    out.push(if d < 0.0 { -1.0 } else { 1.0 });
    for k in 1..a.len() {
        d = if d != 0.0 { a[k] - s - b[k - 1] * b[k - 1] / d } else { a[k] - s };
        out.push(if d < 0.0 { -1.0 } else { 1.0 });
    }
    out
}

/// Shift for the next step of the trailing block of `t_mat`.
pub fn compute_shift(t_mat: &SymTridiagonal, strategy: ShiftStrategy) -> f64 {
    let n = t_mat.dim();
    let (a, b) = (t_mat.a(), t_mat.b());
    match strategy {
        ShiftStrategy::None => 0.0,
        ShiftStrategy::Fixed(s) => s,
        ShiftStrategy::Rayleigh => a[n - 1],
        ShiftStrategy::Wilkinson => {
            if n < 2 {
                return a[n - 1];
            }
            let (p, c, off) = (a[n - 2], a[n - 1], b[n - 2]);
            let delta = 0.5 * (p - c);
            if off == 0.0 {
                return c;
            }
            if delta == 0.0 {
                // equidistant eigenvalues c ± |b|: take the smaller
                return c - off.abs();
            }
            let r = delta.hypot(off);
            c - off * off / (delta + delta.signum() * r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff_vec, symmetric_eigenvalues};
    use crate::sample::{random_jacobi, random_spd, Rng64};

    #[test]
    fn unshifted_examples() {
        let d = DenseMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        assert_eq!(qr_step(&d).unwrap(), d);
        let swap = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        assert!(qr_step(&swap).unwrap().max_abs_diff(&swap) < 1e-15);
        assert!(qr_step(&DenseMatrix::zeros(2)).is_err());

        let mut rng = Rng64::seeded(6);
        let s = random_spd(&mut rng, 6, 0.5, 4.0);
        let ev = symmetric_eigenvalues(&s).unwrap();
        let next = qr_step(&s).unwrap();
        assert!(max_abs_diff_vec(&symmetric_eigenvalues(&next).unwrap(), &ev) < 1e-12);
    }

    #[test]
    fn zero_shift_is_qr_step() {
        let mut rng = Rng64::seeded(7);
        let t = random_jacobi(&mut rng, 5);
        let a = shifted_qr_step(&t, 0.0).unwrap().to_dense();
        let b = qr_step(&t.to_dense()).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-13);
    }

    #[test]
    fn shifted_step_isospectral_and_jacobi() {
        let mut rng = Rng64::seeded(8);
        let t = random_jacobi(&mut rng, 7);
        let ev = symmetric_eigenvalues(&t.to_dense()).unwrap();
        let next = shifted_qr_step(&t, 0.37).unwrap();
        assert!(max_abs_diff_vec(&symmetric_eigenvalues(&next.to_dense()).unwrap(), &ev) < 1e-12);
        assert!(next.is_jacobi());
    }

    #[test]
    fn exact_eigenvalue_shift_deflates() {
        let t = SymTridiagonal::new(vec![1.0, 1.0], vec![1.0]).unwrap();
        assert!(matches!(
            shifted_qr_step(&t, 2.0),
            Err(Error::ImmediateDeflation { eigenvalue }) if eigenvalue == 2.0
        ));
        let (next, rmin) = givens_step(&t, 2.0, StepVariant::Positive);
        assert!(rmin < 1e-15);
        assert!(next.b()[0].abs() < 1e-15 && (next.a()[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_variant_only_flips_signs() {
        let mut rng = Rng64::seeded(9);
        let t = random_jacobi(&mut rng, 6);
        let s = 0.1;
        let p = shifted_qr_step_with(&t, s, StepVariant::Positive).unwrap();
        let q = shifted_qr_step_with(&t, s, StepVariant::Smooth).unwrap();
        assert!(max_abs_diff_vec(p.a(), q.a()) < 1e-13);
        for (x, y) in p.b().iter().zip(q.b()) {
            assert!((x.abs() - y.abs()).abs() < 1e-13);
        }
    }

    #[test]
    fn shift_examples() {
        let d = SymTridiagonal::diagonal(&[5.0, 3.0]);
        assert_eq!(compute_shift(&d, ShiftStrategy::Rayleigh), 3.0);
        assert_eq!(compute_shift(&d, ShiftStrategy::Wilkinson), 3.0);
        let swap = SymTridiagonal::new(vec![0.0, 0.0], vec![1.0]).unwrap();
        assert_eq!(compute_shift(&swap, ShiftStrategy::Wilkinson), -1.0);
        let t = SymTridiagonal::new(vec![4.0, 2.0, 1.0], vec![0.5, 1.0]).unwrap();
        let w = compute_shift(&t, ShiftStrategy::Wilkinson);
        assert!((w - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert_eq!(compute_shift(&t, ShiftStrategy::None), 0.0);
        assert_eq!(compute_shift(&t, ShiftStrategy::Fixed(0.25)), 0.25);
    }

    #[test]
    fn strategy_parsing() {
        for s in ["none", "rayleigh", "wilkinson", "fixed:1.5"] {
            let st: ShiftStrategy = s.parse().unwrap();
            assert_eq!(st.to_string().parse::<ShiftStrategy>().unwrap(), st);
        }
        assert!("fixed:nan".parse::<ShiftStrategy>().is_err());
    }
}
