use std::io::Write;

use serde::{Deserialize, Serialize};

use super::step::{compute_shift, givens_step, ShiftStrategy, StepVariant};
use crate::error::{Error, Result};
use crate::tridiag::SymTridiagonal;

pub const DEFAULT_DEFLATION_TOL: f64 = 1e-12;
/// Bottom magnitudes inside `(lo, hi)` enter the convergence-order fit.
pub const ORDER_WINDOW: (f64, f64) = (1e-200, 1e-2);
const UNDERFLOW_FLOOR: f64 = 1e-290;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    /// `None` for the initial record.
    pub shift: Option<f64>,
    /// `|T_{m,m-1}|` at the bottom of the active block after the step.
    pub b_bottom: f64,
    /// 1-based off-diagonal index deflated right after this step, if any.
    pub deflated_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deflation {
    pub step: usize,
    /// 1-based off-diagonal index `k` (between rows `k` and `k + 1`).
    pub position: usize,
    /// Eigenvalue isolated by the split, when the split cut off a 1×1 block.
    pub eigenvalue: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Termination {
    Converged,
    MaxSteps,
    /// A step returned its input unchanged although the bottom entry is
    /// not negligible.
    FixedPoint { step: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub steps: Vec<TraceStep>,
    pub deflations: Vec<Deflation>,
    pub converged: bool,
    pub termination: Termination,
}

impl IterationTrace {
    /// Bottom magnitudes from the start up to and including the step
    /// after which the first deflation happened.
    pub fn first_segment(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for s in &self.steps {
            out.push(s.b_bottom);
            if s.deflated_at.is_some() {
                break;
            }
        }
        out
    }

    /// Number of shifted steps taken.
    pub fn step_count(&self) -> usize {
        self.steps.last().map_or(0, |s| s.step)
    }

    /// CSV `step,shift,b_bottom,deflated_at`.
    pub fn write_csv<W: Write>(&self, comment: Option<&str>, w: &mut W) -> Result<()> {
        if let Some(c) = comment {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "step,shift,b_bottom,deflated_at")?;
        for s in &self.steps {
            let shift = s.shift.map(|v| format!("{v:.16e}")).unwrap_or_default();
            let at = s.deflated_at.map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{:.16e},{}", s.step, shift, s.b_bottom, at)?;
        }
        Ok(())
    }
}

fn negligible(a: &[f64], b: &[f64], k: usize, tol: f64) -> bool {
    b[k].abs() < tol * (a[k].abs() + a[k + 1].abs()) || b[k].abs() < UNDERFLOW_FLOOR
}

/// Explicitly shifted QR iteration with deflation. Works on the bottom
/// unreduced block until it splits. Returns all eigenvalue estimates in
/// ascending order; a run that does not finish is flagged in the trace.
pub fn qr_iterate(
    t0: &SymTridiagonal,
    strategy: ShiftStrategy,
    deflation_tol: f64,
    max_steps: usize,
) -> Result<(Vec<f64>, IterationTrace)> {
    if !(deflation_tol > 0.0) {
        return Err(Error::InvalidInput("deflation tolerance must be positive".into()));
    }
    let n = t0.dim();
    let mut a = t0.a().to_vec();
    let mut b = t0.b().to_vec();
    let mut steps = Vec::new();
    let mut deflations = Vec::new();
    let mut hi = n - 1;
    let mut step = 0usize;
    let mut termination = Termination::Converged;

    let mut split = vec![false; n.saturating_sub(1)];
    let mut split_all = |a: &[f64], b: &mut [f64], hi: usize, step: usize, defl: &mut Vec<Deflation>| {
        let mut first = None;
        for k in (0..hi).rev() {
            if !split[k] && negligible(a, b, k, deflation_tol) {
                split[k] = true;
                b[k] = 0.0;
                let eig = (k + 1 == hi).then_some(a[hi]);
                defl.push(Deflation {
                    step,
                    position: k + 1,
                    eigenvalue: eig,
                });
                first.get_or_insert(k + 1);
            }
        }
        first
    };

    let bottom = |b: &[f64], hi: usize| if hi > 0 { b[hi - 1].abs() } else { 0.0 };
    let defl0 = if n > 1 { split_all(&a, &mut b, hi, 0, &mut deflations) } else { None };
    steps.push(TraceStep {
        step: 0,
        shift: None,
        b_bottom: bottom(&b, hi),
        deflated_at: defl0,
    });

    'outer: while hi > 0 {
        // shrink past finished 1x1 blocks
        while hi > 0 && b[hi - 1] == 0.0 {
            hi -= 1;
        }
        if hi == 0 {
            break;
        }
        let mut lo = hi - 1;
        while lo > 0 && b[lo - 1] != 0.0 {
            lo -= 1;
        }
        if step >= max_steps {
            termination = Termination::MaxSteps;
            break 'outer;
        }
        let block = SymTridiagonal::new(a[lo..=hi].to_vec(), b[lo..hi].to_vec())?;
        let s = compute_shift(&block, strategy);
        let (next, _) = givens_step(&block, s, StepVariant::Positive);
        step += 1;
        let unchanged = next == block;
        a[lo..=hi].copy_from_slice(next.a());
        b[lo..hi].copy_from_slice(next.b());
        let b_bottom = bottom(&b, hi);
        let d = split_all(&a, &mut b, hi, step, &mut deflations);
        steps.push(TraceStep {
            step,
            shift: Some(s),
            b_bottom,
            deflated_at: d,
        });
        if unchanged && d.is_none() {
            termination = Termination::FixedPoint { step };
            break;
        }
    }
    let converged = termination == Termination::Converged;
    let mut eig = a;
    eig.sort_by(f64::total_cmp);
    Ok((
        eig,
        IterationTrace {
            steps,
            deflations,
            converged,
            termination,
        },
    ))
}

/// Least-squares slope of `ln b_{m+1}` against `ln b_m` over the first run
/// of at least three consecutive values inside [`ORDER_WINDOW`].
pub fn estimate_order(b_seq: &[f64]) -> Result<f64> {
    let inside = |x: f64| x > ORDER_WINDOW.0 && x < ORDER_WINDOW.1;
    let mut start = None;
    let mut i = 0;
    while i < b_seq.len() {
        if inside(b_seq[i]) {
            let mut j = i;
            while j < b_seq.len() && inside(b_seq[j]) {
                j += 1;
            }
            if j - i >= 3 {
                start = Some((i, j));
                break;
            }
            i = j;
        } else {
            i += 1;
        }
    }
    let (i, j) = start.ok_or_else(|| {
        Error::NotEnoughData(format!(
            "need 3 consecutive values in ({:e}, {:e})",
            ORDER_WINDOW.0, ORDER_WINDOW.1
        ))
    })?;
    let xs: Vec<f64> = b_seq[i..j - 1].iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = b_seq[i + 1..j].iter().map(|v| v.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::NotEnoughData("bottom magnitudes do not vary".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{jacobi_eigenvalues, max_abs_diff_vec};
    use crate::sample::{random_jacobi, Rng64};

    #[test]
    fn diagonal_returns_immediately() {
        let d = SymTridiagonal::diagonal(&[3.0, -1.0, 2.0]);
        let (ev, tr) = qr_iterate(&d, ShiftStrategy::Wilkinson, 1e-12, 10).unwrap();
        assert_eq!(ev, vec![-1.0, 2.0, 3.0]);
        assert_eq!(tr.step_count(), 0);
        assert!(tr.converged);
    }

    #[test]
    fn rayleigh_fixed_point() {
        let t = SymTridiagonal::new(vec![0.0, 0.0], vec![1.0]).unwrap();
        let (_, tr) = qr_iterate(&t, ShiftStrategy::Rayleigh, 1e-12, 100).unwrap();
        assert!(!tr.converged);
        assert_eq!(tr.termination, Termination::FixedPoint { step: 1 });
    }

    #[test]
    fn wilkinson_matches_oracle() {
        let mut rng = Rng64::seeded(12);
        for _ in 0..10 {
            let t = random_jacobi(&mut rng, 8);
            let (ev, tr) = qr_iterate(&t, ShiftStrategy::Wilkinson, 1e-12, 400).unwrap();
            assert!(tr.converged);
            let oracle = jacobi_eigenvalues(&t.to_dense()).unwrap();
            assert!(max_abs_diff_vec(&ev, &oracle) < 1e-10);
            assert_eq!(tr.deflations.len(), 7);
        }
    }

    #[test]
    fn synthetic_orders() {
        let cubic: Vec<f64> = (0..6).map(|m| 1e-2f64.powi(3i32.pow(m))).collect();
        assert!((estimate_order(&cubic).unwrap() - 3.0).abs() < 1e-12);
        let quad: Vec<f64> = (0..9).map(|m| 1e-2f64.powi(2i32.pow(m))).collect();
        assert!((estimate_order(&quad).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(estimate_order(&[0.5, 1e-3, 1e-9]), Err(Error::NotEnoughData(_))));
    }

    #[test]
    fn trace_csv() {
        let t = SymTridiagonal::new(vec![2.0, 1.0], vec![0.5]).unwrap();
        let (_, tr) = qr_iterate(&t, ShiftStrategy::Wilkinson, 1e-12, 50).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(None, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,shift,b_bottom,deflated_at\n0,,"));
        assert!(text.trim_end().ends_with(",1"));
    }
}
