//! Adaptive Dormand–Prince 5(4) integrator for autonomous-or-not systems
//! `y' = F(t, y)` on flat `f64` state vectors.
//!
//! Steps are clipped so that every requested sample time is hit exactly;
//! only the samples are kept.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    /// Local error tolerance, applied as `tol · max(1, |y_i|)` per component.
    pub tol: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            initial_step: None,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Largest normalised error estimate among accepted steps (≤ 1 means within tol).
    pub max_error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: OdeStats,
}

/// Integrates from `(t0, y0)` through every time in `sample_times`, which
/// must be monotone in the direction of integration. `t0` itself is
/// recorded when it appears in `sample_times`.
pub fn integrate<F>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    sample_times: &[f64],
    opts: &OdeOptions,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let dim = y0.len();
    let t_last = *sample_times.last().unwrap_or(&t0);
    let dir = if t_last >= t0 { 1.0 } else { -1.0 };
    for w in sample_times.windows(2) {
        if (w[1] - w[0]) * dir < 0.0 {
            return Err(Error::InvalidInput("sample times must be monotone".into()));
        }
    }
    if sample_times.iter().any(|&s| (s - t0) * dir < 0.0) {
        return Err(Error::InvalidInput("sample time before the initial time".into()));
    }

    let mut stats = OdeStats::default();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    rhs(t, &y, &mut k[0])?;
    stats.rhs_evals += 1;

    let span = (t_last - t0).abs();
    let mut h = opts
        .initial_step
        .map(f64::abs)
        .unwrap_or_else(|| initial_step(&y, &k[0], opts.tol, span));

    let mut times = Vec::with_capacity(sample_times.len());
    let mut states = Vec::with_capacity(sample_times.len());

    for &target in sample_times {
        while (target - t) * dir > 0.0 {
            if stats.steps + stats.rejected >= opts.max_steps {
                return Err(Error::Integration {
                    t,
                    reason: "step budget exhausted".into(),
                    last_state: y,
                });
            }
            let remaining = (target - t).abs();
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };
            if step < 1e-14 * t.abs().max(1.0) && !clipped {
                return Err(Error::Integration {
                    t,
                    reason: format!("step size underflow (h = {step:e})"),
                    last_state: y,
                });
            }
            let hs = dir * step;

            for s in 1..7 {
                for i in 0..dim {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += hs * A[s][j] * kj[i];
                    }
                    tmp[i] = acc;
                }
                let (head, tail) = k.split_at_mut(s);
                let _ = head;
                rhs(t + C[s] * hs, &tmp, &mut tail[0])?;
                stats.rhs_evals += 1;
                if s == 6 {
                    y_new.copy_from_slice(&tmp);
                }
            }

            let mut err: f64 = 0.0;
            for i in 0..dim {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                let sc = opts.tol * 1f64.max(y[i].abs()).max(y_new[i].abs());
                err = err.max((hs * e).abs() / sc);
            }
            if !err.is_finite() {
                err = f64::INFINITY;
            }

            if err <= 1.0 {
                t = if clipped { target } else { t + hs };
                y.copy_from_slice(&y_new);
                k.swap(0, 6);
                stats.steps += 1;
                stats.max_error_estimate = stats.max_error_estimate.max(err);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a clipped step says nothing about the natural step size
                if !clipped || fac < 1.0 {
                    h = step * fac;
                }
            } else {
                stats.rejected += 1;
                let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                h = step * fac;
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::Integration {
                        t,
                        reason: format!("step size underflow (h = {h:e})"),
                        last_state: y,
                    });
                }
            }
        }
        times.push(target);
        states.push(y.clone());
    }

    Ok(OdeSolution {
        times,
        states,
        stats,
    })
}

fn initial_step(y: &[f64], f0: &[f64], tol: f64, span: f64) -> f64 {
    let d0 = y.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let d1 = f0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let h = if d1 < 1e-12 { 1e-3 } else { 0.01 * d0 / d1 };
    let h = h * (tol / 1e-6).powf(0.2).min(1.0);
    if span > 0.0 {
        h.min(span)
    } else {
        h
    }
}
