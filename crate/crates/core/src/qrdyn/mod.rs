//! QR-family eigenvalue iterations on symmetric matrices and the identities
//! linking them to the Lax flows.

mod checks;
mod iterate;
mod step;

pub use checks::{
    cholesky_iterate, cholesky_step, interpolation_check, power_qr_identity_check,
    toda_exp_qr_check, CholeskyReport, InterpolationReport, PowerIdentityReport, TodaExpReport,
};
pub use iterate::{
    estimate_order, qr_iterate, Deflation, IterationTrace, Termination, TraceStep,
    DEFAULT_DEFLATION_TOL, ORDER_WINDOW,
};
pub use step::{
    compute_shift, qr_step, shifted_qr_step, shifted_qr_step_with, ShiftStrategy, StepVariant,
};
