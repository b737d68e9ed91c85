//! Lax-pair flows `T' = [T, Π_sk f(T)]`: the vector field, adaptive
//! integration, the exact solution by QR factorization, Flaschka's change
//! of variables and the conserved or monotone quantities along the flow.

mod export;
mod field;
mod invariants;
mod symes;
mod toda;

pub use export::{trajectory_to_csv, trajectory_to_json, write_trajectory_csv};
pub use field::{integrate, integrate_at, lax_field, uniform_times, Trajectory, DEFAULT_SAMPLES};
pub use invariants::{
    asymptotic_diagnosis, chop_invariants, match_roots, morse_function, partial_traces,
    trace_invariants, AsymptoticReport, Direction,
};
pub use symes::{symes_solve, symes_trajectory, SYMES_CHUNK_SPAN};
pub use toda::{
    flaschka, flaschka_rate, inverse_flaschka, physical_field, physical_hamiltonian, PhaseState,
};
