//! Numerical laboratory for isospectral matrix flows.
//!
//! The crate implements the Toda lattice and its generalisations as Lax
//! flows `T' = [T, Π_sk f(T)]`, together with the objects that describe
//! them: Flaschka's particle variables, Moser's norming constants, the
//! bidiagonal chart atlas of the isospectral manifold, the QR-family
//! eigenvalue iterations interpolated by the flows, and the Moser–Veselov
//! billiard map.
//!
//! Module map:
//!
//! - [`linalg`]: QR / LU / symmetric eigen kernels, matrix functions, splittings.
//! - [`flows`]: Lax vector fields, adaptive integration, solution by factorization,
//!   conserved quantities.
//! - [`invspec`]: norming constants, Krylov reconstruction, their evolution.
//! - [`atlas`]: bidiagonal coordinates, chart flows and the momentum map.
//! - [`qrdyn`]: shifted QR steps, deflating iteration, interpolation identities.
//! - [`billiard`]: the ellipsoid billiard and its refactorization form.
//! - [`acceptance`]: the machine-checkable property suite driven by `selfcheck`.

pub mod acceptance;
pub mod atlas;
pub mod billiard;
pub mod cli;
pub mod error;
pub mod flows;
pub mod func;
pub mod invspec;
pub mod linalg;
pub mod ode;
pub mod qrdyn;
pub mod sample;
pub mod tridiag;

pub use error::{Error, Result};
pub use func::FlowFunction;
pub use linalg::DenseMatrix;
pub use tridiag::SymTridiagonal;
