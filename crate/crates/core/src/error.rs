use thiserror::Error;

/// Errors raised by the numerical kernels and the higher level flows.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    /// A leading principal minor (1-based index) is not strictly positive.
    #[error("matrix not in factorization domain: leading minor {minor} is not positive")]
    NotInDomain { minor: usize },

    #[error("iteration did not converge after {iterations} iterations")]
    Convergence { iterations: usize },

    #[error("function undefined on spectrum: {0}")]
    Domain(String),

    /// The adaptive integrator could not continue; carries the last accepted state.
    #[error("integration failed at t = {t}: {reason}")]
    Integration {
        t: f64,
        reason: String,
        last_state: Vec<f64>,
    },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("reconstruction breakdown at Krylov step {step}")]
    Reconstruction { step: usize },

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    /// Leading minor (1-based) of the permuted eigenvector matrix is too close to zero.
    #[error("matrix not in chart domain: leading minor {minor} vanishes")]
    NotInChartDomain { minor: usize },

    /// The shift is (numerically) an eigenvalue: the step deflates immediately.
    #[error("shift {eigenvalue} is numerically an eigenvalue")]
    ImmediateDeflation { eigenvalue: f64 },

    #[error("not enough data: {0}")]
    NotEnoughData(String),

    #[error("degenerate billiard trajectory: {0}")]
    DegenerateTrajectory(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
