//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by configuration validation, quadrature, and state algebra.
#[derive(Debug, Error)]
pub enum Error {
    /// A config, plan, or target failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A mode index or request violates an operation's domain.
    #[error("invalid mode request: {0}")]
    InvalidMode(String),

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error(
        "quadrature did not converge for {context}: relative change {achieved:.3e} \
         at {nodes} nodes exceeds tolerance {tolerance:.3e}"
    )]
    QuadratureNotConverged {
        context: String,
        achieved: f64,
        tolerance: f64,
        nodes: usize,
    },

    /// Grid refinement of the brute-force overlap integral left too much error.
    #[error("oracle refinement error {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    OracleNotConverged { estimate: f64, tolerance: f64 },

    /// Coherent superposition cancelled to (numerically) nothing.
    #[error("degenerate state: destructive interference left residual norm ratio {residual:.3e}")]
    DegenerateState { residual: f64 },

    /// Subspace projection was requested over an empty index set.
    #[error("empty OAM subspace")]
    EmptySubspace,

    /// The spectral window failed the truncation-tail check even after widening.
    #[error("spectral window too narrow: {0}")]
    WindowTooNarrow(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    ///
    /// 1 = invalid input, 2 = quadrature failure, 3 = I/O failure,
    /// 4 = degenerate destructive interference.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_)
            | Error::InvalidMode(_)
            | Error::EmptySubspace
            | Error::Json(_) => 1,
            Error::QuadratureNotConverged { .. }
            | Error::OracleNotConverged { .. }
            | Error::WindowTooNarrow(_) => 2,
            Error::Io(_) => 3,
            Error::DegenerateState { .. } => 4,
        }
    }
}
