use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter violated its precondition (non-finite, wrong sign, ...).
    #[error("invalid {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    /// A matrix handed to the eigensolver is not Hermitian within tolerance.
    #[error("matrix is not Hermitian: residual {residual:.3e} exceeds {tol:.3e}")]
    NotHermitian { residual: f64, tol: f64 },

    /// A matrix has complex entries; the solver operates on the real
    /// symmetric form (every Hamiltonian built here is real in the fixed
    /// basis).
    #[error("matrix has complex entries (max imaginary part {max_imag:.3e}); only real symmetric matrices are supported")]
    ComplexEntries { max_imag: f64 },

    /// The Jacobi iteration failed to reach the off-diagonal threshold.
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal {off_diag:.3e})")]
    NoConvergence { sweeps: usize, off_diag: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
