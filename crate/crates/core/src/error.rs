use core::fmt;

use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the solver core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violated its domain; `field` names the offending input.
    InvalidParameter { field: &'static str, reason: String },
    /// Two objects that must share a grid (or action set) do not.
    Mismatch { what: &'static str, left: usize, right: usize },
    /// Exact profile enumeration would exceed the configured cap.
    EnumerationTooLarge { profiles: f64, cap: f64 },
    /// Value iteration hit `max_sweeps` without reaching tolerance.
    ValueIterationDiverged { sweeps: usize, residuals: Vec<f64> },
    /// Power iteration hit `max_iters` without reaching tolerance.
    StationaryNotConverged { iterations: usize, residual: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Mismatch { .. } => "mismatch",
            Error::EnumerationTooLarge { .. } => "enumeration_too_large",
            Error::ValueIterationDiverged { .. } => "value_iteration_not_converged",
            Error::StationaryNotConverged { .. } => "stationary_not_converged",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { field, reason } => write!(f, "invalid `{field}`: {reason}"),
            Error::Mismatch { what, left, right } => {
                write!(f, "{what} mismatch: {left} vs {right}")
            }
            Error::EnumerationTooLarge { profiles, cap } => write!(
                f,
                "exact enumeration needs {profiles:.3e} profiles (cap {cap:.1e}); \
                 use monte carlo or the K=1 fast path"
            ),
            Error::ValueIterationDiverged { sweeps, residuals } => write!(
                f,
                "value iteration did not converge in {sweeps} sweeps (last residual {:.3e})",
                residuals.last().copied().unwrap_or(f64::NAN)
            ),
            Error::StationaryNotConverged { iterations, residual } => write!(
                f,
                "stationary distribution did not converge in {iterations} iterations \
                 (residual {residual:.3e})"
            ),
        }
    }
}
