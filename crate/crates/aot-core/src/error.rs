use thiserror::Error;

/// Errors produced by the simulation and optimisation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is outside its allowed range.
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// Metrics were requested for a trace with no slots.
    #[error("trace is empty")]
    EmptyTrace,

    /// A zero age weight makes the optimal verification period unbounded;
    /// callers must model never-verify explicitly instead.
    #[error("alpha must be positive: with alpha = 0 the optimal period is unbounded (never verify)")]
    UnboundedPeriod,

    /// Verification never happens, so the age of trust grows without bound.
    #[error("age of trust is unbounded: verification probability is zero")]
    UnboundedAge,

    /// The policy needs per-slot rate observations the run does not provide.
    #[error("policy `{policy}` requires instantaneous rate observations but the run is mean-only")]
    IncompatibleObservability { policy: String },

    /// Iterative solver hit its iteration cap before reaching tolerance.
    #[error("value iteration did not converge after {iterations} sweeps (residual {residual:.3e}, tolerance {tolerance:.3e})")]
    NoConvergence {
        iterations: u64,
        residual: f64,
        tolerance: f64,
    },

    /// The closed-form trust-slot optimum is undefined for these parameters.
    #[error("closed-form trust-slot optimum undefined: alpha too large for the closed form (denominator {denominator:.6} <= 0); fall back to an exhaustive scan")]
    ClosedFormUndefined { denominator: f64 },

    /// A serialized policy document could not be interpreted.
    #[error("unsupported policy document: {0}")]
    PolicyDocument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
