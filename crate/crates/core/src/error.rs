use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dipole separation must be non-zero (singular geometry)")]
    SingularGeometry,

    #[error("basis matrix is not unitary (deviation {deviation:.3e})")]
    NonUnitaryBasis { deviation: f64 },

    #[error("density matrix is in the {found} basis, expected {expected}")]
    WrongBasis {
        expected: &'static str,
        found: &'static str,
    },

    #[error("qubits are detuned by {detuning:.3e}; use detuned_jump_channels")]
    DetunedParameters { detuning: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("integrator step size underflow at t = {t:.6e} (h = {h:.3e}); the problem is stiff, use the spectral propagator")]
    Stiffness { t: f64, h: f64 },

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("lifetime fit: {0}")]
    InsufficientHorizon(String),

    #[error("lifetime fit quality too low: {0}")]
    FitQuality(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::InvalidState(_)
            | Error::Stiffness { .. }
            | Error::Decomposition(_)
            | Error::InsufficientHorizon(_)
            | Error::FitQuality(_) => true,
            Error::Scenario { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
