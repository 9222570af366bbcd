use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("step size control failed at t = {t} ps (h = {h:e})")]
    StepControl { t: f64, h: f64 },

    #[error("integration exceeded {max_steps} steps before t = {t_end} ps")]
    TooManySteps { max_steps: usize, t_end: f64 },

    #[error("Fock truncation overflow: top-level population {population:e} > {threshold:e} at n_max = {n_max}")]
    TruncationOverflow {
        population: f64,
        threshold: f64,
        n_max: usize,
    },

    #[error("steady state is not unique: {0}")]
    NonUniqueSteadyState(String),

    #[error("steady state requires damping (kappa, gamma or gamma_d > 0)")]
    NoDamping,

    #[error("mean photon number {0:e} too small for normalization")]
    VanishingSignal(f64),

    #[error("analysis failed: {0}")]
    Analysis(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("trajectory {index} failed: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unit conversion: {0}")]
    Units(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
