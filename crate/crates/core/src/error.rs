use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid quotient spec ({code}): {message}")]
    InvalidSpec { code: &'static str, message: String },

    #[error("quotient matrix is reducible; construction needs a strongly connected S")]
    Reducible,

    #[error("no positive solution of the balance equations n_i s_ij = n_j s_ji")]
    NoBalanceSolution,

    #[error("cell sizes {sizes:?} violate a construction constraint: {reason}")]
    Constraints { sizes: Vec<usize>, reason: String },

    #[error("sampling gave up on piece ({cell_a},{cell_b}) after {attempts} attempts")]
    SamplingExhausted { cell_a: usize, cell_b: usize, attempts: usize },

    #[error("tree ball would have {needed} vertices, cap is {cap}")]
    TreeTooLarge { needed: u128, cap: usize },

    #[error("continuation broke down at t = {t:.3e} (step {step:.3e}) for y = {y}")]
    Continuation { t: f64, step: f64, y: num::Complex<f64> },

    #[error("graph does not match spec: {0}")]
    Mismatch(String),

    #[error("S/bulk matching failed: {0}")]
    Matching(String),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("{0}")]
    Argument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn spec(code: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidSpec { code, message: message.into() }
    }
}
