use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain truncation: {0}")]
    DomainTruncation(String),

    #[error("index {index} out of range for {len} modes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("spectral parameter {lambda} outside the momentum grid interior (0, {rho_max})")]
    OutsideGrid { lambda: f64, rho_max: f64 },

    #[error("regularization must be positive, got {0}")]
    NonPositiveRegularization(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("prelimit tensor with K = {k} exceeds the guard K_max = {max}")]
    TensorTooLarge { k: usize, max: usize },

    #[error("coefficient set carries no prelimit tensor")]
    MissingTensor,

    #[error("step size underflow at T = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite state encountered at T = {t}")]
    NonFinite { t: f64 },

    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),

    #[error("logistic bound requires x0 in (0, 1], got {0}")]
    InvalidGroundMass(f64),

    #[error("prelimit run at eta = {eta} failed: {source}")]
    Sweep {
        eta: f64,
        #[source]
        source: Box<Error>,
    },
}
