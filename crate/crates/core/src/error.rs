use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QtrapError {
    #[error("degenerate deformation: sin(tau) vanishes for imaginary tau = {tau}")]
    DegenerateDeformation { tau: f64 },

    #[error("q-factorial left the representable range at n = {n}")]
    FactorialRange { n: usize },

    #[error("q-number [{n}]_q = {value} is not positive; the ladder matrix is undefined")]
    NonPositiveQNumber { n: usize, value: f64 },

    #[error(
        "q-exponential did not converge within {n_max} terms (last term {last_term:e}, partial sum {partial_sum:e})"
    )]
    SeriesTruncation {
        n_max: usize,
        last_term: f64,
        partial_sum: f64,
    },

    #[error("truncation M = {truncation} is outside the supported range 1..=512")]
    TruncationRange { truncation: usize },

    #[error("coherent state with |alpha|^2 = {alpha_sq} needs M >= {min_truncation}, got M = {truncation}")]
    TruncationInadequate {
        alpha_sq: f64,
        truncation: usize,
        min_truncation: usize,
    },

    #[error("index ({m}, {n}) out of range for dimension {dim}")]
    IndexOutOfRange { m: usize, n: usize, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("assembled Hamiltonian is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigendecomposition(String),

    #[error("step size underflow at t = {t} (h = {h:e}); the system looks stiff at this tolerance")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("trace too short: {samples} samples, need at least {required}")]
    TraceTooShort { samples: usize, required: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, QtrapError>;
