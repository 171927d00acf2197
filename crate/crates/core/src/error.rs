use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or derived quantity left its physical domain.
    #[error("domain error in `{field}`: {reason}")]
    Domain { field: String, reason: String },

    #[error(
        "closed-form first-order visibility needs distinct frequencies \
         (|omega_a - omega_b| / omega_a = {relative_gap:e}); use the integral form"
    )]
    DegenerateFrequencies { relative_gap: f64 },

    #[error("closed-form first-order visibility assumes a real beta_M (got imaginary part {imag:e}); use the integral form")]
    ComplexAmplitude { imag: f64 },

    #[error(
        "Fock truncation n_max = {n_max} for mode {mode} leaves tail mass {tail:e} (limit {limit:e}); \
         try n_max >= {suggested}"
    )]
    Truncation {
        mode: char,
        n_max: usize,
        tail: f64,
        limit: f64,
        suggested: usize,
    },

    #[error("Hilbert space dimension {dim} exceeds the limit of {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("numerical non-convergence in {what}: {detail}")]
    Convergence { what: String, detail: String },

    #[error("subsystem error: {0}")]
    Subsystem(String),

    #[error("config error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("invalid time grid: {0}")]
    TimeGrid(String),

    #[error("fit refused: {0}")]
    Fit(String),
}

impl Error {
    pub(crate) fn domain(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Domain {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            message: message.into(),
        }
    }

    pub(crate) fn convergence(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Convergence {
            what: what.into(),
            detail: detail.into(),
        }
    }
}
