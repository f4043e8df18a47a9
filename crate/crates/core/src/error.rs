use thiserror::Error;

/// Errors produced by the simulator and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter is outside its allowed domain.
    #[error("parameter `{name}` = {value} out of domain: {constraint}")]
    ParameterDomain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// An input value or structure violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Phase estimation received a zero-length reference vector; the round
    /// must be discarded upstream.
    #[error("phase estimation failed: reference measurement is the zero vector")]
    EstimationFailure,

    /// A statistic was requested from too few samples to be reliable.
    #[error("not enough samples: got {got}, need at least {needed}")]
    InsufficientSamples { needed: usize, got: usize },

    /// A closed-form expression left its numerical domain (e.g. a symplectic
    /// discriminant went negative beyond tolerance).
    #[error("numerical domain violation: {0}")]
    Numerical(String),

    /// Least-squares fit could not be solved.
    #[error("fit failed: {0}")]
    FitFailure(String),

    /// Every round of a session was discarded.
    #[error("all {0} rounds were discarded")]
    AllRoundsDiscarded(usize),

    /// A session record file does not match the documented layout.
    #[error("record format error at line {line}: {message}")]
    RecordFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
