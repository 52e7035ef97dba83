use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("improvement path exceeded {0} steps")]
    StepLimitExceeded(usize),

    #[error("infeasible transition: player {player} cannot move from action {from} to {to}")]
    InfeasibleTransition { player: usize, from: usize, to: usize },

    #[error("state space of {size} joint actions exceeds the cap of {cap}")]
    StateSpaceTooLarge { size: usize, cap: usize },

    #[error("stationary solve did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("utility of player {player} depends on the others' actions (witnesses {first:?} and {second:?})")]
    NotSeparable { player: usize, first: Vec<usize>, second: Vec<usize> },

    #[error("game admits no exact potential")]
    NotPotential,

    #[error("state {state:?} cannot reach the root {root:?}")]
    RootUnreachable { state: Vec<usize>, root: Vec<usize> },

    #[error("observation log is empty")]
    EmptyLog,

    #[error("singular covariance (determinant {0:e})")]
    SingularCovariance(f64),

    #[error("degenerate likelihood: {0}")]
    DegenerateLikelihood(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
