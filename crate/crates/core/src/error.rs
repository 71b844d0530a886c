use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid source at `{path}`: {reason}")]
    InvalidSource { path: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("conditional row {row} has zero total weight after mapping")]
    DegenerateRow { row: usize },

    #[error("column {col} of the coupling has zero mass but a positive target")]
    DegenerateColumn { col: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("bracket failure: target {target} outside [{f_lo}, {f_hi}] on [{lo}, {hi}]")]
    BracketFailure {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        target: f64,
    },

    #[error("{solver} did not converge after {iters} iterations (last change {last_delta:e})")]
    NotConverged {
        solver: &'static str,
        iters: usize,
        last_delta: f64,
    },

    #[error("problem too large: {what} needs {count} points (limit {limit})")]
    TooLarge { what: String, count: u128, limit: u128 },
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidPmf(_)
            | Error::InvalidSource { .. }
            | Error::InvalidArgument(_)
            | Error::SupportMismatch(_) => 1,
            Error::TooLarge { .. } => 3,
            _ => 2,
        }
    }
}
