use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A value object violates one of its structural invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The stacked interfering channel leaves too small a null space.
    #[error("block diagonalization infeasible: need at least {required_nt} transmit antennas, have {nt}")]
    BdInfeasible { required_nt: usize, nt: usize },

    /// No antenna count up to the search cap meets the selection rule.
    #[error("plan unsatisfiable: no supportable-sojourner count up to the cap of {cap} meets the target")]
    Unsatisfiable { cap: u64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Unsatisfiable { .. } => 4,
            Error::Parse { .. } | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 3,
            _ => 2,
        }
    }
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
