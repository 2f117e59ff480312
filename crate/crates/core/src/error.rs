use std::fmt;

/// One rejected field of a configuration or setup.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid setup: {}", join(.0))]
    Validation(Vec<Violation>),

    #[error("quadrature did not converge in {context}: estimated error {achieved:e} > tolerance {requested:e} after {intervals} intervals")]
    Quadrature {
        context: String,
        achieved: f64,
        requested: f64,
        intervals: usize,
    },

    #[error("numerical failure in {context}: {detail}")]
    Numeric { context: String, detail: String },

    #[error("transmission evaluated at an opaque point x/d = {0}")]
    OpaquePoint(f64),

    #[error(
        "propagation window too small: boundary/peak magnitude ratio {ratio:e} exceeds {limit:e}"
    )]
    Window { ratio: f64, limit: f64 },

    #[error("unsupported decoherence scenario: {0}")]
    UnsupportedScenario(String),

    #[error("degenerate signal: maximum plus minimum is zero")]
    DegenerateSignal,

    #[error("oracle mismatch: |fast - oracle| = {difference:e} exceeds {tolerance:e}")]
    OracleMismatch { difference: f64, tolerance: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn numeric(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Numeric {
            context: context.into(),
            detail: detail.into(),
        }
    }

    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation(vec![Violation {
            path: path.into(),
            message: message.into(),
        }])
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Validation(_) | Error::Io(_) => 2,
            Error::OracleMismatch { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
