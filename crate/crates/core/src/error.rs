use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameters that cannot produce a valid lattice or grid.
    #[error("configuration error: {0}")]
    Config(String),

    /// Overflow or NaN while marching a grid.
    #[error("numerical error at layer {layer}: {message}")]
    Numerical { layer: usize, message: String },

    /// A malformed term sheet.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A failure inside a batch evaluation, tagged with the point that failed.
    #[error("{context}: {source}")]
    AtPoint {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn at(self, context: impl Into<String>) -> Self {
        Error::AtPoint {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
