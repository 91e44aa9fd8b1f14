use thiserror::Error;

/// Errors produced by the library. Each variant maps onto one CLI exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A size limit (enumeration cap, table size) was exceeded.
    #[error("capacity exceeded: {what} is {requested}, limit is {limit}")]
    Capacity {
        what: String,
        requested: usize,
        limit: usize,
    },

    /// A requested prior configuration cannot be reached by any parameter value.
    #[error("infeasible target: {0}")]
    Infeasible(String),

    /// Non-finite values, failed quadrature, and similar numerical breakdowns.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Malformed input data.
    #[error("data error: {0}")]
    Data(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn capacity(what: impl Into<String>, requested: usize, limit: usize) -> Self {
        Error::Capacity {
            what: what.into(),
            requested,
            limit,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
