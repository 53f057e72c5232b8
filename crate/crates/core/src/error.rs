use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong between reading a CSV and printing a report.
///
/// [`Error::class`] groups the variants the way the command-line front-end
/// maps them onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {inner}")]
    InFile { origin: String, inner: Box<Error> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("empty catalog")]
    EmptyCatalog,
    #[error("empty transaction file")]
    EmptyTransactions,
    #[error("line {line}: duplicate product id {id:?}")]
    DuplicateProduct { id: String, line: u64 },
    #[error("line {line}: unknown product id {id:?}")]
    UnknownProduct { id: String, line: u64 },
    #[error("unknown category id {0:?}")]
    UnknownCategory(String),
    #[error("invalid synthetic config: {0}")]
    SynthConfig(String),
    #[error("minsup must be at least 1")]
    ZeroMinsup,
    #[error("itemset dump does not match catalog: {0}")]
    Inconsistent(String),
    #[error("empty candidate list for weighted draw")]
    EmptyCandidates,
    #[error(
        "transaction {transaction:?}: expected-mode allocation exceeded the state budget \
         of {budget}; use sampled mode for baskets this large"
    )]
    StateBudget { transaction: String, budget: usize },
    #[error("infeasible constraints: {0}")]
    Infeasible(String),
    #[error("solver node budget of {0} exhausted before optimality was proven")]
    NodeBudget(u64),
    #[error("brute-force solver limited to {max} items, model has {items}")]
    BruteGuard { items: usize, max: usize },
}

/// Coarse error classes, one per CLI exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Data,
    Infeasible,
    Budget,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InFile { inner, .. } => inner.class(),
            Error::Infeasible(_) => ErrorClass::Infeasible,
            Error::NodeBudget(_) | Error::StateBudget { .. } => ErrorClass::Budget,
            _ => ErrorClass::Data,
        }
    }

    /// Prefixes the error with the file (or other origin) it came from.
    pub fn in_file(self, origin: impl Into<String>) -> Error {
        Error::InFile {
            origin: origin.into(),
            inner: Box::new(self),
        }
    }
}
