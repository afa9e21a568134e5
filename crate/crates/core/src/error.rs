use std::path::PathBuf;

use thiserror::Error;

use crate::calculus::SystemSpec;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("virtual dimension is undefined for negative degree {0}")]
    NegativeDegree(i64),

    #[error("twist k must be non-negative, got {0}")]
    NegativeTwist(i64),

    #[error("k-selection needs m >= 1 and n2 >= 1, got m = {m}, n2 = {n2}")]
    DegenerateSelection { m: u64, n2: u64 },

    #[error("parameters (d = {d}, m = {m}, n = {n}) exceed the supported bound {bound}")]
    ParameterOutOfRange { d: i64, m: u64, n: u64, bound: u64 },

    #[error("{0} is not a prime below 2^31")]
    NotPrime(u64),

    #[error("prime {p} must exceed degree {d} and multiplicity {m}")]
    PrimeTooSmall { p: u64, d: i64, m: u64 },

    #[error("point configuration has {got} points, system needs {want}")]
    PointCountMismatch { got: usize, want: u64 },

    #[error("oracle needs at least one trial")]
    NoTrials,

    #[error("factor pair {n1} x {n2} does not multiply to {n}")]
    BadFactorPair { n1: u64, n2: u64, n: u64 },

    #[error("store entry for {spec} claims non-speciality without evidence")]
    MissingEvidence { spec: SystemSpec },

    #[error("corrupt store record at {path}:{line}: {reason}: {record}")]
    CorruptRecord { path: PathBuf, line: usize, reason: String, record: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
