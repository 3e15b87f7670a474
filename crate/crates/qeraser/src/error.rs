//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("register `{0}` appears on both sides of a tensor product")]
    LayoutConflict(String),

    #[error("register `{0}` is not present in the state layout")]
    MissingRegister(String),

    #[error("register `{name}` has labels {found:?}, expected {expected:?}")]
    LabelMismatch {
        name: String,
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("state layouts differ: {0:?} vs {1:?}")]
    LayoutMismatch(Vec<String>, Vec<String>),

    #[error("amplitude table has {found} entries, layout requires {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite amplitude at flat index {0}")]
    NonFinite(usize),

    #[error("vectors are not orthonormal: {0}")]
    NotOrthonormal(String),

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("invalid register: {0}")]
    InvalidRegister(String),

    #[error("unknown label `{label}` for register `{register}`")]
    UnknownLabel { register: String, label: String },

    #[error("unknown outcome `{0}`")]
    UnknownOutcome(String),

    #[error("measurements act on the same register `{0}`")]
    RegisterConflict(String),

    #[error("outcome `{0}` has zero probability and cannot be conditioned on")]
    ImpossibleOutcome(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("tally stratum is empty")]
    EmptyTally,

    #[error("visibility is undefined: max + min = 0")]
    UndefinedVisibility,

    #[error("i/o failure on `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
