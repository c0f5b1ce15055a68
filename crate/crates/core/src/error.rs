use std::io;

use thiserror::Error;

use crate::query::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown property `{0}`")]
    UnknownProperty(String),

    #[error("value {value} for `{key}` is outside the observed bounds [{min}, {max}]")]
    OutOfBounds {
        key: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("property `{0}` has no observed values yet")]
    Unobserved(String),

    #[error("sensor `{uid}` has no value for `{key}`")]
    MissingProperty { key: String, uid: String },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("no property is included in the priority specification")]
    EmptyPriority,

    #[error("invalid priority specification: {0}")]
    InvalidPriority(String),

    #[error("key sets differ: only on the left {left_only:?}, only on the right {right_only:?}")]
    KeyMismatch {
        left_only: Vec<String>,
        right_only: Vec<String>,
    },

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("generator config: {0}")]
    Config(String),

    #[error("duplicate sensor uid `{0}`")]
    DuplicateUid(String),

    #[error("line {line}: {message}")]
    Load { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
