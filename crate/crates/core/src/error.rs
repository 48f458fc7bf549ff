use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    /// A field holds a value outside its allowed range, or fields disagree.
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    /// The document does not match the JSON schema.
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("traces have mismatched lengths ({expected} vs {found})")]
    LengthMismatch { expected: usize, found: usize },
    #[error("no traces to aggregate")]
    Empty,
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("Rooney Rule needs at least one candidate from group {0}")]
    MissingGroup(usize),
    #[error("cannot pick {k} finalists from {available} candidates")]
    TooManyFinalists { k: usize, available: usize },
    #[error("Rooney Rule needs at least {groups} finalists, got {k}")]
    TooFewFinalists { k: usize, groups: usize },
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
    #[error("unknown subsidy rule `{0}`")]
    UnknownSubsidy(String),
}
