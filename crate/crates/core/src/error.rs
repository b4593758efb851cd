use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the numerical engine and the audio front end.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root finder could not bracket the requested target.
    #[error("no root: {0}")]
    NoRoot(String),

    /// A malformed or unsupported RIFF/WAVE stream.
    #[error("format error in {chunk} chunk: {detail}")]
    Format { chunk: String, detail: String },

    /// No file of a corpus could be read; each path comes with its reason.
    #[error("empty corpus: none of the {} input files could be read{}", skipped.len(), list_skipped(skipped))]
    EmptyCorpus { skipped: Vec<(PathBuf, String)> },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(chunk: &str, detail: impl Into<String>) -> Self {
        Error::Format {
            chunk: chunk.to_string(),
            detail: detail.into(),
        }
    }
}

fn list_skipped(skipped: &[(PathBuf, String)]) -> String {
    skipped
        .iter()
        .map(|(p, why)| format!("\n  {}: {why}", p.display()))
        .collect()
}

pub type Result<T> = std::result::Result<T, Error>;
