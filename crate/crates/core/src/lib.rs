//! Batch engine for ranking news sources from offline corpora.
//!
//! The pipeline combines six per-source quality signals into one consensus
//! score: peer reputation from weighted PageRank on the reporting citation
//! graph, political-bias magnitude from entity-level sentiment aggregation,
//! reporting breadth, reader popularity, and two bottomline-pressure penalty
//! flags (social-bot score and ad aggressiveness). The `evalkit` module
//! validates rankings against external expert lists; `synthgen` produces
//! synthetic corpora with planted ground truth so recovery is testable
//! end to end.

pub mod adsmeter;
pub mod bias;
pub mod botscore;
pub mod citegraph;
pub mod corpus;
pub mod evalkit;
pub mod pipeline;
pub mod ranker;
pub mod signals;
pub mod synthgen;

use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot canonicalize url {url:?}: {reason}")]
    UrlParse { url: String, reason: String },
    #[error("invalid record at {path}:{line}: {reason}")]
    Record {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("missing output of stage `{stage}` ({path}); run `{stage}` first")]
    MissingStage { stage: String, path: PathBuf },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
