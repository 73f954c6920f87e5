//! Crate error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("branching factor below 2 (got {b})")]
    BranchingFactorBelowTwo { b: u64 },

    #[error("invalid cost parameters: {0}")]
    InvalidCostParams(String),

    #[error("invalid store shape: {0}")]
    InvalidShape(String),

    #[error("key space exceeded: {requested} items requested, {available} available")]
    KeySpaceExceeded { requested: u64, available: u64 },

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("page out of range: {page} (store has {max} pages)")]
    PageOutOfRange { page: u64, max: u64 },

    #[error("section out of range: {section} (index has {max} sections)")]
    SectionOutOfRange { section: u64, max: u64 },

    #[error("table of contents requires a sorted store")]
    TocOverRandomStore,

    #[error("no derangement exists for a single page")]
    DerangementImpossible,

    #[error("key out of range: {0} is below the first indexed key")]
    KeyOutOfRange(String),

    #[error("index text did not parse: {0}")]
    IndexParse(String),

    #[error("external token counting requires provider-reported usage")]
    ExternalCounterWithoutProvider,

    #[error("invalid trial config: {0}")]
    InvalidConfig(String),

    #[error("sweep file parse error at line {line}: {msg}")]
    SweepParse { line: usize, msg: String },

    #[error("remote endpoint not configured: {0}")]
    RemoteNotConfigured(String),

    #[error("remote transport failure: {0}")]
    RemoteTransport(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
