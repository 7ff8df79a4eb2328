//! Error types shared across the simulator.

use std::path::PathBuf;

/// Errors raised by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value or input argument is outside its domain.
    #[error("configuration error: {0}")]
    Config(String),

    /// The generator was asked for more objects than the canvas can hold.
    #[error("requested {requested} objects but the canvas holds at most {capacity}")]
    Capacity { requested: usize, capacity: usize },

    /// A scene or prompt references values outside the shared vocabulary.
    #[error("knowledge mismatch: {0}")]
    KnowledgeMismatch(String),

    /// A symbol has no codeword in the Huffman codebook.
    #[error("symbol {0} is not in the codebook")]
    UnknownSymbol(u16),

    /// Trailing bits do not form a complete codeword.
    #[error("{0} dangling bits at end of stream")]
    DanglingBits(usize),

    /// Two images with different resolutions were compared.
    #[error("resolution mismatch: {0:?} vs {1:?}")]
    ResolutionMismatch((usize, usize), (usize, usize)),

    /// Malformed text input (corpus, event log).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Aggregation over an empty result set.
    #[error("no session results to aggregate")]
    EmptyResults,

    /// A protocol step was attempted in the wrong lifecycle stage.
    #[error("invalid stage: expected {expected}, found {found}")]
    Stage {
        expected: &'static str,
        found: &'static str,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
