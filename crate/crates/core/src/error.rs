//! Error type shared across the crate.

use thiserror::Error;

/// Convenience alias used throughout the library.
pub type Result<T> = std::result::Result<T, TaggerError>;

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed corpus line; `line` is 1-based.
    #[error("corpus parse error at line {line}: {message}")]
    CorpusFormat { line: usize, message: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("split error: {0}")]
    Split(String),

    #[error("training error: {0}")]
    Training(String),

    /// Synthetic generation hit a reachable tag that cannot emit anything.
    #[error("generation error: tag '{tag}' is reachable but its emission row is all-zero")]
    Generation { tag: String },

    #[error("unknown tag '{tag}'")]
    UnknownTag { tag: String },

    /// Structural problem in a model file; `line` is 1-based.
    #[error("model format error in section {section} at line {line}: {message}")]
    ModelFormat {
        section: String,
        line: usize,
        message: String,
    },

    /// Probability outside `[0,1]` in a model file; `line` is 1-based.
    #[error("probability {value} out of range [0,1] in section {section} at line {line}")]
    ProbabilityRange {
        section: String,
        line: usize,
        value: f64,
    },

    /// Argument outside its mathematical domain (probability range,
    /// path length mismatch, empty candidate list, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Exhaustive enumeration would exceed the search-space guard.
    #[error("oracle capacity exceeded: {tags}^{length} tag sequences is over the 10^7 guard")]
    OracleCapacity { tags: usize, length: usize },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("config error: {0}")]
    Config(String),
}
