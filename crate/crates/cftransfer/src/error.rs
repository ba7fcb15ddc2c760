use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("inadmissible signed word: digit {digit} at position {position} follows sign -1")]
    Admissibility { position: usize, digit: String },

    #[error("set file line {line}: {reason}")]
    SetFile { line: usize, reason: String },

    #[error("value {value} lies in A but not in S")]
    Containment { value: u64 },

    #[error("too few elements: need {needed}, found {found}")]
    TooFewElements { needed: u64, found: u64 },

    #[error("query beyond materialized horizon {horizon}: {query}")]
    BeyondHorizon { horizon: u64, query: String },

    #[error("parameter search failed: {0}")]
    ParameterSearch(String),

    #[error("seed window at level {level} holds {count} elements of K (need at least 2)")]
    ThinWindow { level: usize, count: String },

    #[error("no admissible position for block {k}: {reason}")]
    NoAdmissiblePosition { k: usize, reason: String },

    #[error("digit {position} of the seed word violates its window: {reason}")]
    SeedViolation { position: usize, reason: String },

    #[error("word is not in the image of splice: position {position}: {reason}")]
    NotInImage { position: usize, reason: String },

    #[error("sampling impossible: {0}")]
    SamplingInfeasible(String),

    #[error("witness value {value} lies outside every materialized block")]
    OutsideBlocks { value: String },

    #[error("empty witness")]
    EmptyWitness,

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
