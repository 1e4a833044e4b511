use alloc::boxed::Box;
use alloc::string::String;

use crate::corpus::Label;
use crate::graph::Edge;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{source_id}: no opcodes")]
    EmptySequence { source_id: String },
    #[error("invalid opcode token {0:?}")]
    InvalidToken(String),
    #[error("alphabet would be empty: every input sequence is empty")]
    EmptyAlphabet,
    #[error("opcode `{0}` is not in the alphabet")]
    UnknownOpcode(String),
    #[error("graphs were built over different alphabets")]
    AlphabetMismatch,
    #[error("edge filter is empty")]
    EmptyFilter,
    #[error("edge {0} lies outside the alphabet")]
    EdgeOutsideAlphabet(Edge),
    #[error("training data contains only {0} samples")]
    SingleClassCorpus(Label),
    #[error("threshold fitting needs at least 2 malware graphs and 1 benign graph (got {malware} and {benign})")]
    DegenerateTraining { malware: usize, benign: usize },
    #[error("top_k must be at least 1")]
    InvalidTopK,
    #[error("fold count must be at least 2 (got {0})")]
    InvalidFoldCount(usize),
    #[error("class {label} has {available} samples, fewer than k = {k}")]
    InsufficientSamples { label: Label, k: usize, available: usize },
    #[error("confusion counts are all zero")]
    DivisionByZero,
    #[error("per-family TPR map is empty")]
    EmptyFamilyMap,
    #[error("cannot average an empty list")]
    EmptyList,
    #[error("base sequence is empty")]
    EmptyBase,
    #[error("dead-code insertion requested but the benign pool has no opcodes")]
    EmptyBenignPool,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("fold {index}: {source}")]
    Fold { index: usize, source: Box<Error> },
}
