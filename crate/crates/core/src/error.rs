use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("could not determine transcript format of {0}")]
    UnknownFormat(PathBuf),

    #[error("malformed XML: {0}")]
    MalformedXml(String),

    #[error("invalid text encoding: {0}")]
    Encoding(String),

    #[error("annotation {annotation} references undeclared time slot {slot}")]
    DanglingTimeSlotRef { annotation: String, slot: String },

    #[error("annotation {annotation} references unknown annotation {target}")]
    DanglingAnnotationRef { annotation: String, target: String },

    #[error("event on tier {tier} references undeclared timeline item {tli}")]
    DanglingTliRef { tier: String, tli: String },

    #[error("tier {tier} names unknown parent tier {parent}")]
    DanglingTierRef { tier: String, parent: String },

    #[error("cannot resolve time of {0}: no anchored neighbour on its chain")]
    UnresolvableTime(String),

    #[error("annotation on tier {tier} ends before it begins ({begin_ms} > {end_ms})")]
    InvertedSpan { tier: String, begin_ms: i64, end_ms: i64 },

    #[error("CHAT file has no @Begin header")]
    MissingHeader,

    #[error("malformed time bullet on line {line}: {bullet:?}")]
    MalformedTimeBullet { line: usize, bullet: String },

    #[error("malformed TextGrid: {0}")]
    MalformedTextGrid(String),

    #[error("interval {index} on tier {tier} starts at {begin_ms} ms, before the previous end at {prev_end_ms} ms")]
    NonMonotoneIntervals { tier: String, index: usize, begin_ms: i64, prev_end_ms: i64 },

    #[error("invalid turn: {0}")]
    InvalidTurn(String),

    #[error("tier map selects no utterance tier")]
    NoUtteranceTier,

    #[error("tier map patterns matched no tier in {0}")]
    EmptySelection(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("table schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("table parse error on line {line}: {msg}")]
    TableParse { line: usize, msg: String },

    #[error("duplicate turn id {0}")]
    DuplicateUid(String),

    #[error("recording length must be positive")]
    ZeroRecording,

    #[error("need at least two distinct tokens for a rank/frequency fit")]
    TooFewTokens,

    #[error("table has no turns")]
    EmptyTable,

    #[error("corpus has {tokens} scorable tokens, fewer than min_count {min_count}")]
    CorpusTooSmall { tokens: usize, min_count: usize },

    #[error("media directory {path} is unreadable: {source}")]
    MediaDirUnreadable { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
