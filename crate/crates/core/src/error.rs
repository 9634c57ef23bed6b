//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by series construction, indexing, discovery and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty series")]
    EmptySeries,

    #[error("non-finite value at position {position}")]
    NonFinite { position: usize },

    #[error("subsequence out of range: offset {offset} length {length} in series of length {series_len}")]
    OutOfBounds {
        offset: usize,
        length: usize,
        series_len: usize,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("sequence of length {len} shorter than one segment of {segment}")]
    SequenceShorterThanSegment { len: usize, segment: usize },

    #[error("alphabet size {alphabet} is not a power of two >= 2")]
    InvalidAlphabet { alphabet: usize },

    #[error("invalid band radius {radius} for query length {len}")]
    InvalidBand { radius: usize, len: usize },

    #[error("invalid length range [{lmin}, {lmax}] for series length {series_len}")]
    InvalidLengthRange {
        lmin: usize,
        lmax: usize,
        series_len: usize,
    },

    #[error("query length {len} outside index range [{lmin}, {lmax}]")]
    QueryLengthOutOfRange {
        len: usize,
        lmin: usize,
        lmax: usize,
    },

    #[error("{what} must be >= 1")]
    ZeroParameter { what: &'static str },

    #[error("empty collection")]
    EmptyCollection,

    #[error("empty master-series group")]
    EmptyGroup,

    #[error("envelope parameters do not match index parameters: {detail}")]
    ParameterMismatch { detail: String },

    #[error("subsequence length {len} exceeds half the series length {series_len}")]
    LengthTooLargeForProfile { len: usize, series_len: usize },

    #[error("partial profile size p={p} smaller than neighbor count m={m}")]
    PartialTooSmall { p: usize, m: usize },

    #[error("cannot place {copies} planted copies of length {len} without overlap in {series_len} points")]
    PlantsDoNotFit {
        copies: usize,
        len: usize,
        series_len: usize,
    },

    #[error("bad magic at byte {at}: expected {expected:?}")]
    BadMagic { at: u64, expected: [u8; 4] },

    #[error("unsupported format version {version}")]
    BadVersion { version: u32 },

    #[error("truncated file at byte {at}: {what}")]
    Truncated { at: u64, what: &'static str },

    #[error("file inconsistency at byte {at}: {what}")]
    Corrupt { at: u64, what: String },

    #[error("dataset digest mismatch: index was built over different data")]
    DigestMismatch,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
