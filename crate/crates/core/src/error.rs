use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum SgarchError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("write failed: {0}")]
    Write(#[from] std::io::Error),

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("non-finite or missing value at row {row}")]
    NonFinite { row: usize },

    #[error("non-positive price {value} at row {row}; log returns need strictly positive prices")]
    NonPositivePrice { row: usize, value: f64 },

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid bandwidth {h}: {reason}")]
    InvalidBandwidth { h: f64, reason: &'static str },

    #[error("evaluation point {x} lies within one bandwidth of the boundary")]
    NearBoundary { x: f64 },

    #[error("invalid model order (p={p}, q={q}): q must be at least 1")]
    InvalidOrder { p: usize, q: usize },

    #[error("invalid parameter vector: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("constraint matrix is rank deficient (rank {rank} < {rows} rows)")]
    RankDeficient { rank: usize, rows: usize },

    #[error("constraint set is infeasible: {0}")]
    Infeasible(String),

    #[error("matrix `{what}` is singular, indefinite or ill-conditioned (condition number {cond:.3e}; negative means indefinite)")]
    Singular { what: &'static str, cond: f64 },

    #[error("optimizer did not converge: {0}")]
    NotConverged(String),

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),
}

pub type Result<T> = std::result::Result<T, SgarchError>;
