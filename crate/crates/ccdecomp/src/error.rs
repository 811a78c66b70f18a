//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("measure has {atoms} atoms, above the brute-force guard of {limit}; use the indexed path")]
    BruteForceGuard { atoms: usize, limit: usize },

    #[error("tail window of {window} does not fit a sequence of length {len}")]
    TailTooLarge { window: usize, len: usize },

    #[error("row {row} of the scale matrix is not nondecreasing")]
    NonMonotoneRow { row: usize },

    #[error(
        "no convergent subsequence of length >= {min_len} above level {beta}; \
         best oscillation achieved was {best_oscillation}"
    )]
    NoSubsequence {
        min_len: usize,
        beta: f64,
        best_oscillation: f64,
    },

    #[error("input sequence is vanishing (level {alpha} <= tolerance {tol}); nothing to extract")]
    VanishingInput { alpha: f64, tol: f64 },

    #[error("extraction exceeded its iteration budget of {limit} refinement rounds")]
    IterationBudget { limit: usize },

    #[error("balls {i} and {j} overlap; a cutoff partition needs pairwise disjoint balls")]
    OverlappingBalls { i: usize, j: usize },

    #[error("grid geometries differ: {0}")]
    GeometryMismatch(String),

    #[error("integrability exponent is unbounded here; series parameters are required")]
    MissingSeriesParams,

    #[error("ball at {center:?} with radius {radius} exits the grid region")]
    BallExitsGrid { center: Vec<f64>, radius: f64 },

    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
