use thiserror::Error;

/// Errors produced by the library. Every variant carries the module or
/// operation it originated from so CLI diagnostics stay one line.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: dimension mismatch ({expected} vs {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{context}: non-finite value encountered")]
    NonFinite { context: &'static str },

    #[error("kernel_core: bandwidth sigma_sq must be positive and finite, got {got}")]
    InvalidBandwidth { got: f64 },

    #[error("kernel_core: all points identical, pairwise-distance heuristic is degenerate")]
    DegenerateData,

    #[error("{context}: matrix is not symmetric within tolerance")]
    Asymmetric { context: &'static str },

    #[error("{context}: need rank >= {needed}, matrix has retained rank {rank}")]
    RankDeficient {
        context: &'static str,
        rank: usize,
        needed: usize,
    },

    #[error("{context}: {reason}")]
    InvalidConfig {
        context: &'static str,
        reason: String,
    },

    #[error("{context}: eigen iteration failed to converge")]
    EigenFailed { context: &'static str },

    #[error("elastic_net: objective unbounded below (zero curvature with active linear term)")]
    Unbounded,

    #[error("{context}: need at least {needed} samples, got {got}")]
    TooFewSamples {
        context: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("{context}: basis is degenerate (all coefficient columns zero)")]
    DegenerateBasis { context: &'static str },

    #[error("eval_harness: scores contain a single class, need both inliers and outliers")]
    SingleClass,

    #[error("{context}: empty input")]
    EmptyInput { context: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
