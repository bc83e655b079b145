use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point projects onto the line at infinity")]
    DegenerateProjection,
    #[error("matrix is singular or numerically close to singular")]
    SingularMatrix,
    #[error("homography entries must not all be zero")]
    ZeroMatrix,
    #[error("non-finite value: {0}")]
    NonFinite(&'static str),
    #[error("invalid feature: {0}")]
    InvalidFeature(String),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(&'static str),
    #[error("linear system is ill-conditioned (condition estimate {0:.3e})")]
    IllConditioned(f64),
    #[error("need at least {needed} correspondences, got {got}")]
    TooFewCorrespondences { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no model found")]
    NoModelFound,
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("infeasible scene: {0}")]
    InfeasibleSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
