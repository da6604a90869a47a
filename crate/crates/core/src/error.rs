use thiserror::Error;

/// Rejections raised while validating urn parameters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("y0 must be at least 1, got {0}")]
    Y0(u64),
    #[error("b0 must be at least 1, got {0}")]
    B0(u64),
    #[error("p must lie in [0, 1], got {0}")]
    P(f64),
    #[error("p is not a decimal or num/den fraction: {0:?}")]
    PSyntax(String),
    #[error("alpha + beta + gamma must be at least 1 (no scheme adds any balls)")]
    NoAdditions,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("checkpoints must be sorted ascending, found {prev} before {next}")]
    UnsortedCheckpoints { prev: u64, next: u64 },
    #[error("checkpoint {checkpoint} lies outside [0, {n_steps}]")]
    CheckpointOutOfRange { checkpoint: u64, n_steps: u64 },
    #[error("frontier limit of {limit} states exceeded at level {level} ({states} states)")]
    FrontierExceeded { level: u64, states: usize, limit: usize },
    #[error("rational mode supports n <= {max}, got {n}")]
    RationalTooDeep { n: u64, max: u64 },
    #[error("denominator (alpha+beta)p + gamma(1-p) is zero; the affine map is undefined")]
    ZeroDenominator,
    #[error("parameters fall outside the convergence theorem (need alpha, beta, gamma >= 1 and p > 0)")]
    OutsideTheorem,
    #[error("{0}")]
    Domain(String),
    #[error("replicates must be at least 1")]
    NoReplicates,
    #[error("bins must be at least 1")]
    NoBins,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
