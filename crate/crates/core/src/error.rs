use thiserror::Error;

/// Errors produced by kernel construction, validation and analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not row-stochastic: {0}")]
    NonStochastic(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("mixture weight {0} lies outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("kernel is not reversible (detailed-balance residual {0:.3e})")]
    NotReversible(f64),
    #[error("every orbit is a singleton, so the orbit kernel is the identity")]
    AllSingletons,
    #[error("input is not sorted: {0}")]
    NotSorted(&'static str),
    #[error("theta = {0} lies outside (0, 1)")]
    ThetaDegenerate(f64),
    #[error("function is not centered: |<f, 1>| = {0:.3e}")]
    NotCentered(f64),
    #[error("fundamental matrix is singular; the kernel is not ergodic")]
    SingularFundamentalMatrix,
    #[error("right spectral gap is degenerate (lambda_2 = {0})")]
    DegenerateGap(f64),
    #[error("support violation at ({0}, {1}): P > 0 where Q = 0")]
    SupportViolation(usize, usize),
    #[error("Q is not invariant under the orbit Gibbs sandwich (residual {0:.3e})")]
    QNotInvariant(f64),
    #[error("dominant block mass {0} is not above 1/2")]
    MassNotDominant(f64),
    #[error("partition is not of the singletons-plus-merged-block form")]
    WrongPartitionShape,
    #[error("free rows force a negative entry ({0:.3e}) in the merged block")]
    NegativeInducedEntry(f64),
    #[error("free row {row} sums to {got}, expected the merged-block mass {want}")]
    FreeRowSum { row: usize, got: f64, want: f64 },
    #[error("not factorable: {0}")]
    NotFactorable(String),
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("state space too large: {0}")]
    TooLarge(String),
    #[error("no convergence within {0} steps")]
    NoConvergence(u64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
