use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown group `{0}`")]
    UnknownGroup(String),
    #[error("group is not closed: {0}")]
    NotClosed(String),
    #[error("temporal part trivial: every phase is zero")]
    TemporalPartTrivial,
    #[error("trajectory too short: need {needed}, have {available}")]
    TrajectoryTooShort { needed: f64, available: f64 },
    #[error("matrix not block diagonal in the isotypical basis (off-block norm {0:e})")]
    NotBlockDiagonal(f64),
    #[error("group `{0}` has no characteristic table")]
    NoCharTable(String),
    #[error("contour hit, perturb margin (|q| = {0:e} on contour)")]
    ContourHit(f64),
    #[error("increase quadrature: winding number {0} not integral")]
    NonIntegralWinding(f64),
    #[error("root count mismatch: argument principle gives {winding}, isolated {isolated}")]
    RootCountMismatch { winding: usize, isolated: usize },
    #[error("root is not simple (|dq/dλ| = {0:e})")]
    NonSimpleRoot(f64),
    #[error("singular jacobian")]
    SingularJacobian,
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("invalid step: {0}")]
    InvalidStep(String),
    #[error("solution unbounded at t = {0}")]
    Unbounded(f64),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("delay iteration did not contract after {0} steps")]
    NotContracting(usize),
    #[error("too few valid points: {0}")]
    TooFewPoints(usize),
    #[error("group `{0}` has no stability domain")]
    NoDomain(String),
    #[error("group `{0}` does not label a Hopf branch")]
    NotABranch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
