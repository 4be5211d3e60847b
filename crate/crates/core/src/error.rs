use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point must be nonzero")]
    ZeroPoint,

    #[error("point is not on the unit sphere (norm {0})")]
    NonUnitPoint(f64),

    #[error("matrix is not orthogonal (deviation {0:e})")]
    NotOrthogonal(f64),

    #[error("invalid system shape: {0}")]
    InvalidShape(String),

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("inconsistent term: {0}")]
    InconsistentTerm(String),

    #[error("Newton undefined: Jacobian is rank deficient")]
    NewtonUndefined,

    #[error("Newton iteration did not converge within {0} steps")]
    NonConvergence(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grid budget exceeded: {count} points requested, budget {budget}")]
    GridBudget { count: u128, budget: u128 },

    #[error("covering budget exceeded at eta = {eta:e} with {refine_count} points left unresolved")]
    BudgetExceeded { eta: f64, k: u32, refine_count: u64 },

    #[error("simplex budget of {0} exceeded")]
    SimplexBudget(usize),

    #[error("input not antipodally closed")]
    NotAntipodal,

    #[error("projective mode requires epsilon < 1 (got {0})")]
    ProjectiveEpsilon(f64),

    #[error("facet {0:?} missing from complex")]
    MissingFacet(Vec<usize>),

    #[error("q_top {q_top} too large for complex with q_max {q_max}")]
    QTopTooLarge { q_top: usize, q_max: usize },

    #[error("no samples")]
    NoSamples,

    #[error("empty input")]
    EmptyInput,

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
