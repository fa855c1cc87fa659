use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {0:?} is outside the map domain")]
    OutOfDomain(Vec<f64>),
    #[error("pieces {0} and {1} both claim the point beyond seam tolerance")]
    AmbiguousPiece(usize, usize),
    #[error("point lies within seam tolerance of a piece boundary")]
    OnPieceBoundary,
    #[error("energy drift {drift:e} exceeds tolerance {tol:e}")]
    StepTooLarge { drift: f64, tol: f64 },
    #[error("k = {0} is not an odd integer >= 5")]
    BadK(usize),
    #[error("invalid dimension: {0}")]
    BadDimension(String),
    #[error("transition construction failed: {0}")]
    TransitionConstructionFailed(String),
    #[error("exit/entry alignment mismatch {0:e}")]
    AlignmentFailure(f64),
    #[error("correction shift window is empty")]
    ShiftBoundUnsatisfiable,
    #[error("epsilon too small for exact measure resolution: {0}")]
    EpsilonTooSmall(String),
    #[error("lattice shift search exhausted")]
    Exhausted,
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("subset is not solid")]
    NotSolid,
    #[error("median is ambiguous: two components qualify (exact 1/2 split)")]
    MedianAmbiguous,
    #[error("value is not in the image")]
    NotInImage,
    #[error("bisection bracket could not be established (image boundary)")]
    BisectionStall,
    #[error("membership oracle returned unknown")]
    MembershipUnknown,
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
