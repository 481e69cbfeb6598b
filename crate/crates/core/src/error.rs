use thiserror::Error;

/// Errors raised by body construction and the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported dimension {0} (supported: 2..=6)")]
    UnsupportedDimension(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("normals do not positively span the space; the halfspace intersection is unbounded")]
    Unbounded,
    #[error("halfspace intersection has empty interior (inradius {inradius:e} below {threshold:e})")]
    EmptyInterior { inradius: f64, threshold: f64 },
    #[error("vertex set has numerical rank {rank} < {dim}")]
    DegenerateHull { rank: usize, dim: usize },
    #[error("linear program failed: {0}")]
    LinearProgram(String),
    #[error("point lies outside the body")]
    PointOutside,
    #[error("dual quermassintegral of index {index} diverges at a boundary point")]
    DivergentIndex { index: f64 },
    #[error("affine extrapolation residual {residual:e} exceeds bound {bound:e}")]
    PoorFit { residual: f64, bound: f64 },
    #[error("facet {facet}: refinement levels differ by {diff:e} (allowed {allowed:e})")]
    QuadratureNonconvergence { facet: usize, diff: f64, allowed: f64 },
    #[error("origin lies outside the polytope (offset {offset:e} at facet {facet})")]
    OriginOutside { facet: usize, offset: f64 },
    #[error("origin is not interior (offset {offset:e} at facet {facet})")]
    OriginNotInterior { facet: usize, offset: f64 },
    #[error("support value {value:e} at atom {atom} is not positive")]
    NonpositiveSupport { atom: usize, value: f64 },
    #[error("measure is not even: atom {atom} has no antipodal partner of equal mass")]
    NotEven { atom: usize },
    #[error("body is not origin-symmetric")]
    NotSymmetric,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("{redundant} of {total} facets became redundant")]
    DegenerateDrift { redundant: usize, total: usize, unmatched: Vec<usize> },
    #[error("body collapsed: inradius/outradius = {ratio:e}")]
    CollapseDetected { ratio: f64 },
}

pub type Result<T> = std::result::Result<T, GeomError>;
