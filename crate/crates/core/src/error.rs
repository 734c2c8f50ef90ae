use thiserror::Error;

/// Errors raised by the grid, solver and energy layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MagError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("geometry does not fit inside the unpadded grid region: {0}")]
    GeometryOutsideGrid(String),

    #[error("field is nonzero outside the admissible support ({0})")]
    SupportViolation(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("|m| deviates from 1 by {deviation:.3e} at cell {cell:?}")]
    NotUnitNorm { cell: [usize; 3], deviation: f64 },

    #[error("dense oracle limited to {cap} unknowns, got {unknowns}")]
    DenseTooLarge { unknowns: usize, cap: usize },

    #[error("dense factorization failed: matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("tubular neighbourhood condition violated: thickness {thickness} >= curvature radius {radius}")]
    TubularCondition { thickness: f64, radius: f64 },

    #[error("shell is under-resolved: {cells:.2} cells across the thickness, need at least {required}")]
    UnderResolved { cells: f64, required: f64 },

    #[error("zero input where a nonzero field is required")]
    ZeroInput,

    #[error("line search failed to find descent after {backtracks} backtracks (step {step:.3e})")]
    NoDescent { backtracks: usize, step: f64 },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, MagError>;
