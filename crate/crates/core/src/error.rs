//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("order-exceeded: derivative order {requested} exceeds available order {max}")]
    OrderExceeded { requested: usize, max: usize },

    #[error("nonpositive-epsilon: epsilon must be > 0, got {0}")]
    NonpositiveEpsilon(f64),

    #[error("empty-grid: at least one grid point is required")]
    EmptyGrid,

    #[error("degenerate-grid: {0}")]
    DegenerateGrid(String),

    #[error("non-hermitian-input: deviation {deviation:.3e} exceeds tolerance {tol:.3e}")]
    NonHermitianInput { deviation: f64, tol: f64 },

    #[error("eigensolver-failure: symmetric eigensolver did not converge (dim {dim})")]
    EigensolverFailure { dim: usize },

    #[error("invalid-p: Schatten exponent must satisfy p >= 1, got {0}")]
    InvalidP(f64),

    #[error("theorem-scope: p = {0} is outside 1 < p < inf; enable diagnostics mode to proceed")]
    OutsideTheoremScope(f64),

    #[error("dimension-mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "budget-exceeded: estimated {estimated:.3e} multiply-adds exceeds budget {budget:.3e}"
    )]
    BudgetExceeded { estimated: f64, budget: f64 },

    #[error(
        "smoothness-insufficient: {id} is declared {class} up to order {declared}, \
         but order {requested} is required (use the override entry point to proceed)"
    )]
    SmoothnessInsufficient {
        id: String,
        class: String,
        declared: usize,
        requested: usize,
    },

    #[error("step-too-small: step {h:.3e} is below the cancellation floor {floor:.3e}")]
    StepTooSmall { h: f64, floor: f64 },

    #[error("index-out-of-range: index {index} not in 0..{len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unknown-function: no builtin named {0:?}")]
    UnknownFunction(String),

    #[error("schema-violation at {locator}: {message}")]
    SchemaViolation { locator: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
