use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("patch volumes overlap at ({0}, {1})")]
    OverlappingVolumes(i32, i32),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("search budget exceeded after {0} nodes")]
    SearchBudgetExceeded(u64),
    #[error("state budget exceeded: {0} states")]
    StateBudgetExceeded(usize),
    #[error("alphabet budget exceeded: {0} symbols")]
    AlphabetBudgetExceeded(usize),
    #[error("energies are not commensurable: {0}")]
    NotCommensurable(String),
    #[error("no interior patch is compatible with the boundary")]
    EmptySupport,
    #[error("quadrature did not reach tolerance (estimate {0})")]
    QuadratureFailure(f64),
    #[error("unclassifiable 3x3 neighborhood at ({x}, {y}): {pattern}")]
    UnclassifiableNeighborhood { x: i32, y: i32, pattern: String },
    #[error("inconsistent arrow path at ({0}, {1})")]
    InconsistentPath(i32, i32),
    #[error("path is not closed")]
    LoopNotClosed,
    #[error("loop interior is clipped by the patch volume")]
    InteriorClipped,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
