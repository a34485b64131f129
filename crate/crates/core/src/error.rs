//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong inside the library.
///
/// Variants that end in `Exceeded`/`Overflow` are structural bug signals:
/// they fire only if a bound that the algorithms are designed to respect is
/// violated, and are surfaced rather than silently clamped.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cut must be a proper non-empty subset with positive volume on both sides")]
    DegenerateCut,
    #[error("vertex {0} out of range")]
    UnknownVertex(usize),
    #[error("edge {{{0}, {1}}} is not present")]
    MissingEdge(usize, usize),
    #[error("graph has {n} vertices, exhaustive routines support at most {max}")]
    TooLarge { n: usize, max: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("walk did not converge within {0} steps")]
    NotConverged(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{bits}-bit payload on edge ({from}, {to}) exceeds the {budget}-bit budget")]
    BandwidthExceeded { from: usize, to: usize, bits: u64, budget: u64 },
    #[error("vertex {from} addressed non-neighbor {to}")]
    NotANeighbor { from: usize, to: usize },
    #[error("phi = {0} is outside the admissible range")]
    BadPhi(f64),
    #[error("epsilon = {0} is outside (0, 1)")]
    BadEpsilon(f64),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
    #[error("phase-1 recursion depth {depth} exceeds the bound {bound}")]
    DepthExceeded { depth: usize, bound: usize },
    #[error("phase-2 level would exceed k = {0}")]
    LevelOverflow(usize),
    #[error("phase-2 level {level} ran more than {bound} iterations")]
    IterationOverflow { level: usize, bound: u64 },
    #[error("removed {removed} edges but the budget is {budget}")]
    RemovalBudget { removed: usize, budget: f64 },
    #[error("malformed output: {0}")]
    Malformed(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
