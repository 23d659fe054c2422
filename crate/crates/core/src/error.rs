use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: out-of-range vertex, self-loop, duplicate edge, bad file.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An operation was called outside its documented domain.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The requested object cannot exist (odd degree sum, degree bound too small, ...).
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An internal invariant failed to hold. Always a bug.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    /// Exhaustive mode refused because the instance is above the enumeration cap.
    #[error("refused: {0}")]
    Refused(String),

    /// An iterative eigensolver ran out of iterations.
    #[error("eigensolver did not converge after {iterations} iterations (best estimate {best_estimate}, residual {residual})")]
    Convergence {
        best_estimate: f64,
        residual: f64,
        iterations: usize,
    },

    /// The degree splitter exhausted its resampling budget.
    #[error("degree split failed after {rounds} rounds: vertex {vertex} has {count} neighbors in class {class}, needs {needed}")]
    SplitExhausted {
        rounds: usize,
        vertex: usize,
        class: usize,
        count: usize,
        needed: usize,
        /// Final coloring, one class index per vertex.
        coloring: Vec<usize>,
    },

    /// The tree-embedding search ended without finding an embedding.
    #[error("embedding search failed: deepest partial embedding covered {deepest} of {guest_size} guest vertices{}", if *.exhaustive { " (search space exhausted: no embedding exists)" } else { "" })]
    SearchFailed {
        deepest: usize,
        guest_size: usize,
        backtracks: u64,
        /// True when an unbounded search ran to completion, which proves nonexistence.
        exhaustive: bool,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
