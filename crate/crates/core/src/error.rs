use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Lattice or cut parameters outside their allowed range.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("step index {index} out of range for a schedule of {steps} steps")]
    StepIndex { index: usize, steps: usize },

    #[error("schedule length {steps} is not divisible into {subsets} stages")]
    Divisibility { steps: usize, subsets: usize },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("enumeration of {spins} spins exceeds the oracle budget of {max} spins")]
    BudgetExceeded { spins: usize, max: usize },

    #[error("singular normal equations: {0}")]
    Singular(String),

    #[error("model {model} takes {expected} parameters, got {got}")]
    Arity { model: String, expected: usize, got: usize },

    #[error("no convergence after {iterations} iterations: {what}")]
    NonConvergence { what: String, iterations: usize },

    #[error("cut sequence has a gap: expected l = {expected}, found l = {found}")]
    Gap { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    Invalid(String),
}
