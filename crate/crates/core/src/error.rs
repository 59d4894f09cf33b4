use thiserror::Error;

/// Failure modes across the library.
///
/// Variants split into two families: validation problems with the inputs
/// (bad dimensions, cocycles that are not maximally non-commutative, ...)
/// and numerical failures (non-primitive channels, ambiguous tolerances,
/// internal disagreement between the grid and oracle verdicts).
#[derive(Debug, Error)]
pub enum Error {
    #[error("superoperator is not diagonalizable: dominant eigenvalue {eigenvalue} looks defective (Jordan block suspected)")]
    NonDiagonalizable { eigenvalue: String },

    #[error("tolerance ambiguity: candidate direction has residual norm {norm:e} within (tol, 10*tol] for tol = {tol:e}; tighten the tolerance")]
    ToleranceAmbiguity { norm: f64, tol: f64 },

    #[error("cocycle is not maximally non-commutative")]
    NotMnc,

    #[error("group {orders:?} cannot be written as G' x G' in paired form")]
    NotSquareForm { orders: Vec<u32> },

    #[error("cocycle is not supported: {0}")]
    UnsupportedCocycle(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("logical operators do not generate the Heisenberg-Weyl group (all commutation exponents divisible by {p})")]
    NotGenerating { p: u32 },

    #[error("{requested} does not divide any block of the group")]
    NotADivisor { requested: u32 },

    #[error("junk matrices are not normalizable: sum of B^dag B is singular")]
    NotNormalizable,

    #[error("no primitive junk channel found after {attempts} attempts (seed {seed})")]
    RetriesExhausted { attempts: usize, seed: u64 },

    #[error("channel is not primitive: {0}")]
    NotPrimitive(String),

    #[error("dimension too large: {0}")]
    DimensionTooLarge(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("dead direction: |nu_{i}{j}| = {modulus:e} is below the calibration floor")]
    DeadDirection { i: usize, j: usize, modulus: f64 },

    #[error("internal inconsistency: grid verdict and Lie-closure oracle disagree ({0})")]
    InconsistentVerdict(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonDiagonalizable { .. }
                | Error::ToleranceAmbiguity { .. }
                | Error::NotPrimitive(_)
                | Error::InconsistentVerdict(_)
                | Error::RetriesExhausted { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
