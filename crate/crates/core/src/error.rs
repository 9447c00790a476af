//! Error type shared across the library.

use thiserror::Error;

/// Alias for results produced by this crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Dimension lists or matrix shapes do not line up.
    #[error("dimension error: {0}")]
    BadDimension(String),

    /// A matrix expected to be Hermitian deviates beyond tolerance.
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    /// A matrix expected to be positive semidefinite has a negative eigenvalue.
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPositive { min_eig: f64 },

    /// A trace-one constraint is violated.
    #[error("trace is {trace:.12} instead of 1")]
    BadTrace { trace: f64 },

    /// A state vector is not normalised.
    #[error("vector norm is {norm:.12} instead of 1")]
    BadNorm { norm: f64 },

    /// An operator violates the POVM-effect bounds 0 <= E <= I.
    #[error("operator is not a valid effect: {0}")]
    NotAnEffect(String),

    /// Ensemble weights are not a probability distribution.
    #[error("ensemble weights invalid: {0}")]
    BadWeights(String),

    /// Input state has a positive partial transpose, so no witness is produced.
    #[error("partial transpose has no negative eigenvalue (min eigenvalue {min_eig:.3e})")]
    NotNpt { min_eig: f64 },

    /// Input-state basis does not span the operator space on one side.
    #[error("input basis is ill-conditioned (gram condition {condition:.3e})")]
    IllConditioned { condition: f64 },

    /// Reconstruction from a coefficient grid misses the target operator.
    #[error("decomposition residual {residual:.3e} exceeds tolerance")]
    ResidualTooLarge { residual: f64 },

    /// A denominator in a nonlinear expression is too close to zero.
    #[error("degenerate denominator {value:.3e} in {context}")]
    DegenerateDenominator { context: &'static str, value: f64 },

    /// A probability entry or row sum is outside its allowed range.
    #[error("invalid probability data: {0}")]
    BadProbability(String),

    /// An operation received a table whose provenance it does not accept.
    #[error("wrong table provenance: expected {expected}, got {got}")]
    WrongProvenance {
        expected: &'static str,
        got: &'static str,
    },

    /// Detection efficiencies must lie in (0, 1].
    #[error("efficiency out of range: {0}")]
    BadEfficiency(String),

    /// Event removal in the detection model asks for more events than exist.
    #[error("infeasible event removal: {0}")]
    InfeasibleRemoval(String),

    /// Kraus operators fail the trace-preservation condition.
    #[error("channel is not trace preserving (max deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    /// Threshold search ran on a configuration that is never certified.
    #[error("not certified even at unit efficiency, no threshold exists")]
    NeverCertified,

    /// The iterative eigensolver failed to converge.
    #[error("eigendecomposition did not converge for a {dim}x{dim} matrix")]
    EigenFailed { dim: usize },

    /// A coefficient grid does not match the table it is paired with.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Textual input (state file, channel spec, config) failed to parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A name lookup (state family, channel, scenario) found nothing.
    #[error("unknown name `{0}`")]
    UnknownName(String),

    /// A numeric parameter is outside its documented range.
    #[error("parameter out of range: {0}")]
    BadParameter(String),
}

impl Error {
    /// Shorthand for dimension complaints built from format strings.
    pub fn dim(msg: impl Into<String>) -> Self {
        Error::BadDimension(msg.into())
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
