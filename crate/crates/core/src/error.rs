use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (relative defect {defect:.3e})")]
    NonHermitianInput { defect: f64 },

    #[error("channel is not diagonalizable (eigenvector condition estimate {condition:.3e})")]
    NonDiagonalizable { condition: f64 },

    #[error("weak-measurement condition violated: tau1 * |A| = {strength:.4}")]
    WeakMeasurementViolation { strength: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("Fock truncation insufficient: at least {required} levels are needed")]
    TruncationInsufficient { required: usize },

    #[error("Hilbert-space dimension {dim} exceeds the supported limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("inconsistent specification: {0}")]
    InconsistentSpec(String),

    #[error("CPMG needs an even pulse count, got {0}")]
    OddPulseCount(usize),

    #[error("correlation series is empty")]
    EmptySeries,

    #[error("spectra are sampled on different frequency grids")]
    GridMismatch,

    #[error("linear algebra backend failed: {0}")]
    Backend(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Warning-level errors may be downgraded by callers that accept them.
    pub fn is_warning(&self) -> bool {
        matches!(self, Error::WeakMeasurementViolation { .. })
    }
}
