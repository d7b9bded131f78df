use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("invalid subsystem shape: {0}")]
    InvalidShape(String),

    #[error("partial trace needs at least one kept subsystem")]
    EmptyKeep,

    #[error("result dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("state is not normalized (trace {trace})")]
    NotNormalized { trace: f64 },

    #[error("cannot normalize the zero vector")]
    ZeroVector,

    #[error("matrix is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("Kraus operators are not trace preserving (residual {residual:e})")]
    NotTracePreserving { residual: f64 },

    #[error("wire {wire} out of range for {num_qubits} qubits")]
    WireOutOfRange { wire: usize, num_qubits: usize },

    #[error("wire {0} used twice in one operation")]
    DuplicateWire(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state is mixed; a pure state is required here")]
    MixedState,

    #[error("{rounds} rounds exceed the full-state cap of {cap}")]
    RoundCap { rounds: usize, cap: usize },

    #[error("qasm line {line}: {msg}")]
    Qasm { line: usize, msg: String },

    #[error("experiment spec: {0}")]
    Spec(String),

    #[error("numerical contract violated: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that indicate a broken numerical invariant rather
    /// than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Contract(_)
                | Error::NonFinite
                | Error::NotHermitian { .. }
                | Error::NotPositive { .. }
                | Error::NotNormalized { .. }
                | Error::NotUnitary { .. }
                | Error::NotTracePreserving { .. }
        )
    }
}
