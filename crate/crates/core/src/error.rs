use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} qubits vs {1} qubits")]
    DimensionMismatch(usize, usize),

    #[error("invalid Pauli string {0:?}")]
    InvalidPauli(String),

    #[error("incomplete Pauli index set: expected {expected} entries, found {found}")]
    IncompleteIndexSet { expected: usize, found: usize },

    #[error("support of {width} qubits exceeds the cap of {cap}")]
    SupportTooLarge { width: usize, cap: usize },

    #[error("term acting on qubits {term:?} is not contained in the support {support:?}")]
    SupportTooSmall { term: Vec<usize>, support: Vec<usize> },

    #[error("Pauli {pauli} is not on the channel support")]
    OffSupport { pauli: String },

    #[error("locality violation: {0}")]
    Locality(String),

    #[error("invalid noise model: {0}")]
    InvalidModel(String),

    #[error("evolution time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("expected a {expected} superoperator")]
    WrongKind { expected: &'static str },

    #[error("fold count {x} is not congruent to 1 modulo the cyclicity {cyclicity}")]
    FoldCongruence { x: usize, cyclicity: usize },

    #[error("hard cycle is not a Clifford unitary")]
    NotClifford,

    #[error("no power of the hard cycle up to {0} is proportional to the identity")]
    CyclicityNotFound(usize),

    #[error("outcome histogram is empty")]
    EmptyCounts,

    #[error("Pauli {0} is not measured by the circuit's SPAM basis")]
    NotInBasis(String),

    #[error("numerical integrity violation: {0}")]
    NumericalIntegrity(String),

    #[error("insufficient grid: {0}")]
    InsufficientGrid(String),

    #[error("fit did not converge after {iterations} iterations (best cost {best_cost:e})")]
    NonConvergence {
        iterations: usize,
        best_cost: f64,
        best_params: Vec<f64>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
