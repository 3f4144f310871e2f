use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("size mismatch: expected {expected} qubits, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },

    #[error("operator {0} is not Hermitian")]
    NonHermitian(String),

    #[error("operators {a} and {b} commute")]
    Commuting { a: String, b: String },

    #[error("invalid literal `{0}`")]
    InvalidLiteral(String),

    #[error("fixed and free qubit sets must partition the register")]
    InvalidPartition,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("parameter mismatch: {0}")]
    ParamMismatch(String),

    #[error("matrix is not unitary (defect {defect:.3e})")]
    NonUnitary { defect: f64 },

    #[error("imaginary residue {residue:.3e} in adjoint coefficient")]
    ImaginaryResidue { residue: f64 },

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("noise table has no entry for pattern {0}")]
    MissingPattern(String),

    #[error("transfer matrix does not preserve the identity row")]
    NotTracePreserving,

    #[error("window {start}..{end}: {generators} surviving generators exceed the cap of {cap}")]
    CapExceeded { start: usize, end: usize, generators: usize, cap: usize },

    #[error("{what} requires at most {max} qubits, got {n}")]
    OracleCap { what: &'static str, n: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
