use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map onto the CLI exit-code contract: malformed or
/// out-of-contract inputs exit with 2, exceeded enumeration caps with 4.
/// Property violations (an unsound translation, a non-commuting diagram)
/// are *not* errors; they are reported in the corresponding result type.
#[derive(Debug, Error)]
pub enum EngineError {
    /// An identifier or assignment that does not exist in its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A call that violates an operation's contract (wrong shape, overlap,
    /// missing map entries, non-binary variable where one is required).
    #[error("contract error: {0}")]
    Contract(String),

    /// A precondition stated by the underlying definition is violated.
    #[error("precondition error: {0}")]
    Precondition(String),

    /// Structurally invalid data: dimension mismatches, cyclic diagrams,
    /// dangling wires, rows that do not normalize.
    #[error("structural error: {0}")]
    Structural(String),

    /// An enumeration cap was exceeded.
    #[error("resource error: {0}")]
    Resource(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EngineError>;

impl EngineError {
    /// Exit code for the CLI: 2 for malformed input, 4 for resource caps.
    pub fn exit_code(&self) -> i32 {
        match self {
            EngineError::Resource(_) => 4,
            _ => 2,
        }
    }
}
