use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("singular jacobian: {0}")]
    SingularJacobian(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    /// The position-domain FIM is not invertible (or too badly conditioned to trust).
    #[error("singular Fisher information matrix (condition number {condition:e})")]
    SingularFim { condition: f64 },

    #[error("every particle evaluated to a singular Fisher information matrix")]
    AllSingular,
}
