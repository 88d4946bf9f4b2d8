use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate 6-D rotation: embedded vectors are parallel or near zero")]
    DegenerateRotation,
    #[error("matrix is not a proper rotation (orthonormality error {0:.3e})")]
    NotARotation(f64),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate triangle")]
    DegenerateTriangle,
    #[error("invalid relation graph: {0}")]
    InvalidGraph(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("unknown relation label `{0}`")]
    UnknownLabel(String),
    #[error("non-finite guidance gradient for object {object}")]
    NonFiniteGradient { object: usize },
    #[error("non-finite sampler state at step {t}: {detail}")]
    NonFiniteState { t: usize, detail: String },
    #[error("training diverged at step {step} (loss {loss})")]
    DivergedTraining { step: usize, loss: f64 },
    #[error("placement failed after {attempts} rejections")]
    PlacementFailure { attempts: usize },
    #[error("graph size mismatch: {0}")]
    GraphSizeMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
