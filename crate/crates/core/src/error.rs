use thiserror::Error;

#[derive(Debug, Error)]
pub enum GlError {
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("mesh aspect error: {0}")]
    MeshAspect(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("incompatible Neumann data: {0}")]
    Compatibility(String),
    #[error("eigensolver failed: {0}")]
    EigSolve(String),
    #[error("blow-up at step {step}: {what}")]
    Blowup { step: usize, what: String },
    #[error("region is empty: {0}")]
    EmptyRegion(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("order parameter is identically zero")]
    ZeroOrderParameter,
    #[error("trajectory horizon insufficient: {0}")]
    InsufficientHorizon(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GlError>;
