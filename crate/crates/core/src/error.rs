use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid signal: {0}")]
    Signal(String),
    #[error("label mapping error: {0}")]
    Mapping(String),
    #[error("stratification error: {0}")]
    Stratification(String),
    #[error("decomposition error: signal of length {len} supports at most level {max_level}, requested {level}")]
    Decomposition {
        len: usize,
        level: usize,
        max_level: usize,
    },
    #[error("reconstruction error: {0}")]
    Reconstruction(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("statistics error: {0}")]
    Statistics(String),
    #[error("label error: {0}")]
    Label(String),
    #[error("graph error: {0}")]
    Graph(String),
    #[error("non-finite value produced by {0}")]
    NonFinite(String),
    #[error("optimizer error: {0}")]
    Optimizer(String),
    #[error("architecture error: {0}")]
    Architecture(String),
    #[error("training setup error: {0}")]
    TrainingSetup(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss is not finite")]
    Divergence { epoch: usize, batch: usize },
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("ensemble error: {0}")]
    Ensemble(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}
