use crate::grid::Cell;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid world parameters: {0}")]
    InvalidParams(String),
    #[error("scene generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },
    #[error("pose {0} is not on a free cell")]
    InvalidPose(Cell),
    #[error("scene file: {0}")]
    Format(String),
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("observation from {cell} lies outside the {rows}x{cols} map")]
    OutOfBounds { cell: Cell, rows: usize, cols: usize },
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("no navigable path from {from} to {to}")]
    Unreachable { from: Cell, to: Cell },
    #[error("cell {0} is not navigable")]
    NotNavigable(Cell),
}

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("feature dimension {got} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite feature at ray {0}")]
    NonFinite(usize),
    #[error("refinement needs at least one annotated view")]
    EmptyTrainSet,
    #[error("model checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Error)]
pub enum RlError {
    #[error("non-finite activation in {0}")]
    NonFinite(&'static str),
    #[error("PPO loss became NaN at epoch {epoch}, minibatch {minibatch}: {detail}")]
    NanLoss {
        epoch: usize,
        minibatch: usize,
        detail: String,
    },
    #[error("policy input shape: {0}")]
    Shape(String),
    #[error("empty rollout batch")]
    EmptyRollouts,
    #[error("policy checkpoint: {0}")]
    Checkpoint(String),
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error("invalid action from agent `{agent}` at step {step}: {detail}")]
    InvalidAction {
        agent: String,
        step: usize,
        detail: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
