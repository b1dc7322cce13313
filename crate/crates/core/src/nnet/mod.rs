//! CNN + residual BiLSTM + fully connected acoustic model with hand-written
//! back-propagation, Adam, and a binary checkpoint format.

mod adam;
mod checkpoint;
mod config;
mod conv;
mod lstm;
mod model;
mod params;
mod train;

use thiserror::Error;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{build_model, is_cnn, transfer_cnn_weights, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{CnnLayerConfig, ModelConfig};
pub use model::{backward, forward, posteriors, ForwardPass};
pub use params::{analytic_param_count, init_params, param_shapes, Param, ParamStore};
pub use train::{evaluate_loss, sample_loss, train, Dataset, EpochMetrics, LrPhase, Sample, TrainOutcome, TrainSchedule};

use crate::ctc::CtcError;
use crate::frontend::FrontendError;

#[derive(Debug, Error)]
pub enum NnetError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("parameter shape error: {0}")]
    Shape(String),
    #[error("input has {frames} frames; the convolutions need at least {required}")]
    InputTooShort { frames: usize, required: usize },
    #[error("input has {found} features per frame, model expects {expected}")]
    InputWidth { expected: usize, found: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("training data: {0}")]
    Data(String),
    #[error(transparent)]
    Ctc(#[from] CtcError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
