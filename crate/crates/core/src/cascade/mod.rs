//! Two-stage cascade: stage-1 decode, hard-sample routing, stage-2 training
//! on the routed subset, and merged inference.

mod infer;
mod pipeline;
mod select;
mod stats;

use thiserror::Error;

pub use infer::{
    decode_utterance, evaluate_corpus, CorpusReport, ErrorSummary, Inference, TwoStageDecoder, UtteranceResult,
};
pub use pipeline::{
    run_cascade, run_cascade_from_stage1, stage1_decodes, BatchConfig, CascadeArtifacts, CascadeConfig, CascadeMeta,
    META_FILE, STAGE1_FILE, STAGE2_FILE,
};
pub use select::{
    select_hard_samples, select_wrong_samples, selection_log, threshold_for_fraction, SelectionPolicy,
    SelectionRecord,
};
pub use stats::{compare_stats, compute_sample_stats, relative_difference, SampleStats, StatsComparison};

use crate::ctc::CtcError;
use crate::decode::DecodeError;
use crate::nnet::{Checkpoint, NnetError};
use crate::sched::SchedError;

#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("decode {0} carries an LM score; training-side selection is acoustic only")]
    LmScoredDecode(String),
    #[error("no utterance was selected for the second stage")]
    Degenerate {
        stage1: Box<Checkpoint>,
        selection_log: Vec<SelectionRecord>,
    },
    #[error("invalid cascade setup: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Nnet(#[from] NnetError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Sched(#[from] SchedError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<CtcError> for CascadeError {
    fn from(e: CtcError) -> Self {
        Self::Nnet(NnetError::Ctc(e))
    }
}
