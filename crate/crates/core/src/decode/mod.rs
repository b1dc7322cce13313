//! Decoding: greedy and prefix beam search over CTC posteriors, n-gram
//! rescoring, LM-weight tuning, cascade routing and error rates.

mod beam;
mod rescore;
mod route;
mod tune;
mod wer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ctc::{CtcError, LabelSequence};
use crate::lm::LmError;

pub use beam::{greedy_decode, prefix_beam_search, PrefixBeamSearch, IN_BEAM_OOV_LOG10};
pub use rescore::{lm_log_prob, rescore, rescore_ranked, rescore_with_bonus};
pub use route::{route, CascadeRoute, RouteDecision};
pub use tune::{tune_alpha, tune_alpha_on_lists, TuneResult};
pub use wer::{cer, edit_distance, wer, ErrorTally};

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("no hypotheses to rescore")]
    EmptyHypotheses,
    #[error("dev set is empty")]
    EmptyDevSet,
    #[error("invalid decode config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Ctc(#[from] CtcError),
}

/// Where the language model enters the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LmFusion {
    /// Collect the acoustic top-N, then rescore the list.
    #[default]
    PostHoc,
    /// Add the weighted LM score inside the beam at every word boundary.
    InBeam,
}

/// Which side of the threshold sends an utterance to the second stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RouteDirection {
    #[default]
    Above,
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    pub beam_width: usize,
    pub alpha: f64,
    pub top_n: usize,
    /// Per-character geometric-mean probability threshold.
    pub route_threshold: f64,
    pub route_direction: RouteDirection,
    pub fusion: LmFusion,
    /// Per-word bonus added with the LM term; zero keeps the plain
    /// two-term score.
    pub word_bonus: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            beam_width: 300,
            alpha: 2.0,
            top_n: 10,
            route_threshold: 0.5,
            route_direction: RouteDirection::Above,
            fusion: LmFusion::PostHoc,
            word_bonus: 0.0,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.beam_width == 0 {
            return Err(DecodeError::InvalidConfig("beam_width must be >= 1".into()));
        }
        if self.top_n == 0 || self.top_n > self.beam_width {
            return Err(DecodeError::InvalidConfig(format!(
                "top_n {} must lie in 1..={}",
                self.top_n, self.beam_width
            )));
        }
        if !(0.0..=5.0).contains(&self.alpha) {
            return Err(DecodeError::InvalidConfig(format!(
                "alpha {} outside [0, 5]",
                self.alpha
            )));
        }
        if !self.route_threshold.is_finite() {
            return Err(DecodeError::InvalidConfig("route_threshold must be finite".into()));
        }
        if !self.word_bonus.is_finite() {
            return Err(DecodeError::InvalidConfig("word_bonus must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamHypothesis {
    #[serde(skip)]
    pub labels: LabelSequence,
    pub transcript: String,
    /// Natural-log acoustic probability of the prefix.
    pub log_p_am: f64,
    /// Natural-log LM probability, once an LM has been applied.
    pub log_p_lm: Option<f64>,
}

impl BeamHypothesis {
    pub fn words(&self) -> Vec<&str> {
        self.transcript.split_whitespace().collect()
    }
}
