use std::sync::atomic::{AtomicUsize, Ordering};

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{CascadeArtifacts, CascadeError};
use crate::ctc::{Alphabet, LabelSequence};
use crate::decode::{
    prefix_beam_search, rescore_ranked, route, BeamHypothesis, CascadeRoute, DecodeConfig, ErrorTally, LmFusion,
    RouteDecision,
};
use crate::lm::ArpaModel;
use crate::nnet::{Checkpoint, Dataset, NnetError};

fn empty_hypothesis() -> BeamHypothesis {
    BeamHypothesis {
        labels: LabelSequence::default(),
        transcript: String::new(),
        log_p_am: 0.0,
        log_p_lm: None,
    }
}

/// Beam decode of one utterance. An input too short for the network yields
/// a single empty hypothesis.
pub fn decode_utterance(
    ckpt: &Checkpoint,
    alphabet: &Alphabet,
    features: ArrayView2<'_, f64>,
    cfg: &DecodeConfig,
    lm: Option<&ArpaModel>,
) -> Result<Vec<BeamHypothesis>, CascadeError> {
    let posts = match ckpt.posteriors(features) {
        Ok(p) => p,
        Err(NnetError::InputTooShort { .. }) => return Ok(vec![empty_hypothesis()]),
        Err(e) => return Err(e.into()),
    };
    let fused = if cfg.fusion == LmFusion::InBeam { lm } else { None };
    Ok(prefix_beam_search(&posts, alphabet, cfg, fused)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inference {
    pub transcript: String,
    /// Routing computed from the stage-1 top hypothesis.
    pub route: CascadeRoute,
    /// Whether the second stage produced the surviving hypothesis list.
    pub used_stage2: bool,
    pub stage1_transcript: String,
    /// Surviving hypotheses, best first, with LM scores when an LM applied.
    pub hypotheses: Vec<BeamHypothesis>,
}

/// Stage-1 decode, optional re-decode by stage 2 for routed utterances,
/// then LM rescoring of whichever list survives.
pub struct TwoStageDecoder<'a> {
    stage1: &'a Checkpoint,
    stage2: Option<&'a Checkpoint>,
    alphabet: Alphabet,
    cfg: DecodeConfig,
    stage2_evaluations: AtomicUsize,
}

impl<'a> TwoStageDecoder<'a> {
    pub fn new(artifacts: &'a CascadeArtifacts, cfg: DecodeConfig) -> Result<Self, CascadeError> {
        Self::build(&artifacts.stage1, Some(&artifacts.stage2), cfg)
    }

    /// Decoder that never leaves the first stage.
    pub fn stage1_only(stage1: &'a Checkpoint, cfg: DecodeConfig) -> Result<Self, CascadeError> {
        Self::build(stage1, None, cfg)
    }

    fn build(stage1: &'a Checkpoint, stage2: Option<&'a Checkpoint>, cfg: DecodeConfig) -> Result<Self, CascadeError> {
        cfg.validate()?;
        let alphabet = stage1.config.alphabet()?;
        if let Some(s2) = stage2 {
            if s2.config.alphabet != stage1.config.alphabet {
                return Err(CascadeError::InvalidConfig("stages use different alphabets".into()));
            }
        }
        Ok(Self {
            stage1,
            stage2,
            alphabet,
            cfg,
            stage2_evaluations: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &DecodeConfig {
        &self.cfg
    }

    /// Number of utterances the second stage has decoded so far.
    pub fn stage2_evaluations(&self) -> usize {
        self.stage2_evaluations.load(Ordering::Relaxed)
    }

    pub fn infer(&self, features: ArrayView2<'_, f64>, lm: Option<&ArpaModel>) -> Result<Inference, CascadeError> {
        let first = decode_utterance(self.stage1, &self.alphabet, features, &self.cfg, lm)?;
        let best = &first[0];
        let r = route(best, &self.cfg);
        let stage1_transcript = best.transcript.clone();
        let (hyps, used_stage2) = match (r.decision, self.stage2) {
            (RouteDecision::ToCascade, Some(s2)) => {
                self.stage2_evaluations.fetch_add(1, Ordering::Relaxed);
                (decode_utterance(s2, &self.alphabet, features, &self.cfg, lm)?, true)
            }
            _ => (first, false),
        };
        let hypotheses = match (lm, self.cfg.fusion) {
            (Some(lm), LmFusion::PostHoc) => rescore_ranked(&hyps, lm, self.cfg.alpha, self.cfg.word_bonus)?
                .into_iter()
                .map(|(_, h)| h)
                .collect(),
            _ => hyps,
        };
        Ok(Inference {
            transcript: hypotheses[0].transcript.clone(),
            route: r,
            used_stage2,
            stage1_transcript,
            hypotheses,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceResult {
    pub id: String,
    pub reference: String,
    pub transcript: String,
    pub routed_to: RouteDecision,
    pub used_stage2: bool,
    pub normalized_score: Option<f64>,
    pub word_edits: usize,
    pub reference_words: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub utterances: usize,
    pub wer: f64,
    pub cer: f64,
}

#[derive(Debug, Default)]
struct Acc {
    n: usize,
    words: ErrorTally,
    chars: ErrorTally,
}

impl Acc {
    fn add(&mut self, hyp: &str, reference: &str) {
        self.n += 1;
        self.words.add_words(hyp, reference);
        self.chars.add_chars(hyp, reference);
    }

    fn summary(&self) -> ErrorSummary {
        ErrorSummary {
            utterances: self.n,
            wer: self.words.rate(),
            cer: self.chars.rate(),
        }
    }
}

/// Corpus error rates overall and split by route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub all: ErrorSummary,
    pub routed: ErrorSummary,
    pub not_routed: ErrorSummary,
    pub utterances: Vec<UtteranceResult>,
}

pub fn evaluate_corpus(
    decoder: &TwoStageDecoder<'_>,
    data: &Dataset,
    lm: Option<&ArpaModel>,
) -> Result<CorpusReport, CascadeError> {
    let (mut all, mut routed, mut rest) = (Acc::default(), Acc::default(), Acc::default());
    let mut utterances = Vec::with_capacity(data.len());
    for s in data.samples() {
        let inf = decoder.infer(s.features.view(), lm)?;
        all.add(&inf.transcript, &s.text);
        match inf.route.decision {
            RouteDecision::ToCascade => routed.add(&inf.transcript, &s.text),
            RouteDecision::ToLmRescoring => rest.add(&inf.transcript, &s.text),
        }
        let mut t = ErrorTally::default();
        t.add_words(&inf.transcript, &s.text);
        utterances.push(UtteranceResult {
            id: s.id.clone(),
            reference: s.text.clone(),
            transcript: inf.transcript,
            routed_to: inf.route.decision,
            used_stage2: inf.used_stage2,
            normalized_score: inf.route.normalized_score,
            word_edits: t.edits,
            reference_words: t.reference_len,
        });
    }
    Ok(CorpusReport {
        all: all.summary(),
        routed: routed.summary(),
        not_routed: rest.summary(),
        utterances,
    })
}
