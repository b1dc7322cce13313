use serde::{Deserialize, Serialize};

use super::CascadeError;
use crate::decode::{route, BeamHypothesis, DecodeConfig, RouteDecision, RouteDirection, ErrorTally};

/// How the training utterances for the second stage are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// The routing predicate on the stage-1 acoustic score.
    #[default]
    Score,
    /// Utterances whose stage-1 transcript has any word error.
    Wrong,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub id: String,
    pub normalized_score: Option<f64>,
    pub routed_to: RouteDecision,
}

/// Routing decision for every decode, in input order.
pub fn selection_log(decodes: &[(String, BeamHypothesis)], cfg: &DecodeConfig) -> Vec<SelectionRecord> {
    decodes
        .iter()
        .map(|(id, h)| {
            let r = route(h, cfg);
            SelectionRecord {
                id: id.clone(),
                normalized_score: r.normalized_score,
                routed_to: r.decision,
            }
        })
        .collect()
}

/// Ids routed to the second stage. Training-side selection uses acoustic
/// scores only, so with `use_lm == false` decodes that carry an LM score are
/// rejected.
pub fn select_hard_samples(
    decodes: &[(String, BeamHypothesis)],
    cfg: &DecodeConfig,
    use_lm: bool,
) -> Result<Vec<String>, CascadeError> {
    if !use_lm {
        if let Some((id, _)) = decodes.iter().find(|(_, h)| h.log_p_lm.is_some()) {
            return Err(CascadeError::LmScoredDecode(id.clone()));
        }
    }
    Ok(selection_log(decodes, cfg)
        .into_iter()
        .filter(|r| r.routed_to == RouteDecision::ToCascade)
        .map(|r| r.id)
        .collect())
}

/// Ids whose top transcript differs from the reference at the word level.
pub fn select_wrong_samples(decodes: &[(String, BeamHypothesis)], references: &[String]) -> Vec<String> {
    decodes
        .iter()
        .zip(references)
        .filter(|((_, h), r)| {
            let mut t = ErrorTally::default();
            t.add_words(&h.transcript, r);
            t.edits > 0
        })
        .map(|((id, _), _)| id.clone())
        .collect()
}

/// A threshold under which about `fraction` of the non-empty decodes route
/// to the second stage: the per-character probability of the utterance
/// ranked just past the wanted count, so exactly those ranked before it
/// pass a strict comparison (fewer on ties).
pub fn threshold_for_fraction(decodes: &[(String, BeamHypothesis)], fraction: f64, direction: RouteDirection) -> f64 {
    let mut probs: Vec<f64> = decodes
        .iter()
        .filter_map(|(_, h)| {
            let n = h.transcript.chars().count();
            (n > 0).then(|| (h.log_p_am / n as f64).exp())
        })
        .collect();
    let k = (fraction.clamp(0.0, 1.0) * decodes.len() as f64).round() as usize;
    match direction {
        RouteDirection::Above => {
            probs.sort_by(|a, b| b.total_cmp(a));
            if k == 0 {
                1.0
            } else {
                probs.get(k).copied().unwrap_or(0.0)
            }
        }
        RouteDirection::Below => {
            probs.sort_by(f64::total_cmp);
            if k == 0 {
                0.0
            } else {
                probs.get(k).copied().unwrap_or(1.0 + f64::EPSILON)
            }
        }
    }
}
