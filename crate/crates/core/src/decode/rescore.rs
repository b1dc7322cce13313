use std::cmp::Ordering;

use super::{BeamHypothesis, DecodeError};
use super::beam::IN_BEAM_OOV_LOG10;
use crate::lm::{log10_to_ln, ArpaModel, LmError, BOS, EOS};

/// Natural-log LM probability of a transcript, `</s>` included. An empty
/// transcript scores the bare `<s> </s>` transition. Words the model cannot
/// score cost [`IN_BEAM_OOV_LOG10`] each and drop out of the history, the
/// same rule the in-beam search applies.
pub fn lm_log_prob(lm: &ArpaModel, transcript: &str) -> Result<f64, DecodeError> {
    let words: Vec<&str> = transcript.split_whitespace().collect();
    match lm.score_tokens(&words) {
        Ok(s) => Ok(log10_to_ln(s.log10_total)),
        Err(LmError::OovWord(_)) => {
            let mut history = vec![BOS];
            let mut total = 0.0;
            for w in words.iter().copied().chain(std::iter::once(EOS)) {
                match lm.score_word(&history, w) {
                    Ok(s) => {
                        total += s;
                        history.push(w);
                    }
                    Err(LmError::OovWord(_)) => total += IN_BEAM_OOV_LOG10,
                    Err(e) => return Err(e.into()),
                }
            }
            Ok(log10_to_ln(total))
        }
        Err(e) => Err(e.into()),
    }
}

fn total_order(a: (f64, &BeamHypothesis), b: (f64, &BeamHypothesis)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then(a.1.transcript.len().cmp(&b.1.transcript.len()))
        .then_with(|| a.1.transcript.cmp(&b.1.transcript))
}

/// Every hypothesis with its LM score filled in, ordered best first by
/// `log_p_am + alpha * log_p_lm + word_bonus * words`.
pub fn rescore_ranked(
    hyps: &[BeamHypothesis],
    lm: &ArpaModel,
    alpha: f64,
    word_bonus: f64,
) -> Result<Vec<(f64, BeamHypothesis)>, DecodeError> {
    if hyps.is_empty() {
        return Err(DecodeError::EmptyHypotheses);
    }
    let mut scored = hyps
        .iter()
        .map(|h| {
            let lp = lm_log_prob(lm, &h.transcript)?;
            let mut h = h.clone();
            h.log_p_lm = Some(lp);
            let words = h.transcript.split_whitespace().count() as f64;
            Ok((h.log_p_am + alpha * lp + word_bonus * words, h))
        })
        .collect::<Result<Vec<_>, DecodeError>>()?;
    scored.sort_by(|a, b| total_order((a.0, &a.1), (b.0, &b.1)));
    Ok(scored)
}

/// Picks the hypothesis maximizing `log_p_am + alpha * log_p_lm`.
///
/// Both terms are log-probabilities, so the best transcript is the one with
/// the largest combined score. Ties go to the shorter, then lexicographically
/// smaller transcript.
pub fn rescore(
    hyps: &[BeamHypothesis],
    lm: &ArpaModel,
    alpha: f64,
) -> Result<BeamHypothesis, DecodeError> {
    rescore_with_bonus(hyps, lm, alpha, 0.0)
}

pub fn rescore_with_bonus(
    hyps: &[BeamHypothesis],
    lm: &ArpaModel,
    alpha: f64,
    word_bonus: f64,
) -> Result<BeamHypothesis, DecodeError> {
    Ok(rescore_ranked(hyps, lm, alpha, word_bonus)?
        .into_iter()
        .next()
        .expect("non-empty")
        .1)
}
