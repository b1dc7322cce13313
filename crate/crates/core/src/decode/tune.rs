use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{lm_log_prob, prefix_beam_search, BeamHypothesis, DecodeConfig, DecodeError, ErrorTally, LmFusion};
use crate::ctc::{Alphabet, PosteriorMatrix};
use crate::lm::ArpaModel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub alpha: f64,
    pub wer: f64,
    /// Every sampled `(alpha, wer)` in sampling order.
    pub trials: Vec<(f64, f64)>,
}

fn sample_alphas(trials: usize, range: (f64, f64), seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(|_| rng.gen_range(range.0..=range.1)).collect()
}

fn pick_best(trials: Vec<(f64, f64)>) -> TuneResult {
    // lowest WER, then smallest alpha
    let (alpha, wer) = trials
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .expect("at least one trial");
    TuneResult { alpha, wer, trials }
}

/// Per utterance: `(log_p_am, log_p_lm, hypothesis)` triples and the reference.
type ScoredList<'a> = (Vec<(f64, f64, &'a BeamHypothesis)>, &'a str);

fn corpus_wer(
    lists: &[ScoredList<'_>],
    alpha: f64,
    word_bonus: f64,
) -> f64 {
    let mut tally = ErrorTally::default();
    for (hyps, reference) in lists {
        let best = hyps
            .iter()
            .map(|&(am, lm, h)| {
                let words = h.transcript.split_whitespace().count() as f64;
                (am + alpha * lm + word_bonus * words, h)
            })
            .min_by(|a, b| {
                b.0.total_cmp(&a.0)
                    .then(a.1.transcript.len().cmp(&b.1.transcript.len()))
                    .then_with(|| a.1.transcript.cmp(&b.1.transcript))
            })
            .expect("non-empty list")
            .1;
        tally.add_words(&best.transcript, reference);
    }
    tally.rate()
}

/// Random search for the LM weight over pre-computed hypothesis lists.
/// Samples `trials` weights uniformly from `range` with `seed` and keeps the
/// one with the lowest corpus WER (smallest weight among ties).
pub fn tune_alpha_on_lists(
    lists: &[(Vec<BeamHypothesis>, String)],
    lm: &ArpaModel,
    trials: usize,
    range: (f64, f64),
    seed: u64,
    word_bonus: f64,
) -> Result<TuneResult, DecodeError> {
    if lists.is_empty() {
        return Err(DecodeError::EmptyDevSet);
    }
    if trials == 0 || !(range.0 <= range.1) {
        return Err(DecodeError::InvalidConfig(format!(
            "need trials >= 1 and a non-empty range, got {trials} over {range:?}"
        )));
    }
    let mut scored = Vec::with_capacity(lists.len());
    for (hyps, reference) in lists {
        if hyps.is_empty() {
            return Err(DecodeError::EmptyHypotheses);
        }
        let hs = hyps
            .iter()
            .map(|h| Ok((h.log_p_am, lm_log_prob(lm, &h.transcript)?, h)))
            .collect::<Result<Vec<_>, DecodeError>>()?;
        scored.push((hs, reference.as_str()));
    }
    let trials = sample_alphas(trials, range, seed)
        .into_iter()
        .map(|a| (a, corpus_wer(&scored, a, word_bonus)))
        .collect();
    Ok(pick_best(trials))
}

/// Decodes every dev utterance and tunes the LM weight.
pub fn tune_alpha(
    dev: &[(PosteriorMatrix, String)],
    alphabet: &Alphabet,
    lm: &ArpaModel,
    cfg: &DecodeConfig,
    trials: usize,
    range: (f64, f64),
    seed: u64,
) -> Result<TuneResult, DecodeError> {
    if dev.is_empty() {
        return Err(DecodeError::EmptyDevSet);
    }
    match cfg.fusion {
        LmFusion::PostHoc => {
            let lists = dev
                .iter()
                .map(|(posts, r)| Ok((prefix_beam_search(posts, alphabet, cfg, None)?, r.clone())))
                .collect::<Result<Vec<_>, DecodeError>>()?;
            tune_alpha_on_lists(&lists, lm, trials, range, seed, cfg.word_bonus)
        }
        LmFusion::InBeam => {
            // the beam itself depends on alpha: decode once per sample
            if trials == 0 || !(range.0 <= range.1) {
                return Err(DecodeError::InvalidConfig("bad trials or range".into()));
            }
            let mut results = Vec::with_capacity(trials);
            for a in sample_alphas(trials, range, seed) {
                let c = DecodeConfig { alpha: a, ..cfg.clone() };
                let mut tally = ErrorTally::default();
                for (posts, r) in dev {
                    let hyps = prefix_beam_search(posts, alphabet, &c, Some(lm))?;
                    tally.add_words(&hyps[0].transcript, r);
                }
                results.push((a, tally.rate()));
            }
            Ok(pick_best(results))
        }
    }
}
