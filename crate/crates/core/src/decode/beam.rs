use std::cmp::Ordering;
use std::collections::HashMap;

use ndarray::ArrayView1;

use super::{BeamHypothesis, DecodeConfig, DecodeError, LmFusion};
use crate::ctc::{collapse, log_add, Alphabet, LabelSequence, PosteriorMatrix};
use crate::lm::{log10_to_ln, ArpaModel};

const NEG_INF: f64 = f64::NEG_INFINITY;

/// log10 score charged inside the beam for a word the LM cannot score.
pub const IN_BEAM_OOV_LOG10: f64 = -10.0;

fn in_beam_score(lm: &ArpaModel, history: &[&str], word: &str) -> Result<f64, DecodeError> {
    match lm.score_word(history, word) {
        Ok(s) => Ok(s),
        Err(crate::lm::LmError::OovWord(_)) => Ok(IN_BEAM_OOV_LOG10),
        Err(e) => Err(e.into()),
    }
}

/// Per-frame argmax path, collapsed. The score is the best path's
/// log-probability, not the full sum over alignments.
pub fn greedy_decode(posts: &PosteriorMatrix, alphabet: &Alphabet) -> BeamHypothesis {
    let mut path = Vec::with_capacity(posts.frames());
    let mut score = 0.0;
    for t in 0..posts.frames() {
        let row = posts.row(t);
        let (best, p) = row
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
        path.push(best);
        score += p.ln();
    }
    let labels = collapse(&path, alphabet.blank());
    BeamHypothesis {
        transcript: alphabet.render(labels.as_slice()),
        labels,
        log_p_am: score,
        log_p_lm: None,
    }
}

#[derive(Debug, Clone)]
struct Prefix {
    labels: Vec<usize>,
    /// log mass of alignments ending in blank
    blank: f64,
    /// log mass of alignments ending in the last label
    non_blank: f64,
    /// unweighted ln P_LM of completed words (in-beam fusion only)
    lm: f64,
    words: usize,
}

impl Prefix {
    fn am(&self) -> f64 {
        log_add(self.blank, self.non_blank)
    }
}

/// Stateful CTC prefix beam search, fed one posterior row at a time.
pub struct PrefixBeamSearch<'a> {
    alphabet: &'a Alphabet,
    cfg: &'a DecodeConfig,
    lm: Option<&'a ArpaModel>,
    beams: Vec<Prefix>,
}

impl<'a> PrefixBeamSearch<'a> {
    pub fn new(
        alphabet: &'a Alphabet,
        cfg: &'a DecodeConfig,
        lm: Option<&'a ArpaModel>,
    ) -> Result<Self, DecodeError> {
        cfg.validate()?;
        let lm = match cfg.fusion {
            LmFusion::InBeam => lm,
            LmFusion::PostHoc => None,
        };
        Ok(Self {
            alphabet,
            cfg,
            lm,
            beams: vec![Prefix {
                labels: Vec::new(),
                blank: 0.0,
                non_blank: NEG_INF,
                lm: 0.0,
                words: 0,
            }],
        })
    }

    fn rank_score(&self, p: &Prefix) -> f64 {
        p.am() + self.cfg.alpha * p.lm + self.cfg.word_bonus * p.words as f64
    }

    /// Total probability mass currently held by live prefixes.
    pub fn live_mass(&self) -> f64 {
        self.beams.iter().map(|b| b.am().exp()).sum()
    }

    pub fn live_prefixes(&self) -> usize {
        self.beams.len()
    }

    /// ln P(last word | earlier words) for a prefix about to take a space,
    /// or `None` if the prefix does not end in a word.
    fn word_score(&self, labels: &[usize], closing: bool) -> Result<Option<f64>, DecodeError> {
        let Some(lm) = self.lm else { return Ok(None) };
        let text = self.alphabet.render(labels);
        let ends_in_word = !text.is_empty() && !text.ends_with(' ');
        let words: Vec<&str> = text.split_whitespace().collect();
        let mut history = vec![crate::lm::BOS];
        let mut score = 0.0;
        if ends_in_word {
            let (last, prev) = words.split_last().expect("non-empty");
            history.extend(prev.iter().filter(|w| lm.contains(w)));
            score += in_beam_score(lm, &history, last)?;
            history.push(last);
        } else if !closing {
            return Ok(None);
        } else {
            history.extend(words.iter().filter(|w| lm.contains(w)));
        }
        if closing {
            score += in_beam_score(lm, &history, crate::lm::EOS)?;
        }
        Ok(Some(log10_to_ln(score)))
    }

    pub fn step(&mut self, row: ArrayView1<f64>) -> Result<(), DecodeError> {
        let blank = self.alphabet.blank();
        let space = self.alphabet.space();
        let logq: Vec<f64> = row.iter().map(|p| p.ln()).collect();

        let mut next: HashMap<Vec<usize>, Prefix> = HashMap::with_capacity(self.beams.len() * 4);
        let mut order: Vec<Vec<usize>> = Vec::new();

        fn slot<'m>(
            next: &'m mut HashMap<Vec<usize>, Prefix>,
            order: &mut Vec<Vec<usize>>,
            labels: &[usize],
            lm: f64,
            words: usize,
        ) -> &'m mut Prefix {
            if !next.contains_key(labels) {
                order.push(labels.to_vec());
                next.insert(
                    labels.to_vec(),
                    Prefix {
                        labels: labels.to_vec(),
                        blank: NEG_INF,
                        non_blank: NEG_INF,
                        lm,
                        words,
                    },
                );
            }
            next.get_mut(labels).expect("inserted")
        }

        for beam in &self.beams {
            let total = beam.am();
            let last = beam.labels.last().copied();

            let same = slot(&mut next, &mut order, &beam.labels, beam.lm, beam.words);
            same.blank = log_add(same.blank, total + logq[blank]);
            if let Some(l) = last {
                same.non_blank = log_add(same.non_blank, beam.non_blank + logq[l]);
            }

            for (c, &lq) in logq.iter().enumerate() {
                if c == blank || lq == NEG_INF {
                    continue;
                }
                let mut labels = beam.labels.clone();
                labels.push(c);
                let from = if Some(c) == last { beam.blank } else { total };
                let (mut lm, mut words) = (beam.lm, beam.words);
                if Some(c) == space && !next.contains_key(&labels) {
                    if let Some(s) = self.word_score(&beam.labels, false)? {
                        lm += s;
                        words += 1;
                    }
                }
                let ext = slot(&mut next, &mut order, &labels, lm, words);
                ext.non_blank = log_add(ext.non_blank, from + lq);
            }
        }

        let mut beams: Vec<Prefix> = order
            .into_iter()
            .map(|k| next.remove(&k).expect("present"))
            .filter(|p| p.am() > NEG_INF || p.labels.is_empty())
            .collect();
        beams.sort_by(|a, b| self.compare(a, b));
        beams.truncate(self.cfg.beam_width);
        self.beams = beams;
        Ok(())
    }

    fn compare(&self, a: &Prefix, b: &Prefix) -> Ordering {
        self.rank_score(b)
            .total_cmp(&self.rank_score(a))
            .then(a.labels.len().cmp(&b.labels.len()))
            .then_with(|| a.labels.cmp(&b.labels))
    }

    /// Top `top_n` hypotheses, best first.
    pub fn finish(mut self) -> Result<Vec<BeamHypothesis>, DecodeError> {
        if self.lm.is_some() {
            let mut closed = Vec::with_capacity(self.beams.len());
            for b in &self.beams {
                let mut b = b.clone();
                let text = self.alphabet.render(&b.labels);
                if let Some(s) = self.word_score(&b.labels, true)? {
                    b.lm += s;
                    if !text.is_empty() && !text.ends_with(' ') {
                        b.words += 1;
                    }
                }
                closed.push(b);
            }
            self.beams = closed;
            let mut beams = std::mem::take(&mut self.beams);
            beams.sort_by(|a, b| self.compare(a, b));
            self.beams = beams;
        }
        let fused = self.lm.is_some();
        Ok(self
            .beams
            .into_iter()
            .take(self.cfg.top_n)
            .map(|p| BeamHypothesis {
                transcript: self.alphabet.render(&p.labels),
                log_p_am: p.am(),
                log_p_lm: fused.then_some(p.lm),
                labels: LabelSequence(p.labels),
            })
            .collect())
    }
}

/// Prefix beam search over a whole utterance. With post-hoc fusion the LM
/// argument is ignored here and applied by [`super::rescore`].
pub fn prefix_beam_search(
    posts: &PosteriorMatrix,
    alphabet: &Alphabet,
    cfg: &DecodeConfig,
    lm: Option<&ArpaModel>,
) -> Result<Vec<BeamHypothesis>, DecodeError> {
    let mut search = PrefixBeamSearch::new(alphabet, cfg, lm)?;
    for t in 0..posts.frames() {
        search.step(posts.row(t))?;
    }
    search.finish()
}
