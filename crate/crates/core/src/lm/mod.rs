//! Back-off n-gram language models in ARPA format.
//!
//! Probabilities are kept in log10 as in the file; callers convert to
//! natural log with [`log10_to_ln`] where the acoustic score is combined.

mod arpa;
mod estimate;

use std::collections::HashMap;

use thiserror::Error;

pub use estimate::estimate_arpa;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";
pub const MAX_ORDER: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum LmError {
    #[error("malformed ARPA in {section}: expected {expected}, found {found}")]
    MalformedArpa {
        section: String,
        expected: String,
        found: String,
    },
    #[error("out-of-vocabulary word {0:?}")]
    OovWord(String),
    #[error("cannot score an empty sentence")]
    EmptySentence,
}

impl LmError {
    pub(crate) fn malformed(
        section: impl Into<String>,
        expected: impl Into<String>,
        found: impl Into<String>,
    ) -> Self {
        LmError::MalformedArpa {
            section: section.into(),
            expected: expected.into(),
            found: found.into(),
        }
    }
}

pub fn log10_to_ln(v: f64) -> f64 {
    v * std::f64::consts::LN_10
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgramEntry {
    pub log10_prob: f64,
    /// 0.0 when absent and always 0.0 at the highest order.
    pub log10_backoff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OovPolicy {
    /// Unknown words are an error.
    #[default]
    Strict,
    /// Unknown words score as `<unk>` when the model has it.
    MapToUnk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentenceScore {
    pub log10_total: f64,
    pub oov_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArpaModel {
    order: usize,
    words: Vec<String>,
    vocab: HashMap<String, u32>,
    /// `tables[k - 1]` holds the k-grams.
    tables: Vec<HashMap<Vec<u32>, NgramEntry>>,
    oov_policy: OovPolicy,
}

impl ArpaModel {
    pub(crate) fn from_parts(
        words: Vec<String>,
        tables: Vec<HashMap<Vec<u32>, NgramEntry>>,
    ) -> Self {
        let vocab = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Self {
            order: tables.len(),
            words,
            vocab,
            tables,
            oov_policy: OovPolicy::Strict,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vocab.contains_key(word)
    }

    pub fn ngram_count(&self, k: usize) -> usize {
        self.tables.get(k - 1).map_or(0, HashMap::len)
    }

    pub fn oov_policy(&self) -> OovPolicy {
        self.oov_policy
    }

    pub fn with_oov_policy(mut self, policy: OovPolicy) -> Self {
        self.oov_policy = policy;
        self
    }

    pub fn entry(&self, ngram: &[&str]) -> Option<NgramEntry> {
        let ids: Option<Vec<u32>> = ngram.iter().map(|w| self.vocab.get(*w).copied()).collect();
        self.tables.get(ngram.len().checked_sub(1)?)?.get(&ids?).copied()
    }

    /// Stored k-grams as word lists, for every k.
    pub fn ngrams(&self, k: usize) -> Vec<(Vec<&str>, NgramEntry)> {
        let mut out: Vec<_> = self.tables[k - 1]
            .iter()
            .map(|(ids, e)| {
                (
                    ids.iter().map(|&i| self.words[i as usize].as_str()).collect::<Vec<_>>(),
                    *e,
                )
            })
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Returns the id used for `word` and whether it was mapped to `<unk>`.
    fn lookup(&self, word: &str) -> Result<(u32, bool), LmError> {
        let lower = word.to_lowercase();
        if let Some(&id) = self.vocab.get(&lower) {
            return Ok((id, false));
        }
        match (self.oov_policy, self.vocab.get(UNK)) {
            (OovPolicy::MapToUnk, Some(&unk)) => Ok((unk, true)),
            _ => Err(LmError::OovWord(lower)),
        }
    }

    /// Back-off score over ids; returns the log10 probability and the
    /// number of back-off steps taken.
    fn score_ids(&self, context: &[u32], word: u32) -> (f64, usize) {
        let keep = context.len().min(self.order - 1);
        let mut ctx = &context[context.len() - keep..];
        let mut acc = 0.0;
        let mut steps = 0;
        let mut key = Vec::with_capacity(self.order);
        loop {
            key.clear();
            key.extend_from_slice(ctx);
            key.push(word);
            if let Some(e) = self.tables[ctx.len()].get(&key) {
                return (acc + e.log10_prob, steps);
            }
            if ctx.is_empty() {
                // unigram missing for an in-vocabulary word cannot happen for
                // parsed models; treat as impossible
                return (f64::NEG_INFINITY, steps);
            }
            acc += self.tables[ctx.len() - 1]
                .get(ctx)
                .map_or(0.0, |e| e.log10_backoff);
            ctx = &ctx[1..];
            steps += 1;
        }
    }

    /// log10 P(word | context) with back-off; only the last `order - 1`
    /// context words are used.
    pub fn score_word(&self, context: &[&str], word: &str) -> Result<f64, LmError> {
        self.score_word_traced(context, word).map(|(s, _)| s)
    }

    /// As [`score_word`](Self::score_word), also returning how many times
    /// the lookup backed off to a shorter context.
    pub fn score_word_traced(&self, context: &[&str], word: &str) -> Result<(f64, usize), LmError> {
        let keep = context.len().min(self.order - 1);
        let ctx = context[context.len() - keep..]
            .iter()
            .map(|w| self.lookup(w).map(|(id, _)| id))
            .collect::<Result<Vec<_>, _>>()?;
        let (w, _) = self.lookup(word)?;
        Ok(self.score_ids(&ctx, w))
    }

    /// Sum of per-word scores with `<s>` history and a closing `</s>`.
    pub fn score_sentence(&self, words: &[&str]) -> Result<SentenceScore, LmError> {
        if words.is_empty() {
            return Err(LmError::EmptySentence);
        }
        self.score_tokens(words)
    }

    /// Like [`score_sentence`](Self::score_sentence) but an empty word list
    /// scores the `</s>` transition alone.
    pub(crate) fn score_tokens(&self, words: &[&str]) -> Result<SentenceScore, LmError> {
        let mut history = vec![self.lookup(BOS)?.0];
        let mut total = 0.0;
        let mut oov = 0;
        for w in words {
            let (id, mapped) = self.lookup(w)?;
            oov += mapped as usize;
            total += self.score_ids(&history, id).0;
            history.push(id);
        }
        let eos = self.lookup(EOS)?.0;
        total += self.score_ids(&history, eos).0;
        Ok(SentenceScore {
            log10_total: total,
            oov_count: oov,
        })
    }

    pub fn score_text(&self, text: &str) -> Result<SentenceScore, LmError> {
        let words: Vec<&str> = text.split_whitespace().collect();
        self.score_sentence(&words)
    }
}
