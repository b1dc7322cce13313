use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::CascadeError;

/// Corpus statistics of transcripts and durations. Characters are the
/// alphanumeric ones, lowercased; spaces and punctuation are not counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub sentences: usize,
    pub words: usize,
    pub characters: usize,
    pub total_duration_s: f64,
    pub avg_words_per_sentence: f64,
    pub avg_chars_per_second: f64,
    pub per_character_rate: BTreeMap<char, f64>,
}

pub fn compute_sample_stats<S: AsRef<str>>(samples: &[(S, f64)]) -> Result<SampleStats, CascadeError> {
    if samples.is_empty() {
        return Err(CascadeError::EmptyInput("no samples".into()));
    }
    let mut words = 0;
    let mut duration = 0.0;
    let mut counts: BTreeMap<char, usize> = BTreeMap::new();
    for (text, dur) in samples {
        let text = text.as_ref();
        let w = text.split_whitespace().count();
        if w == 0 {
            return Err(CascadeError::EmptyInput("empty transcript".into()));
        }
        if !(*dur > 0.0) {
            return Err(CascadeError::EmptyInput(format!("non-positive duration {dur}")));
        }
        words += w;
        duration += dur;
        for c in text.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase) {
            *counts.entry(c).or_default() += 1;
        }
    }
    let chars: usize = counts.values().sum();
    Ok(SampleStats {
        sentences: samples.len(),
        words,
        characters: chars,
        total_duration_s: duration,
        avg_words_per_sentence: words as f64 / samples.len() as f64,
        avg_chars_per_second: chars as f64 / duration,
        per_character_rate: counts
            .into_iter()
            .map(|(c, n)| (c, n as f64 / chars.max(1) as f64))
            .collect(),
    })
}

/// `(subset - all) / all`
pub fn relative_difference(subset: f64, all: f64) -> f64 {
    (subset - all) / all
}

/// Side-by-side statistics of a subset (e.g. the misrecognized utterances)
/// against the whole corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsComparison {
    pub subset: SampleStats,
    pub all: SampleStats,
    pub avg_length_difference: f64,
    pub speed_difference: f64,
    /// Relative difference of each character's rate, for characters seen
    /// in the whole corpus.
    pub per_character_difference: BTreeMap<char, f64>,
}

pub fn compare_stats(subset: SampleStats, all: SampleStats) -> StatsComparison {
    let per_character_difference = all
        .per_character_rate
        .iter()
        .map(|(c, &a)| {
            let s = subset.per_character_rate.get(c).copied().unwrap_or(0.0);
            (*c, relative_difference(s, a))
        })
        .collect();
    StatsComparison {
        avg_length_difference: relative_difference(subset.avg_words_per_sentence, all.avg_words_per_sentence),
        speed_difference: relative_difference(subset.avg_chars_per_second, all.avg_chars_per_second),
        per_character_difference,
        subset,
        all,
    }
}
