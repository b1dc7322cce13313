//! Synthetic speech stand-in: each symbol of a small alphabet is a pure tone
//! with its own pitch, separated by short silences, with random tempo,
//! loudness and background noise per utterance.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::frontend::{write_wav, AudioClip, FrontendError};
use crate::sched::{Manifest, ManifestEntry};

pub const SYNTH_ALPHABET: &str = "abcde ";
pub const SAMPLE_RATE: u32 = 16_000;

/// Tone frequency in Hz for each symbol of [`SYNTH_ALPHABET`].
const PITCH: [f64; 6] = [450.0, 700.0, 1000.0, 1400.0, 1900.0, 250.0];

/// Words the sentence generator draws from.
pub const VOCABULARY: [&str; 12] = [
    "ab", "bad", "cab", "dead", "bee", "ace", "deed", "cade", "ebb", "add", "bed", "dab",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub train_utterances: usize,
    pub test_utterances: usize,
    pub max_duration_s: f64,
    /// Tone length per symbol, milliseconds, before tempo scaling.
    pub tone_ms: f64,
    pub gap_ms: f64,
    pub lead_ms: f64,
    /// Per-utterance tempo factor range.
    pub tempo: (f64, f64),
    /// Per-utterance signal-to-noise ratio range in dB.
    pub snr_db: (f64, f64),
    pub max_words: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            train_utterances: 200,
            test_utterances: 50,
            max_duration_s: 2.0,
            tone_ms: 90.0,
            gap_ms: 30.0,
            lead_ms: 60.0,
            tempo: (0.8, 1.2),
            snr_db: (6.0, 30.0),
            max_words: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthUtterance {
    pub id: String,
    pub text: String,
    pub clip: AudioClip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub train: Vec<SynthUtterance>,
    pub test: Vec<SynthUtterance>,
}

fn sentence(rng: &mut ChaCha8Rng, max_words: usize) -> String {
    let n = rng.gen_range(1..=max_words.max(1));
    (0..n)
        .map(|_| *VOCABULARY.choose(rng).expect("non-empty"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn render(text: &str, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let sr = SAMPLE_RATE as f64;
    let tempo = rng.gen_range(cfg.tempo.0..=cfg.tempo.1);
    let amp = rng.gen_range(0.2..0.8);
    let tone = (cfg.tone_ms * tempo * sr / 1000.0).round() as usize;
    let gap = (cfg.gap_ms * tempo * sr / 1000.0).round() as usize;
    let lead = (cfg.lead_ms * sr / 1000.0).round() as usize;
    let mut out = vec![0.0; lead];
    for c in text.chars() {
        let k = SYNTH_ALPHABET.find(c).expect("synthetic text uses the synthetic alphabet");
        let f = PITCH[k] * rng.gen_range(0.97..1.03);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        for n in 0..tone {
            // short linear ramps avoid clicks
            let ramp = (n.min(tone - 1 - n) as f64 / 80.0).min(1.0);
            out.push(amp * ramp * (std::f64::consts::TAU * f * n as f64 / sr + phase).sin());
        }
        out.extend(std::iter::repeat_n(0.0, gap));
    }
    out.extend(std::iter::repeat_n(0.0, lead));
    let snr = rng.gen_range(cfg.snr_db.0..=cfg.snr_db.1);
    let power = amp * amp / 2.0;
    let sigma = (power / 10f64.powf(snr / 10.0)).sqrt();
    let noise = Normal::new(0.0, sigma).expect("finite sigma");
    for s in &mut out {
        *s += noise.sample(rng);
    }
    out
}

fn utterance(id: String, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> SynthUtterance {
    loop {
        let text = sentence(rng, cfg.max_words);
        let samples = render(&text, cfg, rng);
        if samples.len() as f64 / SAMPLE_RATE as f64 <= cfg.max_duration_s {
            let clip = AudioClip::new(samples, SAMPLE_RATE).expect("finite samples");
            return SynthUtterance { id, text, clip };
        }
    }
}

/// Generates the train and test splits deterministically from `seed`.
pub fn generate_corpus(cfg: &SynthConfig, seed: u64) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = (0..cfg.train_utterances)
        .map(|i| utterance(format!("train-{i:04}"), cfg, &mut rng))
        .collect();
    let test = (0..cfg.test_utterances)
        .map(|i| utterance(format!("test-{i:04}"), cfg, &mut rng))
        .collect();
    SynthCorpus { train, test }
}

/// Manifest entries pointing at `<id>.wav` next to the manifest.
pub fn manifest_for(utts: &[SynthUtterance]) -> Manifest {
    Manifest::from_entries(
        utts.iter()
            .map(|u| ManifestEntry {
                id: u.id.clone(),
                audio: format!("{}.wav", u.id),
                text: u.text.clone(),
                duration: u.clip.duration_s(),
            })
            .collect(),
    )
    .expect("generated ids are unique")
}

/// Writes every clip as WAV plus `train.jsonl`, `test.jsonl` and a
/// `lm.txt` of training sentences into `dir`.
pub fn write_corpus(corpus: &SynthCorpus, dir: &Path) -> Result<(), FrontendError> {
    std::fs::create_dir_all(dir)?;
    for u in corpus.train.iter().chain(&corpus.test) {
        write_wav(dir.join(format!("{}.wav", u.id)), &u.clip)?;
    }
    std::fs::write(dir.join("train.jsonl"), manifest_for(&corpus.train).to_jsonl())?;
    std::fs::write(dir.join("test.jsonl"), manifest_for(&corpus.test).to_jsonl())?;
    let lm: String = corpus.train.iter().map(|u| format!("{}\n", u.text)).collect();
    std::fs::write(dir.join("lm.txt"), lm)?;
    Ok(())
}
