//! Length-sorted and length-scaled mini-batch planning with padding
//! accounting.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::frontend::frame_count;

pub const DEFAULT_MAX_DURATION_S: f64 = 21.0;
pub const DEFAULT_CAP_RATIO: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum SchedError {
    #[error("manifest line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate utterance id {0:?}")]
    DuplicateId(String),
    #[error("invalid plan parameters: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub audio: String,
    pub text: String,
    /// Seconds.
    pub duration: f64,
}

impl ManifestEntry {
    /// Spectrogram frames for this entry; clips shorter than one window
    /// have none.
    pub fn frames(&self) -> usize {
        frame_count(self.duration).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Entries dropped for exceeding the duration limit.
    pub excluded: usize,
}

impl Manifest {
    pub fn from_entries(entries: Vec<ManifestEntry>) -> Result<Self, SchedError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(SchedError::DuplicateId(e.id.clone()));
            }
        }
        Ok(Self { entries, excluded: 0 })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn exclusion_fraction(&self) -> f64 {
        let total = self.entries.len() + self.excluded;
        if total == 0 {
            0.0
        } else {
            self.excluded as f64 / total as f64
        }
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("manifest entries serialize"));
            out.push('\n');
        }
        out
    }
}

/// Parses one JSON object per line, skipping blank lines, and drops entries
/// longer than `max_duration_s`.
pub fn parse_manifest(text: &str, max_duration_s: f64) -> Result<Manifest, SchedError> {
    let mut entries = Vec::new();
    let mut excluded = 0;
    let mut seen = HashSet::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let e: ManifestEntry = serde_json::from_str(line).map_err(|err| SchedError::Parse {
            line: line_no,
            message: err.to_string(),
        })?;
        if !(e.duration > 0.0) || !e.duration.is_finite() {
            return Err(SchedError::Parse {
                line: line_no,
                message: format!("duration must be positive, got {}", e.duration),
            });
        }
        if !seen.insert(e.id.clone()) {
            return Err(SchedError::DuplicateId(e.id));
        }
        if e.duration > max_duration_s {
            excluded += 1;
        } else {
            entries.push(e);
        }
    }
    Ok(Manifest { entries, excluded })
}

pub fn load_manifest(path: impl AsRef<Path>, max_duration_s: f64) -> Result<Manifest, SchedError> {
    parse_manifest(&std::fs::read_to_string(path)?, max_duration_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchPolicy {
    Fixed,
    Varied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub ids: Vec<String>,
    pub max_frames: usize,
    /// `size * max_frames - useful_cells`
    pub padded_cells: usize,
    pub useful_cells: usize,
}

impl Batch {
    fn new(entries: &[(&ManifestEntry, usize)]) -> Self {
        let max_frames = entries.iter().map(|e| e.1).max().unwrap_or(0);
        let useful: usize = entries.iter().map(|e| e.1).sum();
        Self {
            ids: entries.iter().map(|e| e.0.id.clone()).collect(),
            max_frames,
            padded_cells: entries.len() * max_frames - useful,
            useful_cells: useful,
        }
    }

    pub fn size(&self) -> usize {
        self.ids.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub batches: Vec<Batch>,
    pub policy: BatchPolicy,
    pub base_batch: usize,
    pub cap_ratio: usize,
}

impl BatchPlan {
    /// Batch visiting order for one epoch. Contents stay fixed; only the
    /// order of batches is permuted.
    pub fn epoch_order(&self, seed: u64, epoch: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.batches.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        order.shuffle(&mut rng);
        order
    }

    pub fn entry_count(&self) -> usize {
        self.batches.iter().map(Batch::size).sum()
    }
}

fn sorted_with_frames(m: &Manifest) -> Vec<(&ManifestEntry, usize)> {
    let mut v: Vec<_> = m.entries.iter().map(|e| (e, e.frames())).collect();
    // stable: equal lengths keep manifest order
    v.sort_by_key(|e| e.1);
    v
}

fn check_k(k: usize) -> Result<(), SchedError> {
    if k == 0 {
        return Err(SchedError::InvalidConfig("batch size must be >= 1".into()));
    }
    Ok(())
}

/// Ascending sort by frame count, then consecutive groups of `k`.
pub fn plan_sorted_fixed(m: &Manifest, k: usize) -> Result<BatchPlan, SchedError> {
    check_k(k)?;
    let sorted = sorted_with_frames(m);
    Ok(BatchPlan {
        batches: sorted.chunks(k).map(Batch::new).collect(),
        policy: BatchPolicy::Fixed,
        base_batch: k,
        cap_ratio: 1,
    })
}

/// Consecutive groups of `k` after a seeded random permutation.
pub fn plan_fixed_shuffled(m: &Manifest, k: usize, seed: u64) -> Result<BatchPlan, SchedError> {
    check_k(k)?;
    let mut v: Vec<_> = m.entries.iter().map(|e| (e, e.frames())).collect();
    v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(BatchPlan {
        batches: v.chunks(k).map(Batch::new).collect(),
        policy: BatchPolicy::Fixed,
        base_batch: k,
        cap_ratio: 1,
    })
}

/// `round(num / den)` with exact halves rounded down.
fn round_half_down(num: usize, den: usize) -> usize {
    let q = num / den;
    if 2 * (num % den) > den {
        q + 1
    } else {
        q
    }
}

/// Length-scaled batch sizes. Walking the sorted entries left to right, a
/// batch whose longest entry has `L` frames holds
/// `clamp(round(base_k * L_max / L), base_k, cap_ratio * base_k)` entries
/// (halves rounded down), shrunk further if needed so that
/// `size * L <= memory_budget`. The default budget is `base_k * L_max`.
pub fn plan_varied(
    m: &Manifest,
    base_k: usize,
    cap_ratio: usize,
    memory_budget: Option<usize>,
) -> Result<BatchPlan, SchedError> {
    check_k(base_k)?;
    if cap_ratio == 0 {
        return Err(SchedError::InvalidConfig("cap_ratio must be >= 1".into()));
    }
    let sorted = sorted_with_frames(m);
    let n = sorted.len();
    let l_max = sorted.last().map_or(1, |e| e.1.max(1));
    let budget = memory_budget.unwrap_or(base_k * l_max);
    let (lo, hi) = (base_k, cap_ratio * base_k);
    let mut batches = Vec::new();
    let mut start = 0;
    while start < n {
        let longest = |s: usize| sorted[(start + s).min(n) - 1].1.max(1);
        let mut size = hi;
        loop {
            let l = longest(size);
            let want = round_half_down(base_k * l_max, l).clamp(lo, hi);
            if want < size {
                size = want;
            } else {
                break;
            }
        }
        while size > lo && size.min(n - start) * longest(size) > budget {
            size -= 1;
        }
        let end = (start + size).min(n);
        batches.push(Batch::new(&sorted[start..end]));
        start = end;
    }
    Ok(BatchPlan {
        batches,
        policy: BatchPolicy::Varied,
        base_batch: base_k,
        cap_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaddingReport {
    pub batches: usize,
    pub total_cells: usize,
    pub useful_cells: usize,
    pub padded_cells: usize,
    pub waste_fraction: f64,
    /// Sum over batches of the longest entry's frames: the number of
    /// sequential recurrence steps per epoch when each batch runs in
    /// parallel across its members.
    pub estimated_epoch_cost: usize,
    pub min_batch: usize,
    pub max_batch: usize,
}

pub fn padding_report(plan: &BatchPlan) -> PaddingReport {
    let useful: usize = plan.batches.iter().map(|b| b.useful_cells).sum();
    let padded: usize = plan.batches.iter().map(|b| b.padded_cells).sum();
    let total = useful + padded;
    PaddingReport {
        batches: plan.batches.len(),
        total_cells: total,
        useful_cells: useful,
        padded_cells: padded,
        waste_fraction: if total == 0 { 0.0 } else { padded as f64 / total as f64 },
        estimated_epoch_cost: plan.batches.iter().map(|b| b.max_frames).sum(),
        min_batch: plan.batches.iter().map(Batch::size).min().unwrap_or(0),
        max_batch: plan.batches.iter().map(Batch::size).max().unwrap_or(0),
    }
}
