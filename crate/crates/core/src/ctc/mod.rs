//! Connectionist temporal classification: alphabet, path collapse, the
//! forward-backward log-probability and its gradient, and an exhaustive
//! enumeration oracle for small instances.

mod alphabet;
mod forward_backward;
mod oracle;

use ndarray::{Array2, ArrayView1, Axis};
use thiserror::Error;

pub use alphabet::Alphabet;
pub use forward_backward::{ctc_log_prob, ctc_log_prob_backward, ctc_loss_and_grad, CtcResult};
pub use oracle::{brute_force_ctc, brute_force_distribution, ORACLE_MAX_PATHS};

#[derive(Debug, Error, PartialEq)]
pub enum CtcError {
    #[error("target of {target_len} labels needs at least {required} frames, got {frames}")]
    ImpossibleAlignment {
        target_len: usize,
        required: usize,
        frames: usize,
    },
    #[error("instance has {paths} paths, above the oracle limit of {limit}")]
    OracleTooLarge { paths: f64, limit: usize },
    #[error("label {label} is invalid for an alphabet of {size} symbols with blank {blank}")]
    InvalidLabel {
        label: usize,
        size: usize,
        blank: usize,
    },
    #[error("symbol {0:?} is not in the alphabet")]
    UnknownSymbol(char),
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("invalid posteriors: {0}")]
    InvalidPosteriors(String),
}

/// Target label indices; never contains the blank.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LabelSequence(pub Vec<usize>);

impl LabelSequence {
    pub fn new(labels: Vec<usize>) -> Self {
        Self(labels)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Shortest path length able to emit this sequence: one frame per label
    /// plus a separating blank between each pair of equal neighbours.
    pub fn min_frames(&self) -> usize {
        let repeats = self.0.windows(2).filter(|w| w[0] == w[1]).count();
        self.0.len() + repeats
    }

    pub(crate) fn check(&self, size: usize, blank: usize) -> Result<(), CtcError> {
        match self.0.iter().find(|&&l| l >= size || l == blank) {
            Some(&label) => Err(CtcError::InvalidLabel { label, size, blank }),
            None => Ok(()),
        }
    }
}

/// Removes consecutive repeats, then blanks.
pub fn collapse(path: &[usize], blank: usize) -> LabelSequence {
    let mut out = Vec::new();
    let mut prev = None;
    for &c in path {
        if Some(c) != prev && c != blank {
            out.push(c);
        }
        prev = Some(c);
    }
    LabelSequence(out)
}

/// Per-frame output distribution, `T` rows by alphabet-size columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMatrix {
    probs: Array2<f64>,
}

impl PosteriorMatrix {
    /// Validates that every row is a distribution (entries in [0, 1],
    /// summing to 1 within 1e-6).
    pub fn new(probs: Array2<f64>) -> Result<Self, CtcError> {
        if probs.ncols() < 2 {
            return Err(CtcError::InvalidPosteriors(
                "need at least two symbols per frame".into(),
            ));
        }
        for (t, row) in probs.axis_iter(Axis(0)).enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(CtcError::InvalidPosteriors(format!(
                    "frame {t} has an entry outside [0, 1]"
                )));
            }
            let sum = row.sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(CtcError::InvalidPosteriors(format!(
                    "frame {t} sums to {sum}"
                )));
            }
        }
        Ok(Self { probs })
    }

    pub fn from_logits(logits: &Array2<f64>) -> Self {
        Self {
            probs: softmax_rows(logits),
        }
    }

    pub fn frames(&self) -> usize {
        self.probs.nrows()
    }

    pub fn symbols(&self) -> usize {
        self.probs.ncols()
    }

    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, f64> {
        self.probs.row(t)
    }

    pub fn log_probs(&self) -> Array2<f64> {
        self.probs.mapv(f64::ln)
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.probs
    }
}

pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

pub fn log_softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

/// `ln(e^a + e^b)` without overflow; `-inf` is the additive identity.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
