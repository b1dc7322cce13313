use std::collections::HashMap;
use std::path::Path;

use log::{debug, info};
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checkpoint::is_cnn;
use super::model::backward;
use super::{AdamConfig, AdamState, Checkpoint, NnetError, ParamStore};
use crate::ctc::{ctc_loss_and_grad, Alphabet, CtcError, LabelSequence};
use crate::frontend::{compute_spectrogram, read_spectrogram, read_wav, FrontendConfig};
use crate::sched::{BatchPlan, Manifest};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrPhase {
    pub epochs: usize,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSchedule {
    pub phases: Vec<LrPhase>,
    pub adam: AdamConfig,
    /// Stop after this many epochs without a dev-loss improvement.
    pub patience: Option<usize>,
    /// Rescale the averaged batch gradient to at most this L2 norm.
    pub clip_norm: Option<f64>,
    pub seed: u64,
    /// Worker threads for per-sample gradients. Reduction order is fixed,
    /// so results do not depend on this.
    pub jobs: usize,
    pub shuffle_batches: bool,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self::standard()
    }
}

impl TrainSchedule {
    /// 20 epochs: 10 at 5e-4, 5 at 5e-5, 5 at 5e-6.
    pub fn standard() -> Self {
        Self {
            phases: vec![
                LrPhase { epochs: 10, lr: 5e-4 },
                LrPhase { epochs: 5, lr: 5e-5 },
                LrPhase { epochs: 5, lr: 5e-6 },
            ],
            adam: AdamConfig::default(),
            patience: Some(3),
            clip_norm: None,
            seed: 0,
            jobs: 1,
            shuffle_batches: true,
        }
    }

    /// The same three-phase 2:1:1 shape over `epochs` epochs, starting at
    /// `base_lr` and dropping tenfold per phase.
    pub fn scaled(epochs: usize, base_lr: f64) -> Self {
        let first = epochs.div_ceil(2);
        let second = (epochs - first).div_ceil(2);
        let third = epochs - first - second;
        let phases = [(first, base_lr), (second, base_lr / 10.0), (third, base_lr / 100.0)]
            .into_iter()
            .filter(|p| p.0 > 0)
            .map(|(epochs, lr)| LrPhase { epochs, lr })
            .collect();
        Self {
            phases,
            ..Self::standard()
        }
    }

    pub fn total_epochs(&self) -> usize {
        self.phases.iter().map(|p| p.epochs).sum()
    }

    /// Learning rate for a 1-based epoch.
    pub fn lr_at(&self, epoch: usize) -> Option<f64> {
        let mut end = 0;
        for p in &self.phases {
            end += p.epochs;
            if epoch >= 1 && epoch <= end {
                return Some(p.lr);
            }
        }
        None
    }

    pub fn validate(&self) -> Result<(), NnetError> {
        let bad = |m: &str| Err(NnetError::Config(m.into()));
        if self.phases.is_empty() || self.phases.iter().any(|p| p.epochs == 0) {
            return bad("every learning-rate phase needs at least one epoch");
        }
        if self.phases.iter().any(|p| !(p.lr >= 0.0) || !p.lr.is_finite()) {
            return bad("learning rates must be finite and non-negative");
        }
        if self.phases.windows(2).any(|w| !(w[1].lr < w[0].lr)) {
            return bad("learning rates must strictly decrease across phases");
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !(a.eps > 0.0) {
            return bad("Adam needs 0 <= beta < 1 and eps > 0");
        }
        if self.patience == Some(0) {
            return bad("patience must be >= 1");
        }
        if self.clip_norm.is_some_and(|c| !(c > 0.0)) {
            return bad("clip_norm must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub features: Array2<f64>,
    pub labels: LabelSequence,
    pub text: String,
}

/// Feature/transcript pairs addressed by utterance id.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    samples: Vec<Sample>,
    index: HashMap<String, usize>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self, NnetError> {
        let mut index = HashMap::with_capacity(samples.len());
        for (i, s) in samples.iter().enumerate() {
            if index.insert(s.id.clone(), i).is_some() {
                return Err(NnetError::Data(format!("duplicate id {}", s.id)));
            }
        }
        Ok(Self { samples, index })
    }

    /// Loads every manifest entry. Audio paths ending in `.spec` are read as
    /// stored spectrograms; anything else as 16-bit mono WAV. Relative paths
    /// resolve against `base`.
    pub fn from_manifest(
        m: &Manifest,
        base: &Path,
        alphabet: &Alphabet,
        frontend: &FrontendConfig,
    ) -> Result<Self, NnetError> {
        let samples = m
            .entries
            .iter()
            .map(|e| {
                let path = base.join(&e.audio);
                let features = if path.extension().is_some_and(|x| x == "spec") {
                    read_spectrogram(std::fs::File::open(&path)?)?
                } else {
                    compute_spectrogram(&read_wav(&path)?, frontend)?.frames
                };
                Ok(Sample {
                    id: e.id.clone(),
                    features,
                    labels: alphabet.encode(&e.text)?,
                    text: e.text.clone(),
                })
            })
            .collect::<Result<Vec<_>, NnetError>>()?;
        Self::new(samples)
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.index.get(id).map(|&i| &self.samples[i])
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Subset in the order of `ids`.
    pub fn subset(&self, ids: &[String]) -> Result<Self, NnetError> {
        Self::new(
            ids.iter()
                .map(|id| self.get(id).cloned().ok_or_else(|| NnetError::Data(format!("unknown id {id}"))))
                .collect::<Result<_, _>>()?,
        )
    }
}

/// CTC loss of one sample and, when `grads` is given, its parameter
/// gradient. `None` marks a sample that cannot be aligned (too few output
/// frames for its transcript, or shorter than the receptive field).
pub fn sample_loss(
    ckpt: &Checkpoint,
    sample: &Sample,
    grads: Option<&mut ParamStore>,
) -> Result<Option<f64>, NnetError> {
    let pass = match ckpt.forward(sample.features.view()) {
        Ok(p) => p,
        Err(NnetError::InputTooShort { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let blank = ckpt.config.alphabet_size() - 1;
    let r = match ctc_loss_and_grad(&pass.logits, &sample.labels, blank) {
        Ok(r) => r,
        Err(CtcError::ImpossibleAlignment { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    if let Some(g) = grads {
        backward(&ckpt.config, &ckpt.params, &pass, &r.grad, g, ckpt.freeze_cnn);
    }
    Ok(Some(r.loss))
}

/// Mean loss over the alignable samples, plus the number skipped.
pub fn evaluate_loss(ckpt: &Checkpoint, data: &Dataset) -> Result<(f64, usize), NnetError> {
    let mut total = 0.0;
    let mut n = 0;
    let mut skipped = 0;
    for s in data.samples() {
        match sample_loss(ckpt, s, None)? {
            Some(l) => {
                total += l;
                n += 1;
            }
            None => skipped += 1,
        }
    }
    Ok((if n == 0 { f64::NAN } else { total / n as f64 }, skipped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub lr: f64,
    /// Mean CTC loss over the epoch's trained samples, measured before each
    /// batch's update.
    pub mean_loss: f64,
    pub dev_loss: Option<f64>,
    pub samples: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub metrics: Vec<EpochMetrics>,
    /// Epoch whose parameters were kept (the best dev epoch when a dev set
    /// is given, else the last).
    pub best_epoch: usize,
    pub stopped_early: bool,
}

type SampleResult = Result<Option<(f64, ParamStore)>, NnetError>;

fn batch_gradients(ckpt: &Checkpoint, samples: &[&Sample], pool: Option<&rayon::ThreadPool>) -> Vec<SampleResult> {
    let one = |s: &&Sample| -> SampleResult {
        let mut g = ckpt.params.zeros_like();
        Ok(sample_loss(ckpt, s, Some(&mut g))?.map(|l| (l, g)))
    };
    match pool {
        Some(p) => p.install(|| samples.par_iter().map(one).collect()),
        None => samples.iter().map(one).collect(),
    }
}

/// Trains for the schedule's epochs over the batches of `plan`.
pub fn train(
    mut ckpt: Checkpoint,
    plan: &BatchPlan,
    sched: &TrainSchedule,
    data: &Dataset,
    dev: Option<&Dataset>,
) -> Result<TrainOutcome, NnetError> {
    sched.validate()?;
    for b in &plan.batches {
        if let Some(id) = b.ids.iter().find(|id| data.get(id).is_none()) {
            return Err(NnetError::Data(format!("batch plan references unknown id {id}")));
        }
    }
    let pool = if sched.jobs > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(sched.jobs)
                .build()
                .map_err(|e| NnetError::Config(e.to_string()))?,
        )
    } else {
        None
    };
    let mut opt = ckpt.optimizer.take().unwrap_or_else(|| AdamState::new(&ckpt.params));
    let freeze = ckpt.freeze_cnn;
    let mut metrics = Vec::new();
    let mut best: Option<(f64, usize, Checkpoint)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;
    let start_epoch = ckpt.epoch as usize;
    for epoch in 1..=sched.total_epochs() {
        let lr = sched.lr_at(epoch).expect("epoch within schedule");
        let order: Vec<usize> = if sched.shuffle_batches {
            plan.epoch_order(sched.seed, start_epoch + epoch)
        } else {
            (0..plan.batches.len()).collect()
        };
        let (mut loss_sum, mut trained, mut skipped) = (0.0, 0, 0);
        for bi in order {
            let samples: Vec<&Sample> = plan.batches[bi]
                .ids
                .iter()
                .map(|id| data.get(id).expect("checked above"))
                .collect();
            let mut grads = ckpt.params.zeros_like();
            let mut n = 0;
            for r in batch_gradients(&ckpt, &samples, pool.as_ref()) {
                match r? {
                    Some((l, g)) => {
                        loss_sum += l;
                        n += 1;
                        grads.add_assign(&g);
                    }
                    None => skipped += 1,
                }
            }
            if n == 0 {
                continue;
            }
            trained += n;
            grads.scale(1.0 / n as f64);
            if let Some(c) = sched.clip_norm {
                let norm = grads.l2_norm();
                if norm > c {
                    grads.scale(c / norm);
                }
            }
            opt.update(&sched.adam, &mut ckpt.params, &grads, lr, |name| freeze && is_cnn(name));
        }
        ckpt.epoch += 1;
        let dev_loss = dev.map(|d| evaluate_loss(&ckpt, d).map(|r| r.0)).transpose()?;
        let m = EpochMetrics {
            epoch: ckpt.epoch as usize,
            lr,
            mean_loss: if trained == 0 { f64::NAN } else { loss_sum / trained as f64 },
            dev_loss,
            samples: trained,
            skipped,
        };
        info!(
            "epoch {} lr {:.1e} loss {:.4} dev {:?} skipped {}",
            m.epoch, lr, m.mean_loss, m.dev_loss, skipped
        );
        metrics.push(m);
        if let Some(dl) = dev_loss {
            if best.as_ref().is_none_or(|b| dl < b.0) {
                let mut snap = ckpt.clone();
                snap.optimizer = Some(opt.clone());
                best = Some((dl, ckpt.epoch as usize, snap));
                since_best = 0;
            } else {
                since_best += 1;
                if sched.patience.is_some_and(|p| since_best >= p) {
                    debug!("no dev improvement for {since_best} epochs, stopping");
                    stopped_early = true;
                    break;
                }
            }
        }
    }
    let (checkpoint, best_epoch) = match best {
        Some((_, e, snap)) => (snap, e),
        None => {
            ckpt.optimizer = Some(opt);
            let e = ckpt.epoch as usize;
            (ckpt, e)
        }
    };
    Ok(TrainOutcome {
        checkpoint,
        metrics,
        best_epoch,
        stopped_early,
    })
}
