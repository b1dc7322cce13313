use std::path::Path;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::infer::decode_utterance;
use super::select::{select_wrong_samples, selection_log, threshold_for_fraction, SelectionPolicy, SelectionRecord};
use super::CascadeError;
use crate::decode::{BeamHypothesis, DecodeConfig, RouteDecision, RouteDirection};
use crate::nnet::{
    build_model, train, transfer_cnn_weights, Checkpoint, Dataset, EpochMetrics, ModelConfig, TrainSchedule,
};
use crate::sched::{plan_sorted_fixed, plan_varied, BatchPlan, BatchPolicy, Manifest, DEFAULT_CAP_RATIO};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchConfig {
    pub policy: BatchPolicy,
    pub base_k: usize,
    pub cap_ratio: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            policy: BatchPolicy::Varied,
            base_k: 4,
            cap_ratio: DEFAULT_CAP_RATIO,
        }
    }
}

impl BatchConfig {
    pub fn plan(&self, m: &Manifest) -> Result<BatchPlan, CascadeError> {
        Ok(match self.policy {
            BatchPolicy::Fixed => plan_sorted_fixed(m, self.base_k)?,
            BatchPolicy::Varied => plan_varied(m, self.base_k, self.cap_ratio, None)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    pub stage1: ModelConfig,
    pub stage2: ModelConfig,
    pub stage1_schedule: TrainSchedule,
    pub stage2_schedule: TrainSchedule,
    #[serde(default)]
    pub decode: DecodeConfig,
    #[serde(default)]
    pub batch: BatchConfig,
    #[serde(default)]
    pub selection: SelectionPolicy,
    /// When set, the routing threshold is chosen so that about this
    /// fraction of the training utterances routes to stage 2, replacing
    /// `decode.route_threshold`.
    #[serde(default)]
    pub route_fraction: Option<f64>,
    #[serde(default)]
    pub freeze_cnn: bool,
    #[serde(default)]
    pub seed: u64,
}

impl CascadeConfig {
    pub fn toy(alphabet: &str) -> Self {
        Self {
            stage1: ModelConfig::toy_stage1(alphabet),
            stage2: ModelConfig::toy_stage2(alphabet),
            stage1_schedule: TrainSchedule::scaled(20, 2e-3),
            stage2_schedule: TrainSchedule::scaled(10, 1e-3),
            decode: DecodeConfig {
                beam_width: 16,
                top_n: 8,
                ..Default::default()
            },
            batch: BatchConfig::default(),
            selection: SelectionPolicy::Score,
            route_fraction: None,
            freeze_cnn: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeArtifacts {
    pub stage1: Checkpoint,
    pub stage2: Checkpoint,
    pub route_threshold: f64,
    pub route_direction: RouteDirection,
    pub selection_log: Vec<SelectionRecord>,
    pub stage1_cnn_hash: String,
    /// CNN hash of the second stage right after weight transfer.
    pub stage2_init_cnn_hash: String,
    pub stage1_metrics: Vec<EpochMetrics>,
    pub stage2_metrics: Vec<EpochMetrics>,
}

/// The JSON side file stored next to the two checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeMeta {
    pub route_threshold: f64,
    pub route_direction: RouteDirection,
    pub stage1_cnn_hash: String,
    pub stage2_init_cnn_hash: String,
    pub selection_log: Vec<SelectionRecord>,
    pub stage1_metrics: Vec<EpochMetrics>,
    pub stage2_metrics: Vec<EpochMetrics>,
}

pub const STAGE1_FILE: &str = "stage1.ckpt";
pub const STAGE2_FILE: &str = "stage2.ckpt";
pub const META_FILE: &str = "cascade.json";

impl CascadeArtifacts {
    pub fn decode_config(&self, base: &DecodeConfig) -> DecodeConfig {
        DecodeConfig {
            route_threshold: self.route_threshold,
            route_direction: self.route_direction,
            ..base.clone()
        }
    }

    pub fn save(&self, dir: &Path) -> Result<(), CascadeError> {
        std::fs::create_dir_all(dir)?;
        self.stage1.save(dir.join(STAGE1_FILE))?;
        self.stage2.save(dir.join(STAGE2_FILE))?;
        let meta = CascadeMeta {
            route_threshold: self.route_threshold,
            route_direction: self.route_direction,
            stage1_cnn_hash: self.stage1_cnn_hash.clone(),
            stage2_init_cnn_hash: self.stage2_init_cnn_hash.clone(),
            selection_log: self.selection_log.clone(),
            stage1_metrics: self.stage1_metrics.clone(),
            stage2_metrics: self.stage2_metrics.clone(),
        };
        std::fs::write(dir.join(META_FILE), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, CascadeError> {
        let meta: CascadeMeta = serde_json::from_str(&std::fs::read_to_string(dir.join(META_FILE))?)?;
        Ok(Self {
            stage1: Checkpoint::load(dir.join(STAGE1_FILE))?,
            stage2: Checkpoint::load(dir.join(STAGE2_FILE))?,
            route_threshold: meta.route_threshold,
            route_direction: meta.route_direction,
            selection_log: meta.selection_log,
            stage1_cnn_hash: meta.stage1_cnn_hash,
            stage2_init_cnn_hash: meta.stage2_init_cnn_hash,
            stage1_metrics: meta.stage1_metrics,
            stage2_metrics: meta.stage2_metrics,
        })
    }
}

/// Trains the first stage, then continues with [`run_cascade_from_stage1`].
pub fn run_cascade(
    cfg: &CascadeConfig,
    manifest: &Manifest,
    data: &Dataset,
    dev: Option<&Dataset>,
) -> Result<CascadeArtifacts, CascadeError> {
    let plan = cfg.batch.plan(manifest)?;
    let init = build_model(&cfg.stage1, cfg.seed)?;
    let out = train(init, &plan, &cfg.stage1_schedule, data, dev)?;
    info!("stage 1 trained for {} epochs", out.metrics.len());
    run_cascade_from_stage1(cfg, out.checkpoint, out.metrics, manifest, data, dev)
}

/// Acoustic-only top hypothesis for every manifest entry, in manifest order.
pub fn stage1_decodes(
    stage1: &Checkpoint,
    manifest: &Manifest,
    data: &Dataset,
    cfg: &DecodeConfig,
    jobs: usize,
) -> Result<Vec<(String, BeamHypothesis)>, CascadeError> {
    let alphabet = stage1.config.alphabet()?;
    let one = |id: &String| -> Result<(String, BeamHypothesis), CascadeError> {
        let s = data
            .get(id)
            .ok_or_else(|| CascadeError::InvalidConfig(format!("no data for {id}")))?;
        let mut hyps = decode_utterance(stage1, &alphabet, s.features.view(), cfg, None)?;
        Ok((id.clone(), hyps.swap_remove(0)))
    };
    let ids: Vec<&String> = manifest.entries.iter().map(|e| &e.id).collect();
    if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CascadeError::InvalidConfig(e.to_string()))?;
        pool.install(|| ids.par_iter().map(|id| one(id)).collect())
    } else {
        ids.iter().map(|id| one(id)).collect()
    }
}

/// Re-decodes the training set with the finished first stage, selects the
/// hard subset, and trains the second stage on it starting from the first
/// stage's convolution weights.
pub fn run_cascade_from_stage1(
    cfg: &CascadeConfig,
    stage1: Checkpoint,
    stage1_metrics: Vec<EpochMetrics>,
    manifest: &Manifest,
    data: &Dataset,
    dev: Option<&Dataset>,
) -> Result<CascadeArtifacts, CascadeError> {
    if stage1.config.cnn_layers != cfg.stage2.cnn_layers {
        return Err(CascadeError::InvalidConfig("both stages must share the CNN configuration".into()));
    }
    let decodes = stage1_decodes(&stage1, manifest, data, &cfg.decode, cfg.stage1_schedule.jobs)?;
    let mut decode_cfg = cfg.decode.clone();
    if let Some(f) = cfg.route_fraction {
        decode_cfg.route_threshold = threshold_for_fraction(&decodes, f, decode_cfg.route_direction);
    }
    let log = selection_log(&decodes, &decode_cfg);
    let hard: Vec<String> = match cfg.selection {
        SelectionPolicy::Score => log
            .iter()
            .filter(|r| r.routed_to == RouteDecision::ToCascade)
            .map(|r| r.id.clone())
            .collect(),
        SelectionPolicy::Wrong => {
            let refs: Vec<String> = manifest.entries.iter().map(|e| e.text.clone()).collect();
            select_wrong_samples(&decodes, &refs)
        }
    };
    info!(
        "threshold {:.4}: {} of {} training utterances selected for stage 2",
        decode_cfg.route_threshold,
        hard.len(),
        decodes.len()
    );
    if hard.is_empty() {
        return Err(CascadeError::Degenerate {
            stage1: Box::new(stage1),
            selection_log: log,
        });
    }
    let stage1_cnn_hash = stage1.cnn_hash();
    let fresh = build_model(&cfg.stage2, cfg.seed.wrapping_add(1))?;
    let stage2_init = transfer_cnn_weights(&stage1, fresh, cfg.freeze_cnn)?;
    let stage2_init_cnn_hash = stage2_init.cnn_hash();

    let sub_manifest = Manifest::from_entries(
        manifest
            .entries
            .iter()
            .filter(|e| hard.contains(&e.id))
            .cloned()
            .collect(),
    )?;
    let sub_data = data.subset(&hard)?;
    let plan = cfg.batch.plan(&sub_manifest)?;
    let out = train(stage2_init, &plan, &cfg.stage2_schedule, &sub_data, dev)?;
    Ok(CascadeArtifacts {
        stage1,
        stage2: out.checkpoint,
        route_threshold: decode_cfg.route_threshold,
        route_direction: decode_cfg.route_direction,
        selection_log: log,
        stage1_cnn_hash,
        stage2_init_cnn_hash,
        stage1_metrics,
        stage2_metrics: out.metrics,
    })
}
