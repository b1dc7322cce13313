use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::overlay::{cache_dir, flag_object, load_features, resolve};
use super::*;
use crate::cascade::{
    run_cascade, CascadeArtifacts, CascadeConfig, CascadeError, Inference, TwoStageDecoder,
    STAGE1_FILE,
};
use crate::decode::{tune_alpha, DecodeConfig, ErrorTally};
use crate::frontend::{compute_spectrogram, read_wav, write_spectrogram, FrontendConfig};
use crate::lm::{estimate_arpa, ArpaModel, OovPolicy, MAX_ORDER};
use crate::nnet::{build_model, train, transfer_cnn_weights, Checkpoint, Dataset, ModelConfig, TrainSchedule};
use crate::sched::{
    load_manifest, padding_report, plan_sorted_fixed, plan_varied, BatchPolicy, Manifest, DEFAULT_MAX_DURATION_S,
};
use crate::synth::{generate_corpus, write_corpus, SynthConfig, SYNTH_ALPHABET};

/// An invalid combination of arguments that clap cannot express.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub(super) fn dispatch(cli: &Cli) -> Result<()> {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    if cli.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    info!("seed {} jobs {}", cli.seed, cli.jobs);
    match &cli.command {
        Command::Featurize(a) => featurize(a),
        Command::Lm(LmCommand::Score(a)) => lm_score(a),
        Command::Lm(LmCommand::Estimate(a)) => lm_estimate(a),
        Command::Decode(a) => decode(cli, a),
        Command::TuneAlpha(a) => tune(cli, a),
        Command::Train(a) => train_model(cli, a),
        Command::Cascade(CascadeCommand::Train(a)) => cascade_train(cli, a),
        Command::Cascade(CascadeCommand::Infer(a)) => cascade_infer(cli, a),
        Command::Stats(a) => stats(a),
        Command::BenchSched(a) => bench_sched(a),
        Command::Synth(a) => synth(cli, a),
    }
}

/// Pretty JSON to `dest`, or to standard output.
fn emit<T: Serialize>(value: &T, dest: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match dest {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => Ok(r?),
            }
        }
    }
}

fn log_config<T: Serialize>(what: &str, v: &T) {
    info!("{what}: {}", serde_json::to_string(v).unwrap_or_default());
}

fn frontend_config(f: &FrontendFlags) -> Result<FrontendConfig> {
    let window = f.window.map(|w| {
        json!(match w {
            WindowArg::Hann => "hann",
            WindowArg::Rectangular => "rectangular",
        })
    });
    let flags = flag_object(vec![("window", window), ("normalize", f.no_normalize.then_some(json!(false)))]);
    let cfg: FrontendConfig = resolve(&FrontendConfig::default(), f.frontend_config.as_deref(), flags)?;
    cfg.validate()?;
    log_config("frontend", &cfg);
    Ok(cfg)
}

fn decode_config(base: &DecodeConfig, f: &DecodeFlags) -> Result<DecodeConfig> {
    let fusion = f.fusion.map(|x| {
        json!(match x {
            FusionArg::PostHoc => "post_hoc",
            FusionArg::InBeam => "in_beam",
        })
    });
    let direction = f.direction.map(|x| {
        json!(match x {
            DirectionArg::Above => "above",
            DirectionArg::Below => "below",
        })
    });
    let flags = flag_object(vec![
        ("beam_width", f.beam_width.map(|v| json!(v))),
        ("top_n", f.top_n.map(|v| json!(v))),
        ("alpha", f.alpha.map(|v| json!(v))),
        ("word_bonus", f.word_bonus.map(|v| json!(v))),
        ("fusion", fusion),
        ("route_threshold", f.threshold.map(|v| json!(v))),
        ("route_direction", direction),
    ]);
    let cfg: DecodeConfig = resolve(base, f.decode_config.as_deref(), flags)?;
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    log_config("decode", &cfg);
    Ok(cfg)
}

fn load_lm(path: &Path) -> Result<ArpaModel> {
    ArpaModel::load(path).map_err(|e| anyhow!("loading {}: {e}", path.display()))
}

fn manifest_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn manifest(path: &Path, max_duration: f64) -> Result<Manifest> {
    let m = load_manifest(path, max_duration).with_context(|| format!("loading {}", path.display()))?;
    if m.excluded > 0 {
        info!("{} entries over {max_duration} s excluded", m.excluded);
    }
    Ok(m)
}

/// Utterances to decode: `(id, features, reference)`.
type Utterance = (String, Array2<f64>, Option<String>);

fn utterances(
    input: Option<&Path>,
    manifest_path: Option<&Path>,
    fe: &FrontendConfig,
    cache: Option<&Path>,
) -> Result<Vec<Utterance>> {
    if let Some(p) = input {
        let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        return Ok(vec![(id, load_features(p, fe, cache)?, None)]);
    }
    let path = manifest_path.ok_or_else(|| usage("give --in or --manifest"))?;
    let base = manifest_dir(path);
    manifest(path, f64::INFINITY)?
        .entries
        .into_iter()
        .map(|e| {
            let f = load_features(&base.join(&e.audio), fe, cache)?;
            Ok((e.id, f, Some(e.text)))
        })
        .collect()
}

fn featurize(a: &FeaturizeArgs) -> Result<()> {
    let fe = frontend_config(&a.frontend)?;
    let clip = read_wav(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let spec = compute_spectrogram(&clip, &fe)?;
    let f = std::fs::File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_spectrogram(std::io::BufWriter::new(f), &spec.frames)?;
    emit(
        &json!({
            "input": a.input,
            "output": a.out,
            "sample_rate": clip.sample_rate,
            "duration_s": clip.duration_s(),
            "frames": spec.frame_count(),
            "feature_dim": spec.feature_dim(),
        }),
        a.report.as_deref(),
    )
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

fn lm_score(a: &LmScoreArgs) -> Result<()> {
    let policy = match a.oov {
        OovArg::Strict => OovPolicy::Strict,
        OovArg::Unk => OovPolicy::MapToUnk,
    };
    let lm = load_lm(&a.arpa)?.with_oov_policy(policy);
    let mut sentences = a.sentence.clone();
    if let Some(p) = &a.text {
        sentences.extend(read_lines(p)?);
    }
    let mut rows = Vec::with_capacity(sentences.len());
    let mut total = 0.0;
    for s in &sentences {
        let sc = lm.score_text(s).with_context(|| format!("scoring {s:?}"))?;
        total += sc.log10_total;
        rows.push(json!({
            "sentence": s,
            "log10_prob": sc.log10_total,
            "ln_prob": sc.log10_total * std::f64::consts::LN_10,
            "oov_count": sc.oov_count,
        }));
    }
    emit(
        &json!({"order": lm.order(), "sentences": rows, "total_log10_prob": total}),
        a.report.as_deref(),
    )
}

fn lm_estimate(a: &LmEstimateArgs) -> Result<()> {
    if !(1..=MAX_ORDER).contains(&a.order) {
        return Err(usage(format!("--order must lie in 1..={MAX_ORDER}")));
    }
    if !(0.0..1.0).contains(&a.discount) {
        return Err(usage("--discount must lie in [0, 1)"));
    }
    let sentences = read_lines(&a.text)?;
    if sentences.is_empty() {
        bail!("{} has no sentences", a.text.display());
    }
    let lm = estimate_arpa(&sentences, a.order, a.discount);
    std::fs::write(&a.out, lm.to_arpa()).with_context(|| format!("writing {}", a.out.display()))?;
    info!("wrote order-{} model over {} words", lm.order(), lm.vocab_size());
    Ok(())
}

#[derive(Serialize)]
struct DecodeRow {
    id: String,
    transcript: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<String>,
    stage1_transcript: String,
    routed_to: crate::decode::RouteDecision,
    normalized_score: Option<f64>,
    used_stage2: bool,
    hypotheses: Vec<crate::decode::BeamHypothesis>,
}

#[derive(Serialize, Default)]
struct Summary {
    utterances: usize,
    wer: Option<f64>,
    cer: Option<f64>,
}

fn decode_rows(
    decoder: &TwoStageDecoder<'_>,
    utts: &[Utterance],
    lm: Option<&ArpaModel>,
    jobs: usize,
) -> Result<(Vec<DecodeRow>, Summary)> {
    let one = |(id, f, r): &Utterance| -> Result<DecodeRow, CascadeError> {
        let inf: Inference = decoder.infer(f.view(), lm)?;
        Ok(DecodeRow {
            id: id.clone(),
            transcript: inf.transcript,
            reference: r.clone(),
            stage1_transcript: inf.stage1_transcript,
            routed_to: inf.route.decision,
            normalized_score: inf.route.normalized_score,
            used_stage2: inf.used_stage2,
            hypotheses: inf.hypotheses,
        })
    };
    let rows = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
        pool.install(|| utts.par_iter().map(one).collect::<Result<Vec<_>, _>>())?
    } else {
        utts.iter().map(one).collect::<Result<Vec<_>, _>>()?
    };
    let (mut words, mut chars) = (ErrorTally::default(), ErrorTally::default());
    let mut scored = false;
    for r in &rows {
        if let Some(reference) = &r.reference {
            words.add_words(&r.transcript, reference);
            chars.add_chars(&r.transcript, reference);
            scored = true;
        }
    }
    let summary = Summary {
        utterances: rows.len(),
        wer: scored.then(|| words.rate()),
        cer: scored.then(|| chars.rate()),
    };
    Ok((rows, summary))
}

fn decode(cli: &Cli, a: &DecodeArgs) -> Result<()> {
    let fe = frontend_config(&a.frontend)?;
    let cfg = decode_config(&DecodeConfig::default(), &a.decode)?;
    let ckpt = Checkpoint::load(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let lm = a.arpa.as_deref().map(load_lm).transpose()?;
    let cache = cache_dir(cli.cache_dir.as_deref());
    let utts = utterances(a.input.as_deref(), a.manifest.as_deref(), &fe, cache.as_deref())?;
    let decoder = TwoStageDecoder::stage1_only(&ckpt, cfg)?;
    let (rows, summary) = decode_rows(&decoder, &utts, lm.as_ref(), cli.jobs)?;
    emit(&json!({"summary": summary, "utterances": rows}), a.report.as_deref())
}

fn tune(cli: &Cli, a: &TuneAlphaArgs) -> Result<()> {
    let (lo, hi) = (a.range[0], a.range[1]);
    if !(0.0 <= lo && lo <= hi && hi <= 5.0) {
        return Err(usage("--range must satisfy 0 <= LOW <= HIGH <= 5"));
    }
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let fe = frontend_config(&a.frontend)?;
    let cfg = decode_config(&DecodeConfig::default(), &a.decode)?;
    let ckpt = Checkpoint::load(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let alphabet = ckpt.config.alphabet()?;
    let lm = load_lm(&a.arpa)?;
    let cache = cache_dir(cli.cache_dir.as_deref());
    let mut dev = Vec::new();
    for (id, f, r) in utterances(None, Some(&a.manifest), &fe, cache.as_deref())? {
        match ckpt.posteriors(f.view()) {
            Ok(p) => dev.push((p, r.unwrap_or_default())),
            Err(crate::nnet::NnetError::InputTooShort { .. }) => warn!("{id} is too short for the model; skipped"),
            Err(e) => return Err(e.into()),
        }
    }
    let result = tune_alpha(&dev, &alphabet, &lm, &cfg, a.trials, (lo, hi), cli.seed)?;
    info!("alpha {:.4} gives WER {:.4}", result.alpha, result.wer);
    emit(&result, a.report.as_deref())
}

fn default_alphabet(preset: PresetArg) -> &'static str {
    match preset {
        PresetArg::ToyStage1 | PresetArg::ToyStage2 => SYNTH_ALPHABET,
        PresetArg::FullStage1 | PresetArg::FullStage2 => "abcdefghijklmnopqrstuvwxyz '",
    }
}

fn model_config(a: &TrainArgs) -> Result<ModelConfig> {
    let alphabet = a.alphabet.as_deref().unwrap_or(default_alphabet(a.preset));
    let mut base = match a.preset {
        PresetArg::ToyStage1 => ModelConfig::toy_stage1(alphabet),
        PresetArg::ToyStage2 => ModelConfig::toy_stage2(alphabet),
        PresetArg::FullStage1 => ModelConfig::full_stage1(),
        PresetArg::FullStage2 => ModelConfig::full_stage2(),
    };
    base.alphabet = alphabet.to_string();
    let flags = flag_object(vec![
        ("lstm_layers", a.lstm_layers.map(|v| json!(v))),
        ("hidden_size", a.hidden_size.map(|v| json!(v))),
    ]);
    let cfg: ModelConfig = resolve(&base, a.config.as_deref(), flags)?;
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn schedule(cli: &Cli, f: &ScheduleFlags) -> Result<TrainSchedule> {
    let base = match f.epochs {
        Some(n) => TrainSchedule::scaled(n, f.lr.unwrap_or(5e-4)),
        None => TrainSchedule::standard(),
    };
    let mut flags = flag_object(vec![
        ("patience", f.patience.map(|v| json!(v))),
        ("clip_norm", f.clip_norm.map(|v| json!(v))),
    ]);
    flags["seed"] = json!(cli.seed);
    flags["jobs"] = json!(cli.jobs);
    let mut s: TrainSchedule = resolve(&base, f.schedule.as_deref(), flags)?;
    if f.epochs.is_some() && f.schedule.is_some() {
        s.phases = base.phases;
    }
    s.validate().map_err(|e| usage(e.to_string()))?;
    Ok(s)
}

fn batch_plan(m: &Manifest, f: &ScheduleFlags) -> Result<crate::sched::BatchPlan> {
    Ok(match f.policy {
        PolicyArg::Fixed => plan_sorted_fixed(m, f.base_k)?,
        PolicyArg::Varied => plan_varied(m, f.base_k, f.cap, None)?,
    })
}

fn train_model(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let fe = frontend_config(&a.frontend)?;
    let cfg = model_config(a)?;
    let sched = schedule(cli, &a.schedule)?;
    log_config("model", &cfg);
    log_config("schedule", &sched);
    if a.freeze_cnn && !a.stage2 {
        return Err(usage("--freeze-cnn needs --stage2 and --init-cnn"));
    }
    let m = manifest(&a.manifest, DEFAULT_MAX_DURATION_S)?;
    let alphabet = cfg.alphabet()?;
    let data = Dataset::from_manifest(&m, &manifest_dir(&a.manifest), &alphabet, &fe)?;
    let dev = match &a.dev {
        Some(p) => {
            let dm = manifest(p, DEFAULT_MAX_DURATION_S)?;
            Some(Dataset::from_manifest(&dm, &manifest_dir(p), &alphabet, &fe)?)
        }
        None => None,
    };
    let mut init = build_model(&cfg, cli.seed)?;
    if a.stage2 {
        let path = a.init_cnn.as_ref().expect("clap requires --init-cnn");
        let from = Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
        init = transfer_cnn_weights(&from, init, a.freeze_cnn)?;
        info!("CNN weights transferred from {} ({})", path.display(), init.cnn_hash());
    }
    let plan = batch_plan(&m, &a.schedule)?;
    let out = train(init, &plan, &sched, &data, dev.as_ref())?;
    out.checkpoint
        .save(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    emit(
        &json!({
            "checkpoint": a.out,
            "best_epoch": out.best_epoch,
            "stopped_early": out.stopped_early,
            "cnn_hash": out.checkpoint.cnn_hash(),
            "parameters": out.checkpoint.params.count(),
            "excluded": m.excluded,
            "metrics": out.metrics,
        }),
        a.report.as_deref(),
    )
}

fn cascade_config(cli: &Cli, a: &CascadeTrainArgs) -> Result<CascadeConfig> {
    let alphabet = a.alphabet.as_deref().unwrap_or(SYNTH_ALPHABET);
    let mut cfg: CascadeConfig = resolve(&CascadeConfig::toy(alphabet), a.config.as_deref(), json!({}))?;
    if let Some(p) = &a.stage1_config {
        cfg.stage1 = resolve(&cfg.stage1, Some(p), json!({}))?;
    }
    if let Some(p) = &a.stage2_config {
        cfg.stage2 = resolve(&cfg.stage2, Some(p), json!({}))?;
    }
    if let Some(n) = a.stage1_epochs {
        cfg.stage1_schedule.phases = TrainSchedule::scaled(n, cfg.stage1_schedule.phases[0].lr).phases;
    }
    if let Some(n) = a.stage2_epochs {
        cfg.stage2_schedule.phases = TrainSchedule::scaled(n, cfg.stage2_schedule.phases[0].lr).phases;
    }
    if let Some(t) = a.threshold {
        cfg.decode.route_threshold = t;
        cfg.route_fraction = None;
    }
    if let Some(f) = a.route_fraction {
        if !(0.0..=1.0).contains(&f) {
            return Err(usage("--route-fraction must lie in [0, 1]"));
        }
        cfg.route_fraction = Some(f);
    }
    cfg.freeze_cnn |= a.freeze_cnn;
    cfg.seed = cli.seed;
    for s in [&mut cfg.stage1_schedule, &mut cfg.stage2_schedule] {
        s.seed = cli.seed;
        s.jobs = cli.jobs;
        s.validate().map_err(|e| usage(e.to_string()))?;
    }
    cfg.stage1.validate().map_err(|e| usage(e.to_string()))?;
    cfg.stage2.validate().map_err(|e| usage(e.to_string()))?;
    cfg.decode.validate().map_err(|e| usage(e.to_string()))?;
    if cfg.stage1.alphabet != cfg.stage2.alphabet {
        return Err(usage("both stages must use the same alphabet"));
    }
    Ok(cfg)
}

fn cascade_train(cli: &Cli, a: &CascadeTrainArgs) -> Result<()> {
    let fe = frontend_config(&a.frontend)?;
    let cfg = cascade_config(cli, a)?;
    log_config("cascade", &cfg);
    let m = manifest(&a.manifest, DEFAULT_MAX_DURATION_S)?;
    let alphabet = cfg.stage1.alphabet()?;
    let data = Dataset::from_manifest(&m, &manifest_dir(&a.manifest), &alphabet, &fe)?;
    let art = match run_cascade(&cfg, &m, &data, None) {
        Ok(art) => art,
        Err(CascadeError::Degenerate { stage1, selection_log }) => {
            std::fs::create_dir_all(&a.out_dir)?;
            stage1.save(a.out_dir.join(STAGE1_FILE))?;
            emit(&selection_log, Some(&a.out_dir.join("selection.json")))?;
            bail!(
                "no training utterance routes to stage 2 at this threshold; stage 1 and the selection log \
                 were written to {}",
                a.out_dir.display()
            );
        }
        Err(e) => return Err(e.into()),
    };
    art.save(&a.out_dir)?;
    let selected = art
        .selection_log
        .iter()
        .filter(|r| r.routed_to == crate::decode::RouteDecision::ToCascade)
        .count();
    emit(
        &json!({
            "out_dir": a.out_dir,
            "route_threshold": art.route_threshold,
            "route_direction": art.route_direction,
            "training_utterances": art.selection_log.len(),
            "selected": selected,
            "stage1_cnn_hash": art.stage1_cnn_hash,
            "stage2_init_cnn_hash": art.stage2_init_cnn_hash,
            "stage1_epochs": art.stage1_metrics.len(),
            "stage2_epochs": art.stage2_metrics.len(),
        }),
        a.report.as_deref(),
    )
}

fn cascade_infer(cli: &Cli, a: &CascadeInferArgs) -> Result<()> {
    let fe = frontend_config(&a.frontend)?;
    let art = CascadeArtifacts::load(&a.dir).with_context(|| format!("loading {}", a.dir.display()))?;
    let cfg = decode_config(&art.decode_config(&DecodeConfig::default()), &a.decode)?;
    let lm = a.arpa.as_deref().map(load_lm).transpose()?;
    let cache = cache_dir(cli.cache_dir.as_deref());
    let utts = utterances(a.input.as_deref(), a.manifest.as_deref(), &fe, cache.as_deref())?;
    let decoder = TwoStageDecoder::new(&art, cfg)?;
    let (rows, summary) = decode_rows(&decoder, &utts, lm.as_ref(), cli.jobs)?;
    emit(
        &json!({
            "summary": summary,
            "stage2_evaluations": decoder.stage2_evaluations(),
            "utterances": rows,
        }),
        a.report.as_deref(),
    )
}

fn text_durations(m: &Manifest) -> Vec<(String, f64)> {
    m.entries.iter().map(|e| (e.text.clone(), e.duration)).collect()
}

fn stats(a: &StatsArgs) -> Result<()> {
    let all = crate::cascade::compute_sample_stats(&text_durations(&manifest(&a.manifest, f64::INFINITY)?))?;
    match &a.subset {
        Some(p) => {
            let sub = crate::cascade::compute_sample_stats(&text_durations(&manifest(p, f64::INFINITY)?))?;
            emit(&crate::cascade::compare_stats(sub, all), a.out.as_deref())
        }
        None => emit(&all, a.out.as_deref()),
    }
}

fn bench_sched(a: &BenchSchedArgs) -> Result<()> {
    let m = manifest(&a.manifest, a.max_duration)?;
    if m.is_empty() {
        bail!("{} has no usable entries", a.manifest.display());
    }
    let plan = match a.policy {
        PolicyArg::Fixed => plan_sorted_fixed(&m, a.base_k)?,
        PolicyArg::Varied => plan_varied(&m, a.base_k, a.cap, a.memory_budget)?,
    };
    let report = padding_report(&plan);
    let baseline = padding_report(&plan_sorted_fixed(&m, a.base_k)?);
    let reduction = 1.0 - report.estimated_epoch_cost as f64 / baseline.estimated_epoch_cost.max(1) as f64;
    emit(
        &json!({
            "policy": match plan.policy { BatchPolicy::Fixed => "fixed", BatchPolicy::Varied => "varied" },
            "base_k": a.base_k,
            "cap_ratio": a.cap,
            "entries": m.len(),
            "excluded": m.excluded,
            "exclusion_fraction": m.exclusion_fraction(),
            "report": report,
            "fixed_baseline": baseline,
            "epoch_cost_reduction": reduction,
            "batches": plan.batches,
        }),
        a.report.as_deref(),
    )
}

fn synth(cli: &Cli, a: &SynthArgs) -> Result<()> {
    let flags = flag_object(vec![
        ("train_utterances", a.train.map(|v| json!(v))),
        ("test_utterances", a.test.map(|v| json!(v))),
    ]);
    let cfg: SynthConfig = resolve(&SynthConfig::default(), a.config.as_deref(), flags)?;
    log_config("synth", &cfg);
    let corpus = generate_corpus(&cfg, cli.seed);
    write_corpus(&corpus, &a.out_dir)?;
    emit(
        &json!({
            "out_dir": a.out_dir,
            "train": corpus.train.len(),
            "test": corpus.test.len(),
            "alphabet": SYNTH_ALPHABET,
        }),
        None,
    )
}
