//! Command-line entry point. [`run`] parses arguments, dispatches, and maps
//! outcomes to exit codes: 0 success, 1 domain error, 2 usage error.

mod commands;
mod overlay;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::UsageError;
pub use overlay::{cache_dir, load_features, merge, resolve, CACHE_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "cascade-asr", version, about = "CNN-resBiLSTM-CTC speech recognition toolkit")]
pub struct Cli {
    /// Seed for every random choice made by the command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for per-utterance work; 1 is deterministic and serial.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Spectrogram cache directory (overrides the environment variable).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a log spectrogram from a 16-bit mono WAV file.
    Featurize(FeaturizeArgs),
    /// N-gram language model utilities.
    #[command(subcommand)]
    Lm(LmCommand),
    /// Beam-decode utterances with a trained model.
    Decode(DecodeArgs),
    /// Random search for the LM weight on a dev set.
    TuneAlpha(TuneAlphaArgs),
    /// Train an acoustic model.
    Train(TrainArgs),
    /// Two-stage cascade training and inference.
    #[command(subcommand)]
    Cascade(CascadeCommand),
    /// Transcript statistics of a manifest, optionally against a subset.
    Stats(StatsArgs),
    /// Batch planning and padding accounting for a manifest.
    BenchSched(BenchSchedArgs),
    /// Generate the synthetic tone corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Hann,
    Rectangular,
}

#[derive(Debug, Args)]
pub struct FrontendFlags {
    /// Front-end configuration JSON.
    #[arg(long)]
    pub frontend_config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub window: Option<WindowArg>,
    /// Skip per-utterance feature normalization.
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output spectrogram file.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub frontend: FrontendFlags,
    /// Summary JSON destination (standard output if absent).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OovArg {
    Strict,
    Unk,
}

#[derive(Debug, Subcommand)]
pub enum LmCommand {
    /// Score sentences with an ARPA model.
    Score(LmScoreArgs),
    /// Estimate an ARPA model from one sentence per line.
    Estimate(LmEstimateArgs),
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["text", "sentence"])))]
pub struct LmScoreArgs {
    #[arg(long)]
    pub arpa: PathBuf,
    /// File with one sentence per line.
    #[arg(long)]
    pub text: Option<PathBuf>,
    #[arg(long)]
    pub sentence: Vec<String>,
    #[arg(long, value_enum, default_value_t = OovArg::Strict)]
    pub oov: OovArg,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LmEstimateArgs {
    #[arg(long)]
    pub text: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Absolute discount in [0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub discount: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FusionArg {
    PostHoc,
    InBeam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Above,
    Below,
}

#[derive(Debug, Args)]
pub struct DecodeFlags {
    /// Decoder configuration JSON.
    #[arg(long)]
    pub decode_config: Option<PathBuf>,
    #[arg(long)]
    pub beam_width: Option<usize>,
    #[arg(long)]
    pub top_n: Option<usize>,
    /// LM weight.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub word_bonus: Option<f64>,
    #[arg(long, value_enum)]
    pub fusion: Option<FusionArg>,
    /// Per-character probability threshold for routing to stage 2.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["input", "manifest"])))]
pub struct DecodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// One WAV or spectrogram file.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// JSONL manifest of utterances.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub arpa: Option<PathBuf>,
    #[command(flatten)]
    pub decode: DecodeFlags,
    #[command(flatten)]
    pub frontend: FrontendFlags,
    /// JSONL destination (standard output if absent).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TuneAlphaArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dev-set manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub arpa: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, num_args = 2, value_names = ["LOW", "HIGH"], default_values_t = [0.0, 5.0])]
    pub range: Vec<f64>,
    #[command(flatten)]
    pub decode: DecodeFlags,
    #[command(flatten)]
    pub frontend: FrontendFlags,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    ToyStage1,
    ToyStage2,
    FullStage1,
    FullStage2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Fixed,
    Varied,
}

#[derive(Debug, Args)]
pub struct ScheduleFlags {
    /// Training schedule JSON.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Use the three-phase schedule shape scaled to this many epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// First-phase learning rate for the scaled schedule.
    #[arg(long, requires = "epochs")]
    pub lr: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub base_k: usize,
    #[arg(long, default_value_t = 5)]
    pub cap: usize,
    #[arg(long, value_enum, default_value_t = PolicyArg::Varied)]
    pub policy: PolicyArg,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Model configuration JSON, applied over the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PresetArg::ToyStage1)]
    pub preset: PresetArg,
    /// Output symbols (blank is appended).
    #[arg(long)]
    pub alphabet: Option<String>,
    #[arg(long)]
    pub lstm_layers: Option<usize>,
    #[arg(long)]
    pub hidden_size: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Train a second-stage model initialized from this checkpoint's CNN.
    #[arg(long, requires = "init_cnn")]
    pub stage2: bool,
    #[arg(long)]
    pub init_cnn: Option<PathBuf>,
    /// Keep transferred CNN weights fixed.
    #[arg(long)]
    pub freeze_cnn: bool,
    #[command(flatten)]
    pub schedule: ScheduleFlags,
    #[command(flatten)]
    pub frontend: FrontendFlags,
    /// Metrics JSON destination (standard output if absent).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CascadeCommand {
    /// Train both stages and write the artifacts directory.
    Train(CascadeTrainArgs),
    /// Two-stage inference with LM rescoring.
    Infer(CascadeInferArgs),
}

#[derive(Debug, Args)]
pub struct CascadeTrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Whole cascade configuration JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub stage1_config: Option<PathBuf>,
    #[arg(long)]
    pub stage2_config: Option<PathBuf>,
    #[arg(long)]
    pub alphabet: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Pick the threshold so that this fraction of training utterances routes.
    #[arg(long, conflicts_with = "threshold")]
    pub route_fraction: Option<f64>,
    #[arg(long)]
    pub stage1_epochs: Option<usize>,
    #[arg(long)]
    pub stage2_epochs: Option<usize>,
    #[arg(long)]
    pub freeze_cnn: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub frontend: FrontendFlags,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["input", "manifest"])))]
pub struct CascadeInferArgs {
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long)]
    pub arpa: Option<PathBuf>,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub decode: DecodeFlags,
    #[command(flatten)]
    pub frontend: FrontendFlags,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Manifest of a subset to compare against the whole.
    #[arg(long)]
    pub subset: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchSchedArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub base_k: usize,
    #[arg(long, default_value_t = 5)]
    pub cap: usize,
    #[arg(long, value_enum, default_value_t = PolicyArg::Varied)]
    pub policy: PolicyArg,
    /// Cell budget per batch for the varied policy.
    #[arg(long)]
    pub memory_budget: Option<usize>,
    #[arg(long, default_value_t = 21.0)]
    pub max_duration: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Training utterances (200 unless the config file says otherwise).
    #[arg(long)]
    pub train: Option<usize>,
    /// Test utterances (50 unless the config file says otherwise).
    #[arg(long)]
    pub test: Option<usize>,
    /// Synthesis configuration JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the command, and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}
