//! Pilot for the synthetic end-to-end run: trains the toy first stage on the
//! tone corpus and prints per-epoch loss and final test CER.
//!
//! cargo run --release --example pilot -- [epochs] [base_lr] [seed]

use std::time::Instant;

use cascade_asr::cascade::{evaluate_corpus, TwoStageDecoder};
use cascade_asr::decode::DecodeConfig;
use cascade_asr::frontend::{compute_spectrogram, FrontendConfig};
use cascade_asr::nnet::{build_model, train, Dataset, ModelConfig, Sample, TrainSchedule};
use cascade_asr::sched::plan_varied;
use cascade_asr::synth::{generate_corpus, manifest_for, SynthConfig, SynthUtterance, SYNTH_ALPHABET};

fn dataset(utts: &[SynthUtterance]) -> Dataset {
    let alphabet = cascade_asr::ctc::Alphabet::with_blank_last(SYNTH_ALPHABET).unwrap();
    let fe = FrontendConfig::default();
    Dataset::new(
        utts.iter()
            .map(|u| Sample {
                id: u.id.clone(),
                features: compute_spectrogram(&u.clip, &fe).unwrap().frames,
                labels: alphabet.encode(&u.text).unwrap(),
                text: u.text.clone(),
            })
            .collect(),
    )
    .unwrap()
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).map_or(24, |s| s.parse().unwrap());
    let lr: f64 = args.get(2).map_or(3e-3, |s| s.parse().unwrap());
    let seed: u64 = args.get(3).map_or(1, |s| s.parse().unwrap());
    let t0 = Instant::now();
    let corpus = generate_corpus(&SynthConfig::default(), seed);
    let train_set = dataset(&corpus.train);
    let test_set = dataset(&corpus.test);
    let manifest = manifest_for(&corpus.train);
    let plan = plan_varied(&manifest, 4, 5, None).unwrap();
    let sched = TrainSchedule {
        seed,
        patience: None,
        ..TrainSchedule::scaled(epochs, lr)
    };
    let cfg = ModelConfig::toy_stage1(SYNTH_ALPHABET);
    let out = train(build_model(&cfg, seed).unwrap(), &plan, &sched, &train_set, None).unwrap();
    let dec = DecodeConfig {
        beam_width: 16,
        top_n: 8,
        route_threshold: 1.0,
        ..Default::default()
    };
    let d = TwoStageDecoder::stage1_only(&out.checkpoint, dec).unwrap();
    let report = evaluate_corpus(&d, &test_set, None).unwrap();
    println!(
        "epochs {epochs} lr {lr} seed {seed}: test CER {:.4} WER {:.4} in {:.1}s",
        report.all.cer,
        report.all.wer,
        t0.elapsed().as_secs_f64()
    );
    for u in report.utterances.iter().take(5) {
        println!("  {:?} -> {:?}", u.reference, u.transcript);
    }
}
