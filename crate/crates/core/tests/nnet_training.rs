use cascade_asr::ctc::LabelSequence;
use cascade_asr::nnet::{
    build_model, sample_loss, train, Checkpoint, CnnLayerConfig, Dataset, LrPhase, ModelConfig, Sample,
    TrainSchedule,
};
use cascade_asr::sched::{plan_sorted_fixed, Manifest, ManifestEntry};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config() -> ModelConfig {
    ModelConfig {
        input_features: 16,
        cnn_layers: vec![CnnLayerConfig {
            kernel_time: 3,
            kernel_freq: 5,
            stride_time: 1,
            stride_freq: 2,
            channels: 4,
        }],
        lstm_layers: 2,
        hidden_size: 16,
        residual: true,
        residual_span: 1,
        combine_projection: true,
        alphabet: "abcd".into(),
        relu_clip: 20.0,
    }
}

fn noisy(frames: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((frames, 16), |_| rng.gen_range(-1.0..1.0))
}

fn corpus() -> (Dataset, Manifest) {
    let targets = [vec![0, 1], vec![2], vec![3, 3], vec![1, 0, 2]];
    let samples: Vec<Sample> = targets
        .iter()
        .enumerate()
        .map(|(i, t)| Sample {
            id: format!("m{i}"),
            features: noisy(12 + 2 * i, 40 + i as u64),
            labels: LabelSequence::new(t.clone()),
            text: String::new(),
        })
        .collect();
    let manifest = Manifest::from_entries(
        samples
            .iter()
            .map(|s| ManifestEntry {
                id: s.id.clone(),
                audio: String::new(),
                text: String::new(),
                duration: (s.features.nrows() * 10 + 20) as f64 / 1000.0,
            })
            .collect(),
    )
    .unwrap();
    (Dataset::new(samples).unwrap(), manifest)
}

fn schedule(epochs: usize, lr: f64) -> TrainSchedule {
    TrainSchedule {
        phases: vec![LrPhase { epochs, lr }],
        patience: None,
        seed: 9,
        ..TrainSchedule::standard()
    }
}

#[test]
fn memorizes_four_samples_in_fifty_epochs() {
    let (data, m) = corpus();
    let plan = plan_sorted_fixed(&m, 1).unwrap();
    let out = train(build_model(&config(), 1).unwrap(), &plan, &schedule(50, 1e-2), &data, None).unwrap();
    for s in data.samples() {
        let l = sample_loss(&out.checkpoint, s, None).unwrap().unwrap();
        assert!(l < 0.1, "{}: loss {l}", s.id);
    }
    assert_eq!(out.metrics.len(), 50);
}

#[test]
fn checkpoints_reproduce_through_files() {
    let (data, m) = corpus();
    let plan = plan_sorted_fixed(&m, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for run in 0..2 {
        let out = train(build_model(&config(), 5).unwrap(), &plan, &schedule(3, 3e-3), &data, None).unwrap();
        let path = dir.path().join(format!("run{run}.ckpt"));
        out.checkpoint.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, out.checkpoint);
        bytes.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn early_stopping_keeps_best_dev_epoch() {
    let (data, m) = corpus();
    let plan = plan_sorted_fixed(&m, 4).unwrap();
    // a dev set with contradictory targets stops improving quickly
    let dev = Dataset::new(
        data.samples()
            .iter()
            .map(|s| Sample {
                labels: LabelSequence::new(vec![3, 2, 1]),
                ..s.clone()
            })
            .collect(),
    )
    .unwrap();
    let sched = TrainSchedule {
        patience: Some(2),
        ..schedule(40, 2e-2)
    };
    let out = train(build_model(&config(), 2).unwrap(), &plan, &sched, &data, Some(&dev)).unwrap();
    assert!(out.stopped_early);
    let best = out
        .metrics
        .iter()
        .min_by(|a, b| a.dev_loss.unwrap().total_cmp(&b.dev_loss.unwrap()))
        .unwrap();
    assert_eq!(out.best_epoch, best.epoch);
    assert_eq!(out.checkpoint.epoch as usize, best.epoch);
    assert_eq!(out.metrics.len(), best.epoch + 2);
}
