use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cascade-asr"));
    c.env_remove("CASCADE_ASR_CACHE_DIR").env_remove("RUST_LOG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn check_schema(name: &str, v: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("schemas/{name}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small synthetic corpus, an LM over its training text and a briefly
/// trained model, built once per test binary.
struct Fixture {
    dir: PathBuf,
    train: String,
    test: String,
    lm: String,
    model: String,
}

impl Fixture {
    fn new(dir: PathBuf) -> Self {
        let p = |rel: &str| dir.join(rel).to_str().unwrap().to_string();
        Self {
            train: p("corpus/train.jsonl"),
            test: p("corpus/test.jsonl"),
            lm: p("lm.arpa"),
            model: p("model.ckpt"),
            dir,
        }
    }
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-fixture");
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        let f = Fixture::new(dir);
        let corpus = f.dir.join("corpus");
        ok(&["--seed", "5", "synth", "--out-dir", s(&corpus), "--train", "16", "--test", "4"]);
        ok(&["lm", "estimate", "--text", s(&corpus.join("lm.txt")), "--order", "2", "--out", &f.lm]);
        ok(&[
            "--seed", "1", "train", "--manifest", &f.train, "--out", &f.model, "--epochs", "2", "--lr",
            "3e-3", "--report", s(&f.dir.join("train.json")),
        ]);
        f
    })
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["decode", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--bogus-flag"));
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["cascade", "train", "--help"]).status.code(), Some(0));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn invalid_values_are_usage_errors() {
    let f = fixture();
    let out = run(&["lm", "estimate", "--text", "x", "--out", "y", "--discount", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["decode", "--model", &f.model, "--manifest", &f.test, "--beam-width", "4", "--top-n", "9"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["--jobs", "0", "stats", "--manifest", &f.train]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_failures_exit_one() {
    let out = run(&["stats", "--manifest", "/nonexistent/manifest.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest.jsonl"));
    let out = run(&["decode", "--model", "/nonexistent.ckpt", "--in", "x.wav"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_report_matches_schema() {
    let f = fixture();
    let v: Value = serde_json::from_str(&std::fs::read_to_string(f.dir.join("train.json")).unwrap()).unwrap();
    check_schema("train", &v);
    assert_eq!(v["metrics"].as_array().unwrap().len(), 2);
}

#[test]
fn featurize_writes_expected_frames() {
    let f = fixture();
    let out_spec = f.dir.join("one.spec");
    let wav = f.dir.join("corpus/test-0000.wav");
    let v = stdout_json(&ok(&["featurize", "--in", s(&wav), "--out", s(&out_spec)]));
    check_schema("featurize", &v);
    let x = v["duration_s"].as_f64().unwrap();
    assert_eq!(v["frames"].as_u64().unwrap(), ((1000.0 * x - 20.0) / 10.0).floor() as u64);
    assert_eq!(v["feature_dim"], 161);
    let m = cascade_asr::frontend::read_spectrogram(std::fs::File::open(&out_spec).unwrap()).unwrap();
    assert_eq!(m.nrows() as u64, v["frames"].as_u64().unwrap());
}

#[test]
fn lm_score_matches_schema_and_library() {
    let f = fixture();
    let text = std::fs::read_to_string(f.dir.join("corpus/lm.txt")).unwrap();
    let first = text.lines().next().unwrap().to_string();
    let v = stdout_json(&ok(&["lm", "score", "--arpa", &f.lm, "--sentence", &first]));
    check_schema("lm-score", &v);
    let lm = cascade_asr::lm::ArpaModel::load(&f.lm).unwrap();
    let want = lm.score_text(&first).unwrap().log10_total;
    approx::assert_relative_eq!(v["sentences"][0]["log10_prob"].as_f64().unwrap(), want, max_relative = 1e-12);

    let out = run(&["lm", "score", "--arpa", &f.lm, "--sentence", "qqq"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stats_reports_match_schema() {
    let f = fixture();
    let all = stdout_json(&ok(&["stats", "--manifest", &f.train]));
    check_schema("stats", &all);
    assert_eq!(all["sentences"], 16);
    let cmp = stdout_json(&ok(&["stats", "--manifest", &f.train, "--subset", &f.test]));
    check_schema("stats", &cmp);
    assert_eq!(cmp["all"], all);
}

#[test]
fn bench_sched_report_is_consistent() {
    let f = fixture();
    let out_path = f.dir.join("bench.json");
    ok(&["bench-sched", "--manifest", &f.train, "--base-k", "2", "--cap", "3", "--report", s(&out_path)]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    check_schema("bench-sched", &v);
    let r = &v["report"];
    let total = r["total_cells"].as_u64().unwrap();
    assert_eq!(total, r["useful_cells"].as_u64().unwrap() + r["padded_cells"].as_u64().unwrap());
    let ids: usize = v["batches"].as_array().unwrap().iter().map(|b| b["ids"].as_array().unwrap().len()).sum();
    assert_eq!(ids, 16);
    let max = r["max_batch"].as_u64().unwrap();
    assert!((2..=6).contains(&max));
}

#[test]
fn decode_is_schema_valid_and_independent_of_jobs() {
    let f = fixture();
    let args = |jobs: &'static str| {
        [
            "--jobs", jobs, "decode", "--model", &f.model, "--manifest", &f.test, "--arpa", &f.lm, "--beam-width", "8",
            "--top-n", "4",
        ]
    };
    let one = bin().args(args("1")).output().unwrap();
    let three = bin().args(args("3")).output().unwrap();
    assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, three.stdout);
    let v = stdout_json(&one);
    check_schema("decode", &v);
    assert_eq!(v["summary"]["utterances"], 4);
    for u in v["utterances"].as_array().unwrap() {
        assert!(u["hypotheses"][0]["log_p_lm"].is_number());
    }
}

#[test]
fn decode_config_file_is_overridden_by_flags() {
    let f = fixture();
    let cfg = f.dir.join("decode.json");
    std::fs::write(&cfg, r#"{"beam_width": 4, "top_n": 9}"#).unwrap();
    let base = ["decode", "--model", &f.model, "--manifest", &f.test, "--decode-config", s(&cfg)];
    assert_eq!(run(&base).status.code(), Some(2));
    let mut fixed = base.to_vec();
    fixed.extend(["--top-n", "3"]);
    let v = stdout_json(&ok(&fixed));
    for u in v["utterances"].as_array().unwrap() {
        assert!(u["hypotheses"].as_array().unwrap().len() <= 3);
    }
}

#[test]
fn cache_dir_holds_spectrograms_and_gives_same_output() {
    let f = fixture();
    let cache = f.dir.join("cache");
    let _ = std::fs::remove_dir_all(&cache);
    let args = ["decode", "--model", &f.model, "--manifest", &f.test, "--beam-width", "4", "--top-n", "2"];
    let plain = ok(&args);
    let first = bin().args(args).env("CASCADE_ASR_CACHE_DIR", &cache).output().unwrap();
    let cached = std::fs::read_dir(&cache).unwrap().count();
    assert_eq!(cached, 4);
    let second = bin().args(args).arg("--cache-dir").arg(&cache).output().unwrap();
    assert_eq!(plain.stdout, first.stdout);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn featurized_input_decodes_like_audio() {
    let f = fixture();
    let wav = f.dir.join("corpus/test-0001.wav");
    let spec = f.dir.join("test-0001.spec");
    ok(&["featurize", "--in", s(&wav), "--out", s(&spec)]);
    let decode = |input: &Path| ok(&["decode", "--model", &f.model, "--in", s(input), "--beam-width", "6", "--top-n", "3"]).stdout;
    assert_eq!(decode(&wav), decode(&spec));
}

#[test]
fn tune_alpha_is_seeded() {
    let f = fixture();
    let args = [
        "--seed", "9", "tune-alpha", "--model", &f.model, "--manifest", &f.test, "--arpa", &f.lm,
        "--trials", "6", "--range", "0.5", "3", "--beam-width", "6", "--top-n", "3",
    ];
    let a = ok(&args);
    let b = ok(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    check_schema("tune-alpha", &v);
    let trials = v["trials"].as_array().unwrap();
    assert_eq!(trials.len(), 6);
    for t in trials {
        let alpha = t[0].as_f64().unwrap();
        assert!((0.5..=3.0).contains(&alpha));
    }
}

#[test]
fn cascade_train_and_infer() {
    let f = fixture();
    let dir = f.dir.join("cascade");
    let report = f.dir.join("cascade-train.json");
    ok(&[
        "--seed", "2", "cascade", "train", "--manifest", &f.train, "--out-dir", s(&dir), "--stage1-epochs", "2",
        "--stage2-epochs", "1", "--route-fraction", "0.5", "--report", s(&report),
    ]);
    let t: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    check_schema("cascade-train", &t);
    assert_eq!(t["stage1_cnn_hash"], t["stage2_init_cnn_hash"]);
    assert_eq!(t["training_utterances"], 16);
    for name in ["stage1.ckpt", "stage2.ckpt", "cascade.json"] {
        assert!(dir.join(name).exists(), "{name}");
    }

    let v = stdout_json(&ok(&[
        "cascade", "infer", "--dir", s(&dir), "--manifest", &f.test, "--arpa", &f.lm, "--beam-width", "8",
        "--top-n", "4",
    ]));
    check_schema("cascade-infer", &v);
    let routed = v["utterances"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|u| u["routed_to"] == "to_cascade")
        .count();
    assert_eq!(v["stage2_evaluations"].as_u64().unwrap() as usize, routed);
}

#[test]
fn degenerate_cascade_keeps_stage1() {
    let f = fixture();
    let dir = f.dir.join("degenerate");
    let out = run(&[
        "cascade", "train", "--manifest", &f.train, "--out-dir", s(&dir), "--stage1-epochs", "1",
        "--stage2-epochs", "1", "--threshold", "1.0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.join("stage1.ckpt").exists());
    let log: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("selection.json")).unwrap()).unwrap();
    assert_eq!(log.as_array().unwrap().len(), 16);
}
