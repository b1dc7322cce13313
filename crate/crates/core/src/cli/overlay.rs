use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::frontend::{compute_spectrogram, read_spectrogram, read_wav, write_spectrogram, FrontendConfig};

/// Environment variable naming a directory for cached spectrograms.
pub const CACHE_DIR_ENV: &str = "CASCADE_ASR_CACHE_DIR";

/// Recursively overwrites keys of `base` with those of `top`.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// `defaults`, overlaid with the JSON object in `file` if given, then with
/// `flags` (a JSON object of the flags the user actually passed).
pub fn resolve<T: Serialize + DeserializeOwned>(defaults: &T, file: Option<&Path>, flags: Value) -> Result<T> {
    let mut v = serde_json::to_value(defaults)?;
    if let Some(p) = file {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
        let top: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
        merge(&mut v, top);
    }
    merge(&mut v, flags);
    serde_json::from_value(v).context("resolving configuration")
}

/// A JSON object holding only the `Some` entries.
pub fn flag_object(pairs: Vec<(&str, Option<Value>)>) -> Value {
    Value::Object(
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect(),
    )
}

pub fn cache_dir(flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
}

/// Features for a `.spec` file or a WAV file, going through the cache
/// directory for WAV input when one is configured. WAV features are rounded
/// to the f32 precision of the spectrogram file format, so a clip decodes
/// the same whether it arrives as audio, from the cache, or featurized.
pub fn load_features(path: &Path, fe: &FrontendConfig, cache: Option<&Path>) -> Result<Array2<f64>> {
    if path.extension().is_some_and(|x| x == "spec") {
        let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        return Ok(read_spectrogram(std::io::BufReader::new(f))?);
    }
    let compute = || -> Result<Array2<f64>> {
        let clip = read_wav(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(compute_spectrogram(&clip, fe)?.frames.mapv(|v| v as f32 as f64))
    };
    let Some(dir) = cache else {
        return compute();
    };
    let mut h = Sha256::new();
    h.update(std::fs::read(path).with_context(|| format!("reading {}", path.display()))?);
    h.update(serde_json::to_vec(fe)?);
    let key: String = h.finalize().iter().take(16).map(|b| format!("{b:02x}")).collect();
    let cached = dir.join(format!("{key}.spec"));
    if let Ok(f) = std::fs::File::open(&cached) {
        if let Ok(frames) = read_spectrogram(std::io::BufReader::new(f)) {
            return Ok(frames);
        }
    }
    let frames = compute()?;
    std::fs::create_dir_all(dir)?;
    write_spectrogram(std::fs::File::create(&cached)?, &frames)?;
    Ok(frames)
}
