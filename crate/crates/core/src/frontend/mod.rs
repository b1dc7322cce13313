//! Audio front end: framing, log-power spectrogram, augmentation and the
//! on-disk formats for audio and features.

mod augment;
mod specfile;
mod wav;

use ndarray::{Array2, Axis};
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use augment::{augment, Augmentation};
pub use specfile::{read_spectrogram, write_spectrogram, SPEC_MAGIC, SPEC_VERSION};
pub use wav::{read_wav, write_wav};

/// Number of spectral features per frame at the default configuration.
pub const FEATURE_DIM: usize = 161;

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("clip of {duration_ms} ms is shorter than one {window_ms} ms window")]
    DurationTooShort { duration_ms: u64, window_ms: u64 },
    #[error("invalid audio: {0}")]
    InvalidAudio(String),
    #[error("invalid augmentation: {0}")]
    InvalidAugmentation(String),
    #[error("invalid frontend config: {0}")]
    InvalidConfig(String),
    #[error("malformed spectrogram file: {0}")]
    MalformedSpectrogram(String),
    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mono PCM audio with samples nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, FrontendError> {
        let clip = Self {
            samples,
            sample_rate,
        };
        clip.validate()?;
        Ok(clip)
    }

    pub fn validate(&self) -> Result<(), FrontendError> {
        if self.sample_rate == 0 {
            return Err(FrontendError::InvalidAudio("sample rate is zero".into()));
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(FrontendError::InvalidAudio(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WindowFunction {
    #[default]
    Hann,
    Rectangular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontendConfig {
    pub window_ms: u32,
    pub hop_ms: u32,
    pub fft_bins: usize,
    pub normalize: bool,
    pub log_floor: f64,
    pub window: WindowFunction,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            window_ms: 20,
            hop_ms: 10,
            fft_bins: FEATURE_DIM,
            normalize: true,
            log_floor: 1e-10,
            window: WindowFunction::Hann,
        }
    }
}

impl FrontendConfig {
    pub fn validate(&self) -> Result<(), FrontendError> {
        if !(self.window_ms > self.hop_ms && self.hop_ms > 0) {
            return Err(FrontendError::InvalidConfig(format!(
                "need window_ms > hop_ms > 0, got {} / {}",
                self.window_ms, self.hop_ms
            )));
        }
        if self.fft_bins < 2 {
            return Err(FrontendError::InvalidConfig("fft_bins must be >= 2".into()));
        }
        if !(self.log_floor > 0.0 && self.log_floor.is_finite()) {
            return Err(FrontendError::InvalidConfig(
                "log_floor must be a positive finite number".into(),
            ));
        }
        Ok(())
    }

    fn window_samples(&self, sample_rate: u32) -> usize {
        (sample_rate as u64 * self.window_ms as u64 / 1000) as usize
    }

    fn hop_samples(&self, sample_rate: u32) -> usize {
        (sample_rate as u64 * self.hop_ms as u64 / 1000) as usize
    }
}

/// Frame-major log-power spectrogram, `frame_count` rows by `feature_dim` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: Array2<f64>,
}

impl Spectrogram {
    pub fn frame_count(&self) -> usize {
        self.frames.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.frames.ncols()
    }
}

/// Converts a duration in seconds to whole milliseconds, absorbing the
/// representation error of values such as `0.29 * 1000`.
pub fn duration_to_ms(duration_s: f64) -> u64 {
    let ms = duration_s * 1000.0;
    let nearest = ms.round();
    if (ms - nearest).abs() < 1e-6 {
        nearest.max(0.0) as u64
    } else {
        ms.floor().max(0.0) as u64
    }
}

/// `N = floor((1000 x - 20) / 10)` for a clip of `x` seconds.
///
/// This is one frame fewer than the usual `(samples - window) / hop + 1`
/// framing; the formula is applied as written.
pub fn frame_count(duration_s: f64) -> Result<usize, FrontendError> {
    frame_count_ms(duration_to_ms(duration_s))
}

pub fn frame_count_ms(duration_ms: u64) -> Result<usize, FrontendError> {
    if duration_ms < 20 {
        return Err(FrontendError::DurationTooShort {
            duration_ms,
            window_ms: 20,
        });
    }
    Ok(((duration_ms - 20) / 10) as usize)
}

fn window_coefficients(kind: WindowFunction, len: usize) -> Vec<f64> {
    match kind {
        WindowFunction::Rectangular => vec![1.0; len],
        // periodic Hann
        WindowFunction::Hann => (0..len)
            .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos())
            .collect(),
    }
}

pub fn compute_spectrogram(
    clip: &AudioClip,
    cfg: &FrontendConfig,
) -> Result<Spectrogram, FrontendError> {
    clip.validate()?;
    cfg.validate()?;
    let win = cfg.window_samples(clip.sample_rate);
    let hop = cfg.hop_samples(clip.sample_rate);
    if win < 2 * (cfg.fft_bins - 1) {
        return Err(FrontendError::InvalidConfig(format!(
            "{} Hz x {} ms gives a {win}-point FFT, too small for {} bins",
            clip.sample_rate, cfg.window_ms, cfg.fft_bins
        )));
    }
    let len = clip.samples.len();
    if len < win {
        return Err(FrontendError::DurationTooShort {
            duration_ms: duration_to_ms(clip.duration_s()),
            window_ms: cfg.window_ms as u64,
        });
    }
    let n_frames = (len - win) / hop;

    let coeffs = window_coefficients(cfg.window, win);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(win);
    let mut frames = Array2::<f64>::zeros((n_frames, cfg.fft_bins));
    let mut buf = vec![Complex64::new(0.0, 0.0); win];
    for (t, mut row) in frames.axis_iter_mut(Axis(0)).enumerate() {
        let start = t * hop;
        for (slot, (s, w)) in buf
            .iter_mut()
            .zip(clip.samples[start..start + win].iter().zip(&coeffs))
        {
            *slot = Complex64::new(s * w, 0.0);
        }
        fft.process(&mut buf);
        for (out, c) in row.iter_mut().zip(&buf) {
            *out = (c.norm_sqr() + cfg.log_floor).ln();
        }
    }
    let mut spec = Spectrogram { frames };
    if cfg.normalize {
        normalize_features(&mut spec.frames);
    }
    Ok(spec)
}

/// Per-feature zero-mean, unit-variance normalization over the frames of
/// one utterance. Constant columns are centred but not scaled.
pub fn normalize_features(frames: &mut Array2<f64>) {
    let n = frames.nrows();
    if n == 0 {
        return;
    }
    for mut col in frames.axis_iter_mut(Axis(1)) {
        let mean = col.sum() / n as f64;
        col.mapv_inplace(|v| v - mean);
        let var = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
        if var > 1e-20 {
            let inv = 1.0 / var.sqrt();
            col.mapv_inplace(|v| v * inv);
        }
    }
}
