use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{AudioClip, FrontendError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Augmentation {
    /// Resample by linear interpolation; duration scales by `1 / factor`.
    Speed(f64),
    /// Additive white Gaussian noise at the given SNR in dB.
    Noise { snr_db: f64 },
}

pub fn augment(clip: &AudioClip, kind: Augmentation, seed: u64) -> Result<AudioClip, FrontendError> {
    clip.validate()?;
    match kind {
        Augmentation::Speed(factor) => {
            if !(0.9..=1.1).contains(&factor) {
                return Err(FrontendError::InvalidAugmentation(format!(
                    "speed factor {factor} outside [0.9, 1.1]"
                )));
            }
            Ok(AudioClip {
                samples: resample_linear(&clip.samples, factor),
                sample_rate: clip.sample_rate,
            })
        }
        Augmentation::Noise { snr_db } => {
            if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
                return Err(FrontendError::InvalidAugmentation(format!(
                    "SNR {snr_db} dB"
                )));
            }
            let n = clip.samples.len().max(1) as f64;
            let power = clip.samples.iter().map(|s| s * s).sum::<f64>() / n;
            let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
            if sigma == 0.0 {
                return Ok(clip.clone());
            }
            let normal = Normal::new(0.0, sigma)
                .map_err(|e| FrontendError::InvalidAugmentation(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples = clip
                .samples
                .iter()
                .map(|s| s + normal.sample(&mut rng))
                .collect();
            Ok(AudioClip {
                samples,
                sample_rate: clip.sample_rate,
            })
        }
    }
}

fn resample_linear(samples: &[f64], factor: f64) -> Vec<f64> {
    if samples.is_empty() {
        return Vec::new();
    }
    let out_len = (samples.len() as f64 / factor).round() as usize;
    let last = samples.len() - 1;
    (0..out_len)
        .map(|i| {
            let pos = i as f64 * factor;
            let idx = pos.floor() as usize;
            if idx >= last {
                return samples[last];
            }
            let frac = pos - idx as f64;
            if frac == 0.0 {
                samples[idx]
            } else {
                samples[idx] * (1.0 - frac) + samples[idx + 1] * frac
            }
        })
        .collect()
}
