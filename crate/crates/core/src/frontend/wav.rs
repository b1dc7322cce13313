use std::path::Path;

use super::{AudioClip, FrontendError};

/// Reads a 16-bit PCM mono WAV file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip, FrontendError> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(FrontendError::InvalidAudio(format!(
            "expected mono audio, found {} channels",
            spec.channels
        )));
    }
    if spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(FrontendError::InvalidAudio(format!(
            "expected 16-bit integer PCM, found {} bits {:?}",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<Result<Vec<_>, _>>()?;
    AudioClip::new(samples, spec.sample_rate)
}

pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip) -> Result<(), FrontendError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &s in &clip.samples {
        let v = (s * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        writer.write_sample(v)?;
    }
    writer.finalize()?;
    Ok(())
}
