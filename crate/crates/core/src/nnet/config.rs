use serde::{Deserialize, Serialize};

use super::NnetError;
use crate::ctc::Alphabet;
use crate::frontend::FEATURE_DIM;

/// One 2-D convolution over (time, frequency), valid padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnLayerConfig {
    pub kernel_time: usize,
    pub kernel_freq: usize,
    pub stride_time: usize,
    pub stride_freq: usize,
    pub channels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_features: usize,
    pub cnn_layers: Vec<CnnLayerConfig>,
    pub lstm_layers: usize,
    /// Units per direction.
    pub hidden_size: usize,
    pub residual: bool,
    /// Number of BiLSTM layers bridged by each shortcut.
    #[serde(default = "one")]
    pub residual_span: usize,
    /// Project the summed BiLSTM output back to the layer's input width.
    /// Without it the summed output (width `hidden_size`) is used directly.
    #[serde(default = "yes")]
    pub combine_projection: bool,
    /// Non-blank output symbols in index order; the blank comes last.
    pub alphabet: String,
    /// Upper clip of the convolution activation.
    #[serde(default = "relu_clip")]
    pub relu_clip: f64,
}

fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn relu_clip() -> f64 {
    20.0
}

const ENGLISH: &str = "abcdefghijklmnopqrstuvwxyz '";

impl ModelConfig {
    /// First-stage acoustic model at full size: two convolutions and seven
    /// residual BiLSTM layers of 1024 units.
    pub fn full_stage1() -> Self {
        Self {
            input_features: FEATURE_DIM,
            cnn_layers: vec![
                CnnLayerConfig {
                    kernel_time: 11,
                    kernel_freq: 41,
                    stride_time: 2,
                    stride_freq: 2,
                    channels: 32,
                },
                CnnLayerConfig {
                    kernel_time: 11,
                    kernel_freq: 21,
                    stride_time: 1,
                    stride_freq: 2,
                    channels: 32,
                },
            ],
            lstm_layers: 7,
            hidden_size: 1024,
            residual: true,
            residual_span: 1,
            combine_projection: true,
            alphabet: ENGLISH.into(),
            relu_clip: 20.0,
        }
    }

    /// Second stage: same convolutions, 13 layers of 512 units.
    pub fn full_stage2() -> Self {
        Self {
            lstm_layers: 13,
            hidden_size: 512,
            ..Self::full_stage1()
        }
    }

    /// Desk-scale first stage.
    pub fn toy_stage1(alphabet: &str) -> Self {
        Self {
            input_features: FEATURE_DIM,
            cnn_layers: vec![
                CnnLayerConfig {
                    kernel_time: 5,
                    kernel_freq: 9,
                    stride_time: 2,
                    stride_freq: 4,
                    channels: 4,
                },
                CnnLayerConfig {
                    kernel_time: 3,
                    kernel_freq: 5,
                    stride_time: 1,
                    stride_freq: 2,
                    channels: 4,
                },
            ],
            lstm_layers: 2,
            hidden_size: 64,
            residual: true,
            residual_span: 1,
            combine_projection: true,
            alphabet: alphabet.into(),
            relu_clip: 20.0,
        }
    }

    /// Desk-scale second stage: deeper and wider than [`Self::toy_stage1`]
    /// with identical convolutions.
    pub fn toy_stage2(alphabet: &str) -> Self {
        Self {
            lstm_layers: 3,
            hidden_size: 96,
            ..Self::toy_stage1(alphabet)
        }
    }

    pub fn alphabet(&self) -> Result<Alphabet, NnetError> {
        Alphabet::with_blank_last(&self.alphabet).map_err(|e| NnetError::Config(e.to_string()))
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.chars().count() + 1
    }

    /// `(channels, frequency bins)` after each convolution.
    pub fn cnn_shapes(&self) -> Vec<(usize, usize)> {
        let mut freq = self.input_features;
        let mut out = Vec::with_capacity(self.cnn_layers.len());
        for l in &self.cnn_layers {
            freq = if freq >= l.kernel_freq && l.stride_freq > 0 {
                (freq - l.kernel_freq) / l.stride_freq + 1
            } else {
                0
            };
            out.push((l.channels, freq));
        }
        out
    }

    /// Width of the per-frame vector entering the first BiLSTM layer.
    pub fn cnn_output_width(&self) -> usize {
        self.cnn_shapes()
            .last()
            .map_or(self.input_features, |&(c, f)| c * f)
    }

    /// `(input width, output width)` of every BiLSTM layer.
    pub fn lstm_widths(&self) -> Vec<(usize, usize)> {
        let mut w = self.cnn_output_width();
        (0..self.lstm_layers)
            .map(|_| {
                let out = if self.combine_projection { w } else { self.hidden_size };
                let pair = (w, out);
                w = out;
                pair
            })
            .collect()
    }

    /// Width seen by the fully connected output layer.
    pub fn feature_width(&self) -> usize {
        self.lstm_widths().last().map_or(self.cnn_output_width(), |p| p.1)
    }

    /// Whether the shortcut closes after layer `i`, and the index of the
    /// layer whose input it carries.
    pub fn residual_after(&self, i: usize) -> Option<usize> {
        if !self.residual {
            return None;
        }
        let span = self.residual_span.max(1);
        let closes = (i + 1).is_multiple_of(span) || i + 1 == self.lstm_layers;
        closes.then_some(i - i % span)
    }

    /// Output frames for `frames` input frames, or `None` if the input is
    /// shorter than the convolution stack's receptive field.
    pub fn output_frames(&self, frames: usize) -> Option<usize> {
        let mut t = frames;
        for l in &self.cnn_layers {
            if t < l.kernel_time {
                return None;
            }
            t = (t - l.kernel_time) / l.stride_time + 1;
        }
        (t > 0).then_some(t)
    }

    pub fn validate(&self) -> Result<(), NnetError> {
        let err = |m: String| Err(NnetError::Config(m));
        if self.input_features == 0 {
            return err("input_features must be positive".into());
        }
        if self.lstm_layers == 0 {
            return err("lstm_layers must be >= 1".into());
        }
        if self.hidden_size == 0 {
            return err("hidden_size must be >= 1".into());
        }
        if self.residual_span == 0 {
            return err("residual_span must be >= 1".into());
        }
        if !(self.relu_clip > 0.0) {
            return err("relu_clip must be positive".into());
        }
        self.alphabet()?;
        for (i, l) in self.cnn_layers.iter().enumerate() {
            if l.kernel_time == 0 || l.kernel_freq == 0 || l.stride_time == 0 || l.stride_freq == 0 || l.channels == 0 {
                return err(format!("cnn layer {i} has a zero dimension"));
            }
        }
        if let Some(i) = self.cnn_shapes().iter().position(|&(_, f)| f == 0) {
            return err(format!("cnn layer {i} kernel is wider than its frequency input"));
        }
        let widths = self.lstm_widths();
        for i in 0..self.lstm_layers {
            if let Some(start) = self.residual_after(i) {
                let (inp, _) = widths[start];
                let (_, out) = widths[i];
                if inp != out {
                    return err(format!(
                        "residual shortcut over layers {start}..={i} adds width {inp} to width {out}; \
                         hidden_size {} must equal the input width or combine_projection be enabled",
                        self.hidden_size
                    ));
                }
            }
        }
        Ok(())
    }
}
