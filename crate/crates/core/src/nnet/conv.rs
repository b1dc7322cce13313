use super::config::CnnLayerConfig;

/// Feature map laid out as `[channels][time][freq]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub time: usize,
    pub freq: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(channels: usize, time: usize, freq: usize) -> Self {
        Self {
            channels,
            time,
            freq,
            data: vec![0.0; channels * time * freq],
        }
    }

    #[inline]
    fn at(&self, c: usize, t: usize, f: usize) -> usize {
        (c * self.time + t) * self.freq + f
    }
}

fn out_dims(input: &FeatureMap, l: &CnnLayerConfig) -> (usize, usize) {
    (
        (input.time - l.kernel_time) / l.stride_time + 1,
        (input.freq - l.kernel_freq) / l.stride_freq + 1,
    )
}

/// Valid convolution returning pre-activations. `weight` is
/// `[out][in][kt][kf]`; the caller guarantees the input covers the kernel.
pub fn conv_forward(input: &FeatureMap, l: &CnnLayerConfig, weight: &[f64], bias: &[f64]) -> FeatureMap {
    let (to, fo) = out_dims(input, l);
    let cin = input.channels;
    let mut out = FeatureMap::zeros(l.channels, to, fo);
    for co in 0..l.channels {
        let plane = &mut out.data[co * to * fo..(co + 1) * to * fo];
        plane.iter_mut().for_each(|v| *v = bias[co]);
        for ci in 0..cin {
            for i in 0..l.kernel_time {
                for j in 0..l.kernel_freq {
                    let w = weight[((co * cin + ci) * l.kernel_time + i) * l.kernel_freq + j];
                    if w == 0.0 {
                        continue;
                    }
                    for t in 0..to {
                        let src = input.at(ci, t * l.stride_time + i, j);
                        let row = &mut plane[t * fo..(t + 1) * fo];
                        for (f, v) in row.iter_mut().enumerate() {
                            *v += w * input.data[src + f * l.stride_freq];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Accumulates weight and bias gradients and, if requested, returns the
/// gradient with respect to the input.
pub fn conv_backward(
    input: &FeatureMap,
    l: &CnnLayerConfig,
    weight: &[f64],
    d_out: &FeatureMap,
    d_weight: &mut [f64],
    d_bias: &mut [f64],
    want_input_grad: bool,
) -> Option<FeatureMap> {
    let (to, fo) = (d_out.time, d_out.freq);
    let cin = input.channels;
    let mut d_in = want_input_grad.then(|| FeatureMap::zeros(cin, input.time, input.freq));
    for (co, db) in d_bias.iter_mut().enumerate().take(l.channels) {
        let plane = &d_out.data[co * to * fo..(co + 1) * to * fo];
        *db += plane.iter().sum::<f64>();
        for ci in 0..cin {
            for i in 0..l.kernel_time {
                for j in 0..l.kernel_freq {
                    let wi = ((co * cin + ci) * l.kernel_time + i) * l.kernel_freq + j;
                    let w = weight[wi];
                    let mut acc = 0.0;
                    for t in 0..to {
                        let src = input.at(ci, t * l.stride_time + i, j);
                        let g = &plane[t * fo..(t + 1) * fo];
                        for (f, gv) in g.iter().enumerate() {
                            acc += gv * input.data[src + f * l.stride_freq];
                        }
                        if let Some(d) = d_in.as_mut() {
                            for (f, gv) in g.iter().enumerate() {
                                d.data[src + f * l.stride_freq] += w * gv;
                            }
                        }
                    }
                    d_weight[wi] += acc;
                }
            }
        }
    }
    d_in
}

/// In-place clipped ReLU, `min(max(x, 0), clip)`.
pub fn clipped_relu(x: &mut [f64], clip: f64) {
    x.iter_mut().for_each(|v| *v = v.clamp(0.0, clip));
}

/// Masks `grad` by the derivative of the clipped ReLU at `pre`.
pub fn clipped_relu_backward(pre: &[f64], grad: &mut [f64], clip: f64) {
    for (g, &z) in grad.iter_mut().zip(pre) {
        if !(z > 0.0 && z < clip) {
            *g = 0.0;
        }
    }
}
