use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, Axis};

use super::conv::{clipped_relu, clipped_relu_backward, conv_backward, conv_forward, FeatureMap};
use super::lstm::{lstm_backward, lstm_forward, LstmCache};
use super::params::{
    cnn_bias, cnn_weight, combine_bias, combine_weight, lstm_param, ParamStore, DIRECTIONS, FC_BIAS, FC_WEIGHT,
};
use super::{ModelConfig, NnetError};
use crate::ctc::PosteriorMatrix;

struct LayerCache {
    input: Array2<f64>,
    fwd: LstmCache,
    bwd: LstmCache,
    /// `h_fwd + h_bwd`
    sum: Array2<f64>,
}

/// Activations kept from a forward pass for back-propagation.
pub struct ForwardPass {
    pub logits: Array2<f64>,
    conv_inputs: Vec<FeatureMap>,
    conv_pre: Vec<FeatureMap>,
    layers: Vec<LayerCache>,
    features: Array2<f64>,
}

impl ForwardPass {
    pub fn frames(&self) -> usize {
        self.logits.nrows()
    }

    /// Input of BiLSTM layer `i`, or the input of the output layer when
    /// `i` equals the layer count.
    pub fn layer_input(&self, i: usize) -> &Array2<f64> {
        self.layers.get(i).map_or(&self.features, |l| &l.input)
    }
}

impl ModelConfig {
    /// Fewest input frames that yield at least one output frame.
    pub fn min_input_frames(&self) -> usize {
        self.cnn_layers
            .iter()
            .rev()
            .fold(1, |need, l| (need - 1) * l.stride_time + l.kernel_time)
    }
}

fn check_input(cfg: &ModelConfig, input: ArrayView2<'_, f64>) -> Result<(), NnetError> {
    if input.ncols() != cfg.input_features {
        return Err(NnetError::InputWidth {
            expected: cfg.input_features,
            found: input.ncols(),
        });
    }
    if cfg.output_frames(input.nrows()).is_none() {
        return Err(NnetError::InputTooShort {
            frames: input.nrows(),
            required: cfg.min_input_frames(),
        });
    }
    Ok(())
}

/// Runs the network on one utterance (`frames x input_features`).
pub fn forward(cfg: &ModelConfig, params: &ParamStore, input: ArrayView2<'_, f64>) -> Result<ForwardPass, NnetError> {
    check_input(cfg, input)?;
    let mut map = FeatureMap {
        channels: 1,
        time: input.nrows(),
        freq: input.ncols(),
        data: input.iter().copied().collect(),
    };
    let mut conv_inputs = Vec::with_capacity(cfg.cnn_layers.len());
    let mut conv_pre = Vec::with_capacity(cfg.cnn_layers.len());
    for (i, l) in cfg.cnn_layers.iter().enumerate() {
        let pre = conv_forward(&map, l, &params.p(&cnn_weight(i)).data, &params.p(&cnn_bias(i)).data);
        let mut act = pre.clone();
        clipped_relu(&mut act.data, cfg.relu_clip);
        conv_inputs.push(std::mem::replace(&mut map, act));
        conv_pre.push(pre);
    }
    // [c][t][f] -> t x (c * F + f)
    let mut x = Array2::<f64>::zeros((map.time, map.channels * map.freq));
    for c in 0..map.channels {
        for t in 0..map.time {
            let src = &map.data[(c * map.time + t) * map.freq..][..map.freq];
            x.row_mut(t)
                .slice_mut(ndarray::s![c * map.freq..(c + 1) * map.freq])
                .assign(&ndarray::ArrayView1::from(src));
        }
    }

    let mut layers: Vec<LayerCache> = Vec::with_capacity(cfg.lstm_layers);
    let mut group_input: Option<Array2<f64>> = None;
    for i in 0..cfg.lstm_layers {
        if cfg.residual && group_input.is_none() {
            group_input = Some(x.clone());
        }
        let run = |dir: &str, rev: bool| {
            lstm_forward(
                x.view(),
                params.p(&lstm_param(i, dir, "w_ih")).matrix(),
                params.p(&lstm_param(i, dir, "w_hh")).matrix(),
                params.p(&lstm_param(i, dir, "bias")).vector(),
                rev,
            )
        };
        let fwd = run(DIRECTIONS[0], false);
        let bwd = run(DIRECTIONS[1], true);
        let sum = fwd.hidden() + bwd.hidden();
        let mut y = if cfg.combine_projection {
            let mut u = sum.dot(&params.p(&combine_weight(i)).matrix().t());
            u += &params.p(&combine_bias(i)).vector();
            u
        } else {
            sum.clone()
        };
        if cfg.residual_after(i).is_some() {
            y += &group_input.take().expect("group input recorded");
        }
        layers.push(LayerCache {
            input: std::mem::replace(&mut x, y),
            fwd,
            bwd,
            sum,
        });
    }
    let mut logits = x.dot(&params.p(FC_WEIGHT).matrix().t());
    logits += &params.p(FC_BIAS).vector();
    Ok(ForwardPass {
        logits,
        conv_inputs,
        conv_pre,
        layers,
        features: x,
    })
}

/// Accumulates parameter gradients for `d_logits` into `grads`. The
/// convolution gradients are skipped when `skip_cnn` is set.
pub fn backward(
    cfg: &ModelConfig,
    params: &ParamStore,
    pass: &ForwardPass,
    d_logits: &Array2<f64>,
    grads: &mut ParamStore,
    skip_cnn: bool,
) {
    general_mat_mul(1.0, &d_logits.t(), &pass.features, 1.0, &mut grads.p_mut(FC_WEIGHT).matrix_mut());
    {
        let db = d_logits.sum_axis(Axis(0));
        grads.p_mut(FC_BIAS).data.iter_mut().zip(db.iter()).for_each(|(g, d)| *g += d);
    }
    let mut dy = d_logits.dot(&params.p(FC_WEIGHT).matrix());
    let mut pending: Option<Array2<f64>> = None;
    for i in (0..cfg.lstm_layers).rev() {
        let layer = &pass.layers[i];
        if cfg.residual_after(i).is_some() {
            pending = Some(dy.clone());
        }
        let d_sum = if cfg.combine_projection {
            general_mat_mul(1.0, &dy.t(), &layer.sum, 1.0, &mut grads.p_mut(&combine_weight(i)).matrix_mut());
            let db = dy.sum_axis(Axis(0));
            grads
                .p_mut(&combine_bias(i))
                .data
                .iter_mut()
                .zip(db.iter())
                .for_each(|(g, d)| *g += d);
            dy.dot(&params.p(&combine_weight(i)).matrix())
        } else {
            dy
        };
        let mut dx: Option<Array2<f64>> = None;
        for (dir, cache) in [(DIRECTIONS[0], &layer.fwd), (DIRECTIONS[1], &layer.bwd)] {
            let (wi, wh, b) = (lstm_param(i, dir, "w_ih"), lstm_param(i, dir, "w_hh"), lstm_param(i, dir, "bias"));
            let mut g_wi = std::mem::take(&mut grads.p_mut(&wi).data);
            let mut g_wh = std::mem::take(&mut grads.p_mut(&wh).data);
            let mut g_b = std::mem::take(&mut grads.p_mut(&b).data);
            let (h4, din) = (g_b.len(), layer.input.ncols());
            let d = lstm_backward(
                cache,
                layer.input.view(),
                params.p(&wi).matrix(),
                params.p(&wh).matrix(),
                d_sum.view(),
                ndarray::ArrayViewMut2::from_shape((h4, din), &mut g_wi).expect("shape"),
                ndarray::ArrayViewMut2::from_shape((h4, h4 / 4), &mut g_wh).expect("shape"),
                ndarray::ArrayViewMut1::from(&mut g_b[..]),
            );
            grads.p_mut(&wi).data = g_wi;
            grads.p_mut(&wh).data = g_wh;
            grads.p_mut(&b).data = g_b;
            dx = Some(match dx {
                None => d,
                Some(acc) => acc + d,
            });
        }
        dy = dx.expect("two directions");
        // the shortcut leaves from the input of the first layer in its group
        if cfg.residual && i % cfg.residual_span.max(1) == 0 {
            if let Some(p) = pending.take() {
                dy += &p;
            }
        }
    }
    if skip_cnn || cfg.cnn_layers.is_empty() {
        return;
    }
    let last = pass.conv_pre.last().expect("non-empty");
    let mut d_map = FeatureMap::zeros(last.channels, last.time, last.freq);
    for c in 0..last.channels {
        for t in 0..last.time {
            let dst = &mut d_map.data[(c * last.time + t) * last.freq..][..last.freq];
            for (f, v) in dst.iter_mut().enumerate() {
                *v = dy[[t, c * last.freq + f]];
            }
        }
    }
    for i in (0..cfg.cnn_layers.len()).rev() {
        clipped_relu_backward(&pass.conv_pre[i].data, &mut d_map.data, cfg.relu_clip);
        let mut gw = std::mem::take(&mut grads.p_mut(&cnn_weight(i)).data);
        let mut gb = std::mem::take(&mut grads.p_mut(&cnn_bias(i)).data);
        let d_in = conv_backward(
            &pass.conv_inputs[i],
            &cfg.cnn_layers[i],
            &params.p(&cnn_weight(i)).data,
            &d_map,
            &mut gw,
            &mut gb,
            i > 0,
        );
        grads.p_mut(&cnn_weight(i)).data = gw;
        grads.p_mut(&cnn_bias(i)).data = gb;
        match d_in {
            Some(d) => d_map = d,
            None => break,
        }
    }
}

/// Per-frame output posteriors for one utterance.
pub fn posteriors(
    cfg: &ModelConfig,
    params: &ParamStore,
    input: ArrayView2<'_, f64>,
) -> Result<PosteriorMatrix, NnetError> {
    Ok(PosteriorMatrix::from_logits(&forward(cfg, params, input)?.logits))
}
