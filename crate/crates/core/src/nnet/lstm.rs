use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Activations of one LSTM direction, indexed by original frame.
#[derive(Debug, Clone)]
pub struct LstmCache {
    reverse: bool,
    /// Activated gates `[i, f, g, o]`, `T x 4H`.
    gates: Array2<f64>,
    cell: Array2<f64>,
    tanh_cell: Array2<f64>,
    hidden: Array2<f64>,
}

impl LstmCache {
    pub fn hidden(&self) -> &Array2<f64> {
        &self.hidden
    }
}

#[inline]
fn frame(reverse: bool, frames: usize, k: usize) -> usize {
    if reverse {
        frames - 1 - k
    } else {
        k
    }
}

/// Runs one direction over `x` (`T x D`). Gate rows of `w_ih`, `w_hh` and
/// `bias` are stacked as input, forget, cell, output.
pub fn lstm_forward(
    x: ArrayView2<'_, f64>,
    w_ih: ArrayView2<'_, f64>,
    w_hh: ArrayView2<'_, f64>,
    bias: ArrayView1<'_, f64>,
    reverse: bool,
) -> LstmCache {
    let frames = x.nrows();
    let h = w_hh.ncols();
    let mut pre = x.dot(&w_ih.t());
    pre += &bias;
    let mut gates = Array2::zeros((frames, 4 * h));
    let mut cell = Array2::zeros((frames, h));
    let mut tanh_cell = Array2::zeros((frames, h));
    let mut hidden = Array2::<f64>::zeros((frames, h));
    let mut h_prev = Array1::<f64>::zeros(h);
    let mut c_prev = Array1::<f64>::zeros(h);
    for k in 0..frames {
        let t = frame(reverse, frames, k);
        let mut z = pre.row(t).to_owned();
        general_mat_mul_vec(w_hh, h_prev.view(), z.view_mut());
        let mut g_row = gates.row_mut(t);
        for u in 0..h {
            let i = sigmoid(z[u]);
            let f = sigmoid(z[h + u]);
            let g = z[2 * h + u].tanh();
            let o = sigmoid(z[3 * h + u]);
            let c = f * c_prev[u] + i * g;
            let tc = c.tanh();
            g_row[u] = i;
            g_row[h + u] = f;
            g_row[2 * h + u] = g;
            g_row[3 * h + u] = o;
            cell[[t, u]] = c;
            tanh_cell[[t, u]] = tc;
            hidden[[t, u]] = o * tc;
        }
        h_prev.assign(&hidden.row(t));
        c_prev.assign(&cell.row(t));
    }
    LstmCache {
        reverse,
        gates,
        cell,
        tanh_cell,
        hidden,
    }
}

/// `y += a * x`
fn general_mat_mul_vec(a: ArrayView2<'_, f64>, x: ArrayView1<'_, f64>, mut y: ArrayViewMut1<'_, f64>) {
    ndarray::linalg::general_mat_vec_mul(1.0, &a, &x, 1.0, &mut y);
}

/// Back-propagates `d_hidden` (`T x H`, gradient of the loss with respect to
/// this direction's outputs). Parameter gradients are accumulated into the
/// given buffers; the input gradient is returned.
#[allow(clippy::too_many_arguments)]
pub fn lstm_backward(
    cache: &LstmCache,
    x: ArrayView2<'_, f64>,
    w_ih: ArrayView2<'_, f64>,
    w_hh: ArrayView2<'_, f64>,
    d_hidden: ArrayView2<'_, f64>,
    mut d_w_ih: ArrayViewMut2<'_, f64>,
    mut d_w_hh: ArrayViewMut2<'_, f64>,
    mut d_bias: ArrayViewMut1<'_, f64>,
) -> Array2<f64> {
    let frames = x.nrows();
    let h = w_hh.ncols();
    let mut dz = Array2::<f64>::zeros((frames, 4 * h));
    let mut h_prev_all = Array2::<f64>::zeros((frames, h));
    let mut dh_next = Array1::<f64>::zeros(h);
    let mut dc_next = Array1::<f64>::zeros(h);
    for k in (0..frames).rev() {
        let t = frame(cache.reverse, frames, k);
        let prev = (k > 0).then(|| frame(cache.reverse, frames, k - 1));
        if let Some(p) = prev {
            h_prev_all.row_mut(t).assign(&cache.hidden.row(p));
        }
        let g = cache.gates.row(t);
        let mut dz_row = dz.row_mut(t);
        for u in 0..h {
            let (i, f, gg, o) = (g[u], g[h + u], g[2 * h + u], g[3 * h + u]);
            let tc = cache.tanh_cell[[t, u]];
            let dh = d_hidden[[t, u]] + dh_next[u];
            let dc = dc_next[u] + dh * o * (1.0 - tc * tc);
            let c_prev = prev.map_or(0.0, |p| cache.cell[[p, u]]);
            dz_row[u] = dc * gg * i * (1.0 - i);
            dz_row[h + u] = dc * c_prev * f * (1.0 - f);
            dz_row[2 * h + u] = dc * i * (1.0 - gg * gg);
            dz_row[3 * h + u] = dh * tc * o * (1.0 - o);
            dc_next[u] = dc * f;
        }
        dh_next.fill(0.0);
        ndarray::linalg::general_mat_vec_mul(1.0, &w_hh.t(), &dz.row(t), 0.0, &mut dh_next);
    }
    general_mat_mul(1.0, &dz.t(), &h_prev_all, 1.0, &mut d_w_hh);
    general_mat_mul(1.0, &dz.t(), &x, 1.0, &mut d_w_ih);
    d_bias += &dz.sum_axis(Axis(0));
    dz.dot(&w_ih)
}

/// Hidden state after the last processed frame of a one-direction run.
#[cfg(test)]
fn final_hidden(cache: &LstmCache) -> ArrayView1<'_, f64> {
    let t = if cache.reverse { 0 } else { cache.hidden.nrows() - 1 };
    cache.hidden.row(t)
}
