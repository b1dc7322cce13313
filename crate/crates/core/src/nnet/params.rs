use std::collections::HashMap;

use ndarray::{ArrayView1, ArrayView2, ArrayViewMut2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ModelConfig, NnetError};

/// One named dense array stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Param {
    pub fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            name: name.into(),
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// View as a matrix of `shape[0]` rows.
    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        let rows = self.shape[0];
        ArrayView2::from_shape((rows, self.data.len() / rows.max(1)), &self.data).expect("param shape")
    }

    pub fn matrix_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        let rows = self.shape[0];
        let cols = self.data.len() / rows.max(1);
        ArrayViewMut2::from_shape((rows, cols), &mut self.data).expect("param shape")
    }

    pub fn vector(&self) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.data[..])
    }
}

/// Ordered set of named parameters. The order is fixed by the model
/// configuration and is also the checkpoint and optimizer order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    params: Vec<Param>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    pub fn from_params(params: Vec<Param>) -> Result<Self, NnetError> {
        let mut index = HashMap::with_capacity(params.len());
        for (i, p) in params.iter().enumerate() {
            if p.shape.iter().product::<usize>() != p.data.len() {
                return Err(NnetError::Shape(format!(
                    "{}: shape {:?} does not hold {} values",
                    p.name,
                    p.shape,
                    p.data.len()
                )));
            }
            if index.insert(p.name.clone(), i).is_some() {
                return Err(NnetError::Shape(format!("duplicate parameter {}", p.name)));
            }
        }
        Ok(Self { params, index })
    }

    /// Zero-filled parameters with the shapes required by `cfg`.
    pub fn zeros_for(cfg: &ModelConfig) -> Self {
        Self::from_params(param_shapes(cfg).into_iter().map(|(n, s)| Param::zeros(n, s)).collect())
            .expect("generated names are unique")
    }

    /// Zero-filled arrays shaped like `self`.
    pub fn zeros_like(&self) -> Self {
        Self {
            params: self.params.iter().map(|p| Param::zeros(p.name.clone(), p.shape.clone())).collect(),
            index: self.index.clone(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.index.get(name).map(|&i| &self.params[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Param> {
        self.index.get(name).map(|&i| &mut self.params[i])
    }

    /// Panics when `name` is absent; used by the layers, whose names are
    /// validated when the store is built.
    pub(crate) fn p(&self, name: &str) -> &Param {
        self.get(name).unwrap_or_else(|| panic!("missing parameter {name}"))
    }

    pub(crate) fn p_mut(&mut self, name: &str) -> &mut Param {
        self.get_mut(name).unwrap_or_else(|| panic!("missing parameter {name}"))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn count(&self) -> usize {
        self.params.iter().map(Param::len).sum()
    }

    pub fn add_assign(&mut self, other: &ParamStore) {
        for (a, b) in self.params.iter_mut().zip(&other.params) {
            a.data.iter_mut().zip(&b.data).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, k: f64) {
        for p in &mut self.params {
            p.data.iter_mut().for_each(|x| *x *= k);
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.params
            .iter()
            .flat_map(|p| &p.data)
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Checks that every name and shape required by `cfg` is present and
    /// nothing else is.
    pub fn check_against(&self, cfg: &ModelConfig) -> Result<(), NnetError> {
        let want = param_shapes(cfg);
        if want.len() != self.params.len() {
            return Err(NnetError::Shape(format!(
                "config needs {} arrays, found {}",
                want.len(),
                self.params.len()
            )));
        }
        for (name, shape) in want {
            match self.get(&name) {
                None => return Err(NnetError::Shape(format!("missing parameter {name}"))),
                Some(p) if p.shape != shape => {
                    return Err(NnetError::Shape(format!(
                        "{name}: expected shape {shape:?}, found {:?}",
                        p.shape
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

pub fn cnn_weight(i: usize) -> String {
    format!("cnn.{i}.weight")
}
pub fn cnn_bias(i: usize) -> String {
    format!("cnn.{i}.bias")
}
pub fn lstm_param(layer: usize, dir: &str, what: &str) -> String {
    format!("lstm.{layer}.{dir}.{what}")
}
pub fn combine_weight(layer: usize) -> String {
    format!("lstm.{layer}.combine.weight")
}
pub fn combine_bias(layer: usize) -> String {
    format!("lstm.{layer}.combine.bias")
}
pub const FC_WEIGHT: &str = "fc.weight";
pub const FC_BIAS: &str = "fc.bias";
pub const DIRECTIONS: [&str; 2] = ["fwd", "bwd"];

/// Every parameter name and shape for `cfg`, in canonical order.
pub fn param_shapes(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let mut out = Vec::new();
    let mut cin = 1;
    for (i, l) in cfg.cnn_layers.iter().enumerate() {
        out.push((cnn_weight(i), vec![l.channels, cin, l.kernel_time, l.kernel_freq]));
        out.push((cnn_bias(i), vec![l.channels]));
        cin = l.channels;
    }
    let h = cfg.hidden_size;
    for (i, (din, dout)) in cfg.lstm_widths().into_iter().enumerate() {
        for dir in DIRECTIONS {
            out.push((lstm_param(i, dir, "w_ih"), vec![4 * h, din]));
            out.push((lstm_param(i, dir, "w_hh"), vec![4 * h, h]));
            out.push((lstm_param(i, dir, "bias"), vec![4 * h]));
        }
        if cfg.combine_projection {
            out.push((combine_weight(i), vec![dout, h]));
            out.push((combine_bias(i), vec![dout]));
        }
    }
    let a = cfg.alphabet_size();
    out.push((FC_WEIGHT.into(), vec![a, cfg.feature_width()]));
    out.push((FC_BIAS.into(), vec![a]));
    out
}

fn glorot(rng: &mut ChaCha8Rng, data: &mut [f64], fan_in: usize, fan_out: usize) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for x in data {
        *x = rng.gen_range(-limit..limit);
    }
}

/// Glorot-uniform weights, zero biases and forget-gate biases of one,
/// drawn in canonical order from a seeded generator.
pub fn init_params(cfg: &ModelConfig, seed: u64) -> ParamStore {
    let mut store = ParamStore::zeros_for(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = cfg.hidden_size;
    for p in store.iter_mut() {
        let s = p.shape.clone();
        if p.name.ends_with("bias") {
            if p.name.starts_with("lstm.") && !p.name.contains("combine") {
                p.data[h..2 * h].iter_mut().for_each(|x| *x = 1.0);
            }
            continue;
        }
        let (fan_in, fan_out) = if s.len() == 4 {
            let rf = s[2] * s[3];
            (s[1] * rf, s[0] * rf)
        } else if p.name.ends_with("w_ih") || p.name.ends_with("w_hh") {
            // per-gate fan-out
            (s[1], s[0] / 4)
        } else {
            (s[1], s[0])
        };
        glorot(&mut rng, &mut p.data, fan_in, fan_out);
    }
    store
}

/// Closed-form parameter count for `cfg`.
pub fn analytic_param_count(cfg: &ModelConfig) -> usize {
    let mut total = 0;
    let mut cin = 1;
    for l in &cfg.cnn_layers {
        total += l.channels * cin * l.kernel_time * l.kernel_freq + l.channels;
        cin = l.channels;
    }
    let h = cfg.hidden_size;
    for (din, dout) in cfg.lstm_widths() {
        total += 2 * (4 * h * din + 4 * h * h + 4 * h);
        if cfg.combine_projection {
            total += dout * h + dout;
        }
    }
    let a = cfg.alphabet_size();
    total + a * cfg.feature_width() + a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_agree() {
        for cfg in [
            ModelConfig::toy_stage1("abcde "),
            ModelConfig::toy_stage2("abcde "),
            ModelConfig::full_stage1(),
            ModelConfig::full_stage2(),
        ] {
            let store = ParamStore::zeros_for(&cfg);
            assert_eq!(store.count(), analytic_param_count(&cfg));
            store.check_against(&cfg).unwrap();
        }
    }

    #[test]
    fn toy_count_by_hand() {
        let cfg = ModelConfig::toy_stage1("abcde ");
        let cnn = (4 * 5 * 9 + 4) + (4 * 4 * 3 * 5 + 4);
        let lstm = 2 * (2 * (256 * 72 + 256 * 64 + 256) + (72 * 64 + 72));
        let fc = 7 * 72 + 7;
        assert_eq!(analytic_param_count(&cfg), cnn + lstm + fc);
    }

    #[test]
    fn init_is_seeded() {
        let cfg = ModelConfig::toy_stage1("ab");
        let a = init_params(&cfg, 1);
        assert_eq!(a, init_params(&cfg, 1));
        assert_ne!(a, init_params(&cfg, 2));
        let b = a.p("lstm.0.fwd.bias");
        assert!(b.data[..64].iter().all(|&x| x == 0.0));
        assert!(b.data[64..128].iter().all(|&x| x == 1.0));
        assert!(b.data[128..].iter().all(|&x| x == 0.0));
        let w = a.p("fc.weight");
        let limit = (6.0f64 / (72 + 3) as f64).sqrt();
        assert!(w.data.iter().all(|x| x.abs() < limit));
    }
}
