use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::{pooled, InitScheme, NetworkConfig};
use super::ops::{col2im_add, conv_forward, gemm, maxpool_forward, relu_in_place, softmax_rows};
use crate::data::Patch;
use crate::error::{Error, Result};
use crate::rng::{rng_for, tags};

/// Weights and biases of one layer. Convolution weights hold one row of
/// `f·f·c` values per filter; dense weights are `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: vec![0.0; fan_in * fan_out],
            bias: vec![0.0; fan_out],
        }
    }

    fn sample(fan_in: usize, fan_out: usize, init: InitScheme, rng: &mut ChaCha8Rng) -> Self {
        let scale = match init {
            InitScheme::Scaled => 1.0 / (fan_in as f64).sqrt(),
            InitScheme::Raw => 1.0,
        };
        let weights = (0..fan_in * fan_out)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self {
            weights,
            bias: vec![0.0; fan_out],
        }
    }
}

/// Whether a forward pass samples dropout masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Parameter-shaped gradient buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub conv: Vec<Layer>,
    pub dense: Vec<Layer>,
}

impl Gradients {
    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.conv.iter().chain(&self.dense)
    }

    pub fn is_finite(&self) -> bool {
        self.layers()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

struct ConvCache {
    side_in: usize,
    channels_in: usize,
    cols: Vec<f64>,
    /// post-ReLU conv output, `(batch·o·o) × F`
    out: Vec<f64>,
    argmax: Vec<u32>,
}

/// Intermediate values of one training forward pass, consumed by
/// [`Network::backward`].
pub struct ForwardCache {
    batch: usize,
    conv: Vec<ConvCache>,
    /// input of each dense layer
    dense_in: Vec<Vec<f64>>,
    /// post-ReLU output of each hidden layer before dropout
    hidden: Vec<Vec<f64>>,
    /// dropout multipliers (0 or 1/keep) per hidden layer
    masks: Vec<Option<Vec<f64>>>,
    probs: Vec<f64>,
}

impl ForwardCache {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// The convolutional classifier: conv blocks, hidden ReLU layers with
/// dropout, a linear output layer and a softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: NetworkConfig,
    sizes: Vec<usize>,
    pub(crate) conv: Vec<Layer>,
    pub(crate) dense: Vec<Layer>,
    pub(crate) dropout_rng: ChaCha8Rng,
}

impl Network {
    /// Draws weights from N(0, 1) (scaled by 1/√fan_in unless the config asks
    /// for raw init); all biases start at zero.
    pub fn init(config: NetworkConfig, seed: u64) -> Result<Self> {
        let sizes = config.feature_sizes()?;
        let mut rng = rng_for(seed, tags::INIT);
        let mut conv = Vec::with_capacity(config.conv.len());
        let mut channels = config.bands;
        for spec in &config.conv {
            let fan_in = spec.kernel * spec.kernel * channels;
            conv.push(Layer::sample(fan_in, spec.filters, config.init, &mut rng));
            channels = spec.filters;
        }
        let mut dense = Vec::with_capacity(config.dense.len() + 1);
        let mut width = config.flat_len()?;
        for &n in config.dense.iter().chain(std::iter::once(&config.classes)) {
            dense.push(Layer::sample(width, n, config.init, &mut rng));
            width = n;
        }
        Ok(Self {
            config,
            sizes,
            conv,
            dense,
            dropout_rng: rng_for(seed, tags::DROPOUT),
        })
    }

    pub(crate) fn from_parts(
        config: NetworkConfig,
        conv: Vec<Layer>,
        dense: Vec<Layer>,
        dropout_rng: ChaCha8Rng,
    ) -> Result<Self> {
        let sizes = config.feature_sizes()?;
        let template = Self::zeros(&config)?;
        let same = |a: &[Layer], b: &[Layer]| {
            a.len() == b.len()
                && a
                    .iter()
                    .zip(b)
                    .all(|(x, y)| x.weights.len() == y.weights.len() && x.bias.len() == y.bias.len())
        };
        if !same(&conv, &template.conv) || !same(&dense, &template.dense) {
            return Err(Error::shape("parameter shapes do not match the network config"));
        }
        Ok(Self {
            config,
            sizes,
            conv,
            dense,
            dropout_rng,
        })
    }

    fn zeros(config: &NetworkConfig) -> Result<Gradients> {
        let mut conv = Vec::new();
        let mut channels = config.bands;
        for spec in &config.conv {
            conv.push(Layer::zeros(spec.kernel * spec.kernel * channels, spec.filters));
            channels = spec.filters;
        }
        let mut dense = Vec::new();
        let mut width = config.flat_len()?;
        for &n in config.dense.iter().chain(std::iter::once(&config.classes)) {
            dense.push(Layer::zeros(width, n));
            width = n;
        }
        Ok(Gradients { conv, dense })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    /// Spatial sides `[k, n1, n2, n3, n4, ...]`.
    pub fn feature_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn conv_layers(&self) -> &[Layer] {
        &self.conv
    }

    /// Hidden layers followed by the output layer.
    pub fn dense_layers(&self) -> &[Layer] {
        &self.dense
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.conv.iter().chain(&self.dense)
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Layer> {
        self.conv.iter_mut().chain(self.dense.iter_mut())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn patch_len(&self) -> usize {
        self.config.patch_len()
    }

    fn check_input(&self, inputs: &[f64], batch: usize) -> Result<()> {
        if batch == 0 || inputs.len() != batch * self.patch_len() {
            return Err(Error::shape(format!(
                "expected {batch} patches of {} values, got {} values",
                self.patch_len(),
                inputs.len()
            )));
        }
        Ok(())
    }

    /// Eval-mode class posteriors for a batch of flattened patches; returns `batch × K`.
    pub fn forward_eval(&self, inputs: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.check_input(inputs, batch)?;
        let (probs, _) = run_forward(self, inputs, batch, None, false);
        Ok(probs)
    }

    /// Training forward pass; samples dropout masks when `dropout` is set.
    pub fn forward_train(&mut self, inputs: &[f64], batch: usize, dropout: bool) -> Result<ForwardCache> {
        self.check_input(inputs, batch)?;
        let mut rng = self.dropout_rng.clone();
        let use_rng = dropout && self.config.dropout > 0.0;
        let (_, cache) = run_forward(self, inputs, batch, use_rng.then_some(&mut rng), true);
        self.dropout_rng = rng;
        Ok(cache.expect("training pass keeps its cache"))
    }

    /// Single-patch forward. Train mode applies inverted dropout; eval mode
    /// is deterministic.
    pub fn forward(&mut self, patch: &Patch, mode: Mode) -> Result<(Vec<f64>, ForwardCache)> {
        if patch.size != self.config.patch_size || patch.bands != self.config.bands {
            return Err(Error::shape(format!(
                "patch {}x{}x{} does not match network input {}x{}x{}",
                patch.size,
                patch.size,
                patch.bands,
                self.config.patch_size,
                self.config.patch_size,
                self.config.bands
            )));
        }
        let cache = self.forward_train(&patch.values, 1, mode == Mode::Train)?;
        Ok((cache.probs.clone(), cache))
    }

    /// Gradients of the mean cross-entropy of the cached batch against `one_hot`.
    pub fn backward(&self, cache: &ForwardCache, one_hot: &[f64]) -> Result<Gradients> {
        let k = self.config.classes;
        let b = cache.batch;
        if one_hot.len() != b * k {
            return Err(Error::shape(format!(
                "one-hot targets hold {} values, expected {}",
                one_hot.len(),
                b * k
            )));
        }
        let mut grads = Self::zeros(&self.config)?;
        let inv_b = 1.0 / b as f64;
        // softmax + cross-entropy: d loss / d logits = (p - y) / batch
        let mut delta: Vec<f64> = cache
            .probs
            .iter()
            .zip(one_hot)
            .map(|(p, y)| (p - y) * inv_b)
            .collect();

        let n_dense = self.dense.len();
        for li in (0..n_dense).rev() {
            let layer = &self.dense[li];
            let x = &cache.dense_in[li];
            let n_out = layer.bias.len();
            let n_in = x.len() / b;
            let g = &mut grads.dense[li];
            gemm(n_out, b, n_in, &delta, true, x, false, &mut g.weights, 0.0);
            for row in delta.chunks(n_out) {
                for (gb, d) in g.bias.iter_mut().zip(row) {
                    *gb += d;
                }
            }
            let mut dx = vec![0.0; b * n_in];
            gemm(b, n_out, n_in, &delta, false, &layer.weights, false, &mut dx, 0.0);
            if li > 0 {
                let h = &cache.hidden[li - 1];
                match &cache.masks[li - 1] {
                    Some(mask) => {
                        for ((d, hv), m) in dx.iter_mut().zip(h).zip(mask) {
                            *d = if *hv > 0.0 { *d * m } else { 0.0 };
                        }
                    }
                    None => {
                        for (d, hv) in dx.iter_mut().zip(h) {
                            if *hv <= 0.0 {
                                *d = 0.0;
                            }
                        }
                    }
                }
            }
            delta = dx;
        }

        // delta is now the gradient of the flattened last pooled map
        for ci in (0..self.conv.len()).rev() {
            let cc = &cache.conv[ci];
            let spec = self.config.conv[ci];
            let f = spec.kernel;
            let filters = spec.filters;
            let o = cc.side_in - f + 1;
            let mut dout = vec![0.0; b * o * o * filters];
            for (&idx, &d) in cc.argmax.iter().zip(&delta) {
                dout[idx as usize] += d;
            }
            for (d, v) in dout.iter_mut().zip(&cc.out) {
                if *v <= 0.0 {
                    *d = 0.0;
                }
            }
            let rows = b * o * o;
            let fan_in = f * f * cc.channels_in;
            let g = &mut grads.conv[ci];
            gemm(filters, rows, fan_in, &dout, true, &cc.cols, false, &mut g.weights, 0.0);
            for row in dout.chunks(filters) {
                for (gb, d) in g.bias.iter_mut().zip(row) {
                    *gb += d;
                }
            }
            if ci > 0 {
                let mut dcols = vec![0.0; rows * fan_in];
                gemm(rows, filters, fan_in, &dout, false, &self.conv[ci].weights, false, &mut dcols, 0.0);
                let mut dinput = vec![0.0; b * cc.side_in * cc.side_in * cc.channels_in];
                col2im_add(&dcols, b, cc.side_in, cc.channels_in, f, &mut dinput);
                delta = dinput;
            }
        }
        Ok(grads)
    }

    /// Plain SGD: `p <- p - lr * g` for every parameter. Refuses non-finite gradients.
    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        if learning_rate.is_nan() || learning_rate <= 0.0 {
            return Err(Error::invalid(format!("learning rate must be positive, got {learning_rate}")));
        }
        if !grads.is_finite() {
            return Err(Error::Divergence("non-finite gradient".into()));
        }
        for (layer, g) in self.layers_mut().zip(grads.layers()) {
            for (p, d) in layer.weights.iter_mut().zip(&g.weights) {
                *p -= learning_rate * d;
            }
            for (p, d) in layer.bias.iter_mut().zip(&g.bias) {
                *p -= learning_rate * d;
            }
        }
        Ok(())
    }

    /// Runs the network from the output of the first pooling layer onward.
    /// `pooled` holds `batch × n2 × n2 × F1` values.
    pub(crate) fn eval_from_first_pool(&self, pooled_maps: Vec<f64>, batch: usize) -> Vec<f64> {
        let mut x = pooled_maps;
        let mut channels = self.config.conv[0].filters;
        for ci in 1..self.conv.len() {
            let side = self.sizes[2 * ci];
            let f = self.config.conv[ci].kernel;
            let (_, mut out) = conv_forward(&x, batch, side, channels, f, &self.conv[ci].weights, &self.conv[ci].bias);
            relu_in_place(&mut out);
            let (p, _) = maxpool_forward(&out, batch, side - f + 1, self.config.conv[ci].filters);
            x = p;
            channels = self.config.conv[ci].filters;
        }
        dense_eval(self, x, batch)
    }
}

fn dense_eval(net: &Network, mut x: Vec<f64>, batch: usize) -> Vec<f64> {
    let last = net.dense.len() - 1;
    for (li, layer) in net.dense.iter().enumerate() {
        let n_out = layer.bias.len();
        let n_in = x.len() / batch;
        let mut y = Vec::with_capacity(batch * n_out);
        for _ in 0..batch {
            y.extend_from_slice(&layer.bias);
        }
        gemm(batch, n_in, n_out, &x, false, &layer.weights, true, &mut y, 1.0);
        if li < last {
            relu_in_place(&mut y);
        }
        x = y;
    }
    softmax_rows(&x, net.config.classes)
}

fn run_forward(
    net: &Network,
    inputs: &[f64],
    batch: usize,
    mut dropout_rng: Option<&mut ChaCha8Rng>,
    keep_cache: bool,
) -> (Vec<f64>, Option<ForwardCache>) {
    let cfg = &net.config;
    let mut conv_caches = Vec::with_capacity(net.conv.len());
    let mut x: Vec<f64> = inputs.to_vec();
    let mut channels = cfg.bands;
    for (ci, layer) in net.conv.iter().enumerate() {
        let side = net.sizes[2 * ci];
        let f = cfg.conv[ci].kernel;
        let filters = cfg.conv[ci].filters;
        let (cols, mut out) = conv_forward(&x, batch, side, channels, f, &layer.weights, &layer.bias);
        relu_in_place(&mut out);
        let (p, argmax) = maxpool_forward(&out, batch, side - f + 1, filters);
        debug_assert_eq!(pooled(side - f + 1), net.sizes[2 * ci + 2]);
        if keep_cache {
            conv_caches.push(ConvCache {
                side_in: side,
                channels_in: channels,
                cols,
                out,
                argmax,
            });
        }
        x = p;
        channels = filters;
    }

    if !keep_cache {
        return (dense_eval(net, x, batch), None);
    }

    let last = net.dense.len() - 1;
    let keep = 1.0 - cfg.dropout;
    let mut dense_in = Vec::with_capacity(net.dense.len());
    let mut hidden = Vec::with_capacity(last);
    let mut masks = Vec::with_capacity(last);
    for (li, layer) in net.dense.iter().enumerate() {
        let n_out = layer.bias.len();
        let n_in = x.len() / batch;
        let mut y = Vec::with_capacity(batch * n_out);
        for _ in 0..batch {
            y.extend_from_slice(&layer.bias);
        }
        gemm(batch, n_in, n_out, &x, false, &layer.weights, true, &mut y, 1.0);
        dense_in.push(x);
        if li < last {
            relu_in_place(&mut y);
            let mask = dropout_rng.as_deref_mut().map(|rng| {
                (0..y.len())
                    .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect::<Vec<f64>>()
            });
            let after = match &mask {
                Some(m) => y.iter().zip(m).map(|(v, m)| v * m).collect(),
                None => y.clone(),
            };
            hidden.push(y);
            masks.push(mask);
            x = after;
        } else {
            x = y;
        }
    }
    let probs = softmax_rows(&x, cfg.classes);
    let cache = ForwardCache {
        batch,
        conv: conv_caches,
        dense_in,
        hidden,
        masks,
        probs: probs.clone(),
    };
    (probs, Some(cache))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::config::ConvSpec;
    use crate::nn::ops::{cross_entropy, one_hot};

    fn mini() -> NetworkConfig {
        NetworkConfig {
            patch_size: 5,
            bands: 3,
            classes: 2,
            conv: vec![ConvSpec { filters: 4, kernel: 3 }, ConvSpec { filters: 6, kernel: 2 }],
            dense: vec![8, 4],
            dropout: 0.5,
            init: InitScheme::Scaled,
        }
    }

    fn inputs(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_for(seed, 99);
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn default_shapes_and_zero_bias() {
        let net = Network::init(NetworkConfig::new(162, 5), 0).unwrap();
        assert_eq!(net.feature_sizes(), &[9, 5, 3, 1, 1]);
        let shapes: Vec<(usize, usize)> = net.layers().map(|l| (l.weights.len(), l.bias.len())).collect();
        assert_eq!(
            shapes,
            vec![(100 * 25 * 162, 100), (200 * 9 * 100, 200), (200 * 200, 200), (100 * 200, 100), (5 * 100, 5)]
        );
        assert!(net.layers().all(|l| l.bias.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn eval_rows_are_distributions_and_deterministic() {
        let net = Network::init(mini(), 3).unwrap();
        let x = inputs(7 * 75, 1);
        let p = net.forward_eval(&x, 7).unwrap();
        for row in p.chunks(2) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
        assert_eq!(p, net.forward_eval(&x, 7).unwrap());
    }

    #[test]
    fn zero_parameters_give_uniform() {
        let mut net = Network::init(mini(), 3).unwrap();
        for l in net.layers_mut() {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        let p = net.forward_eval(&inputs(75, 2), 1).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn logit_gradient_is_probs_minus_target() {
        // with a single identity-like output layer the bias gradient equals (p - y) / b
        let mut net = Network::init(mini(), 5).unwrap();
        let x = inputs(2 * 75, 4);
        let cache = net.forward_train(&x, 2, false).unwrap();
        let y = one_hot(&[1, 2], 2);
        let g = net.backward(&cache, &y).unwrap();
        let out_bias = &g.dense.last().unwrap().bias;
        for c in 0..2 {
            let expect = (cache.probs()[c] - y[c] + cache.probs()[2 + c] - y[2 + c]) / 2.0;
            assert!((out_bias[c] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn dead_relu_gives_zero_conv_gradient() {
        let mut net = Network::init(mini(), 5).unwrap();
        // a strongly negative bias kills every first-layer unit
        net.conv[0].bias.iter_mut().for_each(|b| *b = -1e3);
        let x = inputs(3 * 75, 8);
        let cache = net.forward_train(&x, 3, false).unwrap();
        let g = net.backward(&cache, &one_hot(&[1, 2, 1], 2)).unwrap();
        assert!(g.conv[0].weights.iter().all(|&v| v == 0.0));
        assert!(g.conv[0].bias.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dropout_changes_train_pass_only() {
        let mut net = Network::init(mini(), 5).unwrap();
        let x = inputs(4 * 75, 3);
        let eval = net.forward_eval(&x, 4).unwrap();
        let plain = net.forward_train(&x, 4, false).unwrap();
        assert_eq!(plain.probs(), &eval[..]);
        let masked = net.forward_train(&x, 4, true).unwrap();
        assert!(masked.masks.iter().all(|m| m.as_ref().unwrap().iter().all(|&v| v == 0.0 || v == 2.0)));
    }

    #[test]
    fn sgd_cases() {
        let mut net = Network::init(mini(), 1).unwrap();
        let before = net.clone();
        let zero = Network::zeros(net.config()).unwrap();
        net.sgd_step(&zero, 0.1).unwrap();
        assert_eq!(net, before);

        let mut g = Network::zeros(net.config()).unwrap();
        net.dense[0].weights[0] = 1.0;
        g.dense[0].weights[0] = 2.0;
        net.sgd_step(&g, 0.1).unwrap();
        assert!((net.dense[0].weights[0] - 0.8).abs() < 1e-15);

        g.dense[0].weights[1] = f64::NAN;
        assert!(matches!(net.sgd_step(&g, 0.1), Err(Error::Divergence(_))));
    }

    #[test]
    fn loss_decreases_along_negative_gradient() {
        let mut net = Network::init(mini(), 11).unwrap();
        let x = inputs(6 * 75, 12);
        let y = one_hot(&[1, 2, 2, 1, 1, 2], 2);
        let cache = net.forward_train(&x, 6, false).unwrap();
        let l0 = cross_entropy(&y, cache.probs(), 2);
        let g = net.backward(&cache, &y).unwrap();
        net.sgd_step(&g, 1e-3).unwrap();
        let l1 = cross_entropy(&y, &net.forward_eval(&x, 6).unwrap(), 2);
        assert!(l1 < l0);
    }
}
