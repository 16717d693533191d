//! Network assembly, forward/backward passes, and parameter traversal.

use crate::error::{Error, Result};
use crate::model::layers::{Batch, BatchNorm, BatchNormCache, Conv1dFreq, Dense, PRelu};
use crate::model::{Arch, ModelConfig};
use crate::num::{scalar, Scalar};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone)]
pub enum Layer<T> {
    Conv(Conv1dFreq<T>),
    Dense(Dense<T>),
    PRelu(PRelu<T>),
    Norm(BatchNorm<T>),
    Flatten,
}

impl<T: Scalar> Layer<T> {
    fn kind(&self) -> &'static str {
        match self {
            Layer::Conv(_) => "conv",
            Layer::Dense(_) => "dense",
            Layer::PRelu(_) => "prelu",
            Layer::Norm(_) => "batchnorm",
            Layer::Flatten => "flatten",
        }
    }
}

/// Per-layer cached state from the forward pass.
#[derive(Debug)]
pub enum LayerCache<T> {
    Input(Batch<T>),
    Norm(BatchNormCache<T>),
    Shape { channels: usize, len: usize },
    None,
}

/// Per-layer parameter gradients, mirroring the layer list.
#[derive(Debug, Clone)]
pub enum LayerGrads<T> {
    Conv { weight: Vec<T>, bias: Vec<T> },
    Dense { weight: Vec<T>, bias: Vec<T> },
    PRelu { slopes: Vec<T> },
    Norm { scale: Vec<T>, shift: Vec<T> },
    None,
}

#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub layers: Vec<LayerGrads<T>>,
}

impl<T: Scalar> Gradients<T> {
    /// Parameter-gradient slices in declaration order.
    pub fn slices(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for lg in &self.layers {
            match lg {
                LayerGrads::Conv { weight, bias } | LayerGrads::Dense { weight, bias } => {
                    out.push(weight.as_slice());
                    out.push(bias.as_slice());
                }
                LayerGrads::PRelu { slopes } => out.push(slopes.as_slice()),
                LayerGrads::Norm { scale, shift } => {
                    out.push(scale.as_slice());
                    out.push(shift.as_slice());
                }
                LayerGrads::None => {}
            }
        }
        out
    }

    pub fn has_non_finite(&self) -> bool {
        self.slices()
            .iter()
            .any(|s| s.iter().any(|v| !v.is_finite()))
    }
}

/// A stack of layers with its structural metadata.
#[derive(Debug, Clone)]
pub struct Network<T> {
    pub config: ModelConfig,
    pub layers: Vec<Layer<T>>,
    /// Human-readable layer names, for divergence reports.
    pub names: Vec<String>,
    /// Channels of the network input (context frames count as channels).
    pub input_channels: usize,
    /// Per-channel input length (frequency bins).
    pub input_len: usize,
    pub output_dim: usize,
}

impl<T: Scalar> Network<T> {
    /// Builds and initializes a network for `bins` frequency bins and the
    /// given temporal context. Weights use a fan-in scaled normal matched to
    /// the initial PReLU slope of 0.25; biases start at zero.
    pub fn build(config: &ModelConfig, bins: usize, context: usize, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let stack_frames = 2 * context + 1;
        let input_channels = config.input_channels * stack_frames;
        let target_dim = match config.arch {
            Arch::RiCnn | Arch::RiDnn => 2 * bins,
            Arch::LpsDnnBaseline => bins,
        };
        let prelu_slope = 0.25;
        let mut layers = Vec::new();
        let mut names = Vec::new();

        let add_norm_prelu =
            |layers: &mut Vec<Layer<T>>, names: &mut Vec<String>, channels: usize, tag: String| {
                if config.use_batch_norm {
                    layers.push(Layer::Norm(BatchNorm::new(channels)));
                    names.push(format!("batchnorm{tag}"));
                }
                layers.push(Layer::PRelu(PRelu::new(channels, prelu_slope)));
                names.push(format!("prelu{tag}"));
            };

        match config.arch {
            Arch::RiCnn => {
                let nf = config.filters_per_layer;
                let mut in_ch = input_channels;
                for i in 0..config.conv_layers {
                    let mut conv = Conv1dFreq::zeros(nf, in_ch, config.filter_len)?;
                    init_conv(&mut conv, prelu_slope, rng);
                    layers.push(Layer::Conv(conv));
                    names.push(format!("conv{}", i + 1));
                    add_norm_prelu(&mut layers, &mut names, nf, format!("_c{}", i + 1));
                    in_ch = nf;
                }
                layers.push(Layer::Flatten);
                names.push("flatten".into());
                let mut in_dim = nf * bins;
                for i in 0..config.dense_layers {
                    let mut dense = Dense::zeros(config.dense_width, in_dim);
                    init_dense(&mut dense, prelu_slope, rng);
                    layers.push(Layer::Dense(dense));
                    names.push(format!("dense{}", i + 1));
                    add_norm_prelu(
                        &mut layers,
                        &mut names,
                        config.dense_width,
                        format!("_d{}", i + 1),
                    );
                    in_dim = config.dense_width;
                }
                let mut out = Dense::zeros(target_dim, in_dim);
                init_dense(&mut out, prelu_slope, rng);
                layers.push(Layer::Dense(out));
                names.push("output".into());
            }
            Arch::RiDnn | Arch::LpsDnnBaseline => {
                layers.push(Layer::Flatten);
                names.push("flatten".into());
                let mut in_dim = input_channels * bins;
                for i in 0..config.dnn_hidden_layers {
                    let mut dense = Dense::zeros(config.dnn_width, in_dim);
                    init_dense(&mut dense, prelu_slope, rng);
                    layers.push(Layer::Dense(dense));
                    names.push(format!("dense{}", i + 1));
                    add_norm_prelu(
                        &mut layers,
                        &mut names,
                        config.dnn_width,
                        format!("_d{}", i + 1),
                    );
                    in_dim = config.dnn_width;
                }
                let mut out = Dense::zeros(target_dim, in_dim);
                init_dense(&mut out, prelu_slope, rng);
                layers.push(Layer::Dense(out));
                names.push("output".into());
            }
        }

        Ok(Network {
            config: config.clone(),
            layers,
            names,
            input_channels,
            input_len: bins,
            output_dim: target_dim,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_channels * self.input_len
    }

    /// Forward pass. In training mode batch statistics are computed from the
    /// batch and returned in the cache; running statistics are untouched (the
    /// training loop folds them in explicitly). Any non-finite activation
    /// aborts with the offending layer's name.
    pub fn forward(&self, input: &Batch<T>, mode: Mode) -> Result<(Batch<T>, Vec<LayerCache<T>>)> {
        if input.channels != self.input_channels || input.len != self.input_len {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                got: input.channels * input.len,
            });
        }
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut current = input.clone();
        for (layer, name) in self.layers.iter().zip(&self.names) {
            let next = match layer {
                Layer::Conv(conv) => {
                    let y = conv.forward(&current)?;
                    caches.push(LayerCache::Input(std::mem::replace(&mut current, y)));
                    &current
                }
                Layer::Dense(dense) => {
                    let y = dense.forward(&current)?;
                    caches.push(LayerCache::Input(std::mem::replace(&mut current, y)));
                    &current
                }
                Layer::PRelu(prelu) => {
                    let y = prelu.forward(&current)?;
                    caches.push(LayerCache::Input(std::mem::replace(&mut current, y)));
                    &current
                }
                Layer::Norm(norm) => match mode {
                    Mode::Train => {
                        let (y, cache) = norm.forward_train(&current)?;
                        caches.push(LayerCache::Norm(cache));
                        current = y;
                        &current
                    }
                    Mode::Infer => {
                        let y = norm.forward_infer(&current)?;
                        caches.push(LayerCache::None);
                        current = y;
                        &current
                    }
                },
                Layer::Flatten => {
                    caches.push(LayerCache::Shape {
                        channels: current.channels,
                        len: current.len,
                    });
                    current = Batch {
                        data: std::mem::take(&mut current.data),
                        batch: current.batch,
                        channels: current.channels * current.len,
                        len: 1,
                    };
                    &current
                }
            };
            if next.has_non_finite() {
                return Err(Error::NumericalDivergence(name.clone()));
            }
        }
        Ok((current, caches))
    }

    /// Backward pass through the whole stack; `grad_out` is the gradient of
    /// the objective at the network output. Returns parameter gradients in
    /// layer order.
    pub fn backward(&self, caches: &[LayerCache<T>], grad_out: &Batch<T>) -> Result<Gradients<T>> {
        let mut grads: Vec<LayerGrads<T>> = Vec::with_capacity(self.layers.len());
        let mut g = grad_out.clone();
        for (layer, cache) in self.layers.iter().zip(caches.iter()).rev() {
            let lg = match (layer, cache) {
                (Layer::Conv(conv), LayerCache::Input(x)) => {
                    let (gin, gw, gb) = conv.backward(x, &g);
                    g = gin;
                    LayerGrads::Conv {
                        weight: gw,
                        bias: gb,
                    }
                }
                (Layer::Dense(dense), LayerCache::Input(x)) => {
                    let (gin, gw, gb) = dense.backward(x, &g);
                    g = gin;
                    LayerGrads::Dense {
                        weight: gw,
                        bias: gb,
                    }
                }
                (Layer::PRelu(prelu), LayerCache::Input(x)) => {
                    let (gin, gs) = prelu.backward(x, &g);
                    g = gin;
                    LayerGrads::PRelu { slopes: gs }
                }
                (Layer::Norm(norm), LayerCache::Norm(cache)) => {
                    let (gin, gscale, gshift) = norm.backward(cache, &g);
                    g = gin;
                    LayerGrads::Norm {
                        scale: gscale,
                        shift: gshift,
                    }
                }
                (Layer::Flatten, LayerCache::Shape { channels, len }) => {
                    g = Batch {
                        data: std::mem::take(&mut g.data),
                        batch: g.batch,
                        channels: *channels,
                        len: *len,
                    };
                    LayerGrads::None
                }
                (layer, _) => {
                    return Err(Error::InvalidArgument(format!(
                        "cache mismatch at {} layer (was forward run in training mode?)",
                        layer.kind()
                    )))
                }
            };
            grads.push(lg);
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    /// Folds cached batch statistics into every batch-norm layer's running
    /// estimates (call once per training step).
    pub fn update_running_stats(&mut self, caches: &[LayerCache<T>]) {
        for (layer, cache) in self.layers.iter_mut().zip(caches) {
            if let (Layer::Norm(norm), LayerCache::Norm(c)) = (layer, cache) {
                norm.update_running(c);
            }
        }
    }

    /// Mutable views of all optimizer parameters in declaration order.
    pub fn param_slices_mut(&mut self) -> Vec<&mut Vec<T>> {
        let mut out: Vec<&mut Vec<T>> = Vec::new();
        for layer in self.layers.iter_mut() {
            match layer {
                Layer::Conv(c) => {
                    out.push(&mut c.weight);
                    out.push(&mut c.bias);
                }
                Layer::Dense(d) => {
                    out.push(&mut d.weight);
                    out.push(&mut d.bias);
                }
                Layer::PRelu(p) => out.push(&mut p.slopes),
                Layer::Norm(n) => {
                    out.push(&mut n.scale);
                    out.push(&mut n.shift);
                }
                Layer::Flatten => {}
            }
        }
        out
    }

    /// Immutable views of all optimizer parameters in declaration order.
    pub fn param_slices(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Conv(c) => {
                    out.push(&c.weight);
                    out.push(&c.bias);
                }
                Layer::Dense(d) => {
                    out.push(&d.weight);
                    out.push(&d.bias);
                }
                Layer::PRelu(p) => out.push(&p.slopes),
                Layer::Norm(n) => {
                    out.push(&n.scale);
                    out.push(&n.shift);
                }
                Layer::Flatten => {}
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// All persisted tensors (optimizer parameters plus batch-norm running
    /// statistics) as (dims, data) in declaration order.
    pub fn tensors(&self) -> Vec<(Vec<usize>, Vec<f64>)> {
        let mut out = Vec::new();
        let to64 = |v: &[T]| {
            v.iter()
                .map(|x| x.to_f64().unwrap_or(0.0))
                .collect::<Vec<f64>>()
        };
        for layer in &self.layers {
            match layer {
                Layer::Conv(c) => {
                    out.push((vec![c.out_ch, c.in_ch, c.taps], to64(&c.weight)));
                    out.push((vec![c.out_ch], to64(&c.bias)));
                }
                Layer::Dense(d) => {
                    out.push((vec![d.out_dim, d.in_dim], to64(&d.weight)));
                    out.push((vec![d.out_dim], to64(&d.bias)));
                }
                Layer::PRelu(p) => out.push((vec![p.slopes.len()], to64(&p.slopes))),
                Layer::Norm(n) => {
                    out.push((vec![n.scale.len()], to64(&n.scale)));
                    out.push((vec![n.shift.len()], to64(&n.shift)));
                    out.push((vec![n.running_mean.len()], to64(&n.running_mean)));
                    out.push((vec![n.running_var.len()], to64(&n.running_var)));
                }
                Layer::Flatten => {}
            }
        }
        out
    }

    /// Loads tensors produced by [`Network::tensors`] back into the layers.
    pub fn load_tensors(&mut self, tensors: &[(Vec<usize>, Vec<f64>)]) -> Result<()> {
        let mut iter = tensors.iter();
        let mut take = |dims: Vec<usize>| -> Result<Vec<T>> {
            let (got_dims, data) = iter.next().ok_or(Error::Malformed {
                what: "checkpoint tensors",
                detail: "too few tensors".into(),
            })?;
            if *got_dims != dims {
                return Err(Error::Malformed {
                    what: "checkpoint tensor dims",
                    detail: format!("expected {dims:?}, got {got_dims:?}"),
                });
            }
            Ok(data.iter().map(|&v| scalar(v)).collect())
        };
        for layer in self.layers.iter_mut() {
            match layer {
                Layer::Conv(c) => {
                    c.weight = take(vec![c.out_ch, c.in_ch, c.taps])?;
                    c.bias = take(vec![c.out_ch])?;
                }
                Layer::Dense(d) => {
                    d.weight = take(vec![d.out_dim, d.in_dim])?;
                    d.bias = take(vec![d.out_dim])?;
                }
                Layer::PRelu(p) => {
                    p.slopes = take(vec![p.slopes.len()])?;
                }
                Layer::Norm(n) => {
                    n.scale = take(vec![n.scale.len()])?;
                    n.shift = take(vec![n.shift.len()])?;
                    n.running_mean = take(vec![n.running_mean.len()])?;
                    n.running_var = take(vec![n.running_var.len()])?;
                }
                Layer::Flatten => {}
            }
        }
        if iter.next().is_some() {
            return Err(Error::Malformed {
                what: "checkpoint tensors",
                detail: "too many tensors".into(),
            });
        }
        Ok(())
    }
}

fn init_conv<T: Scalar>(conv: &mut Conv1dFreq<T>, prelu_slope: f64, rng: &mut Rng) {
    let fan_in = (conv.in_ch * conv.taps) as f64;
    let std = (2.0 / ((1.0 + prelu_slope * prelu_slope) * fan_in)).sqrt();
    for w in conv.weight.iter_mut() {
        *w = scalar(std * rng.normal());
    }
}

fn init_dense<T: Scalar>(dense: &mut Dense<T>, prelu_slope: f64, rng: &mut Rng) {
    let fan_in = dense.in_dim as f64;
    let std = (2.0 / ((1.0 + prelu_slope * prelu_slope) * fan_in)).sqrt();
    for w in dense.weight.iter_mut() {
        *w = scalar(std * rng.normal());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_config() -> ModelConfig {
        ModelConfig {
            arch: Arch::RiCnn,
            conv_layers: 2,
            filters_per_layer: 4,
            filter_len: 5,
            dense_layers: 1,
            dense_width: 16,
            dnn_hidden_layers: 2,
            dnn_width: 8,
            use_batch_norm: true,
            input_channels: 2,
        }
    }

    fn random_input(rng: &mut Rng, batch: usize, channels: usize, len: usize) -> Batch<f64> {
        let mut b = Batch::zeros(batch, channels, len);
        for v in b.data.iter_mut() {
            *v = rng.normal();
        }
        b
    }

    #[test]
    fn builds_expected_shapes() {
        let mut rng = Rng::new(1);
        let net = Network::<f64>::build(&toy_config(), 17, 0, &mut rng).unwrap();
        assert_eq!(net.input_dim(), 2 * 17);
        assert_eq!(net.output_dim, 34);
        let mut rng2 = Rng::new(1);
        let mut dnn_cfg = toy_config();
        dnn_cfg.arch = Arch::LpsDnnBaseline;
        dnn_cfg.input_channels = 1;
        let dnn = Network::<f64>::build(&dnn_cfg, 17, 1, &mut rng2).unwrap();
        assert_eq!(dnn.input_dim(), 3 * 17);
        assert_eq!(dnn.output_dim, 17);
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = Rng::new(2);
        let net = Network::<f64>::build(&toy_config(), 9, 0, &mut rng).unwrap();
        let x = random_input(&mut rng, 3, 2, 9);
        let (a, _) = net.forward(&x, Mode::Infer).unwrap();
        let (b, _) = net.forward(&x, Mode::Infer).unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn zeroed_output_layer_emits_its_bias() {
        let mut rng = Rng::new(3);
        let mut net = Network::<f64>::build(&toy_config(), 9, 0, &mut rng).unwrap();
        // Zero the output layer weights and pin its bias.
        if let Some(Layer::Dense(out)) = net.layers.last_mut() {
            for w in out.weight.iter_mut() {
                *w = 0.0;
            }
            for (i, b) in out.bias.iter_mut().enumerate() {
                *b = i as f64 * 0.5;
            }
        } else {
            panic!("last layer should be dense");
        }
        let x = random_input(&mut rng, 2, 2, 9);
        let (y, _) = net.forward(&x, Mode::Infer).unwrap();
        for b in 0..2 {
            for (i, v) in y.sample(b).iter().enumerate() {
                assert_eq!(*v, i as f64 * 0.5);
            }
        }
        // In target units the dead network emits the denormalized bias.
        let stats = crate::dataset::norm::NormStats {
            mean: (0..18).map(|i| i as f64 * 0.1).collect(),
            std: (0..18).map(|i| 1.0 + i as f64 * 0.05).collect(),
        };
        let mut denorm = y.sample(0).to_vec();
        stats.denormalize_in_place(&mut denorm);
        for (i, v) in denorm.iter().enumerate() {
            let expect = (i as f64 * 0.5) * (1.0 + i as f64 * 0.05) + i as f64 * 0.1;
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn single_conv_layer_matches_hand_composition() {
        // conv -> prelu with known weights equals the by-hand computation.
        let cfg = ModelConfig {
            arch: Arch::RiCnn,
            conv_layers: 1,
            filters_per_layer: 1,
            filter_len: 3,
            dense_layers: 1,
            dense_width: 2,
            dnn_hidden_layers: 1,
            dnn_width: 2,
            use_batch_norm: false,
            input_channels: 1,
        };
        let mut rng = Rng::new(4);
        let mut net = Network::<f64>::build(&cfg, 4, 0, &mut rng).unwrap();
        // Layer stack: conv1, prelu, flatten, dense1, prelu, output.
        let (conv_w, slope) = (vec![0.0, 1.0, -1.0], 0.25);
        match &mut net.layers[0] {
            Layer::Conv(c) => {
                c.weight.copy_from_slice(&conv_w);
                c.bias[0] = 0.1;
            }
            _ => panic!(),
        }
        let x = Batch {
            data: vec![1.0, 2.0, -3.0, 4.0],
            batch: 1,
            channels: 1,
            len: 4,
        };
        let (_, caches) = net.forward(&x, Mode::Infer).unwrap();
        // Pull out the activation after prelu (input cache of flatten is the
        // prelu output).
        let after_prelu = match &caches[2] {
            LayerCache::Shape { .. } => {
                // flatten caches only the shape; recompute by hand instead.
                let conv_out = [
                    0.1 + 1.0 * 1.0 - 1.0 * 2.0, // x[-1]=0 pad: w1*x0 + w2*x1
                    0.1 + 1.0 * 2.0 - 1.0 * -3.0,
                    0.1 + 1.0 * -3.0 - 1.0 * 4.0,
                    0.1 + 1.0 * 4.0,
                ];
                conv_out
                    .iter()
                    .map(|&v| if v < 0.0 { slope * v } else { v })
                    .collect::<Vec<f64>>()
            }
            _ => panic!("expected shape cache"),
        };
        // Compare against the cached dense input.
        let dense_in = match &caches[3] {
            LayerCache::Input(b) => b.data.clone(),
            _ => panic!("expected input cache"),
        };
        for (a, b) in dense_in.iter().zip(&after_prelu) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn divergence_names_the_layer() {
        let mut rng = Rng::new(5);
        let mut net = Network::<f64>::build(&toy_config(), 9, 0, &mut rng).unwrap();
        if let Layer::Conv(c) = &mut net.layers[0] {
            c.weight[0] = f64::NAN;
        }
        let x = random_input(&mut rng, 2, 2, 9);
        match net.forward(&x, Mode::Infer) {
            Err(Error::NumericalDivergence(name)) => assert_eq!(name, "conv1"),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn tensor_round_trip() {
        let mut rng = Rng::new(6);
        let net = Network::<f64>::build(&toy_config(), 9, 0, &mut rng).unwrap();
        let tensors = net.tensors();
        let mut rng2 = Rng::new(777);
        let mut other = Network::<f64>::build(&toy_config(), 9, 0, &mut rng2).unwrap();
        other.load_tensors(&tensors).unwrap();
        let x = random_input(&mut rng, 2, 2, 9);
        let (a, _) = net.forward(&x, Mode::Infer).unwrap();
        let (b, _) = other.forward(&x, Mode::Infer).unwrap();
        assert_eq!(a.data, b.data);
    }
}
