use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::{BatchNorm, Conv, Flatten, Linear, Param, Pass, Relu};
use super::real::Real;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::fusion::MAX_LEN;

pub const NUM_CLASSES: usize = 3;
pub const CONV_CHANNELS: [usize; 3] = [16, 32, 64];
pub const KERNEL: usize = 3;
pub const PADDING: usize = 1;

/// The two input layouts: `B×1×120` and `B×1×2×120`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Architecture {
    #[serde(rename = "1d")]
    OneD,
    #[serde(rename = "2d")]
    TwoD,
}

impl Architecture {
    pub fn input_rows(self) -> usize {
        match self {
            Architecture::OneD => 1,
            Architecture::TwoD => 2,
        }
    }

    /// Input shape for a batch of `batch` tweets.
    pub fn input_shape(self, batch: usize) -> Vec<usize> {
        match self {
            Architecture::OneD => vec![batch, 1, MAX_LEN],
            Architecture::TwoD => vec![batch, 1, 2, MAX_LEN],
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Architecture::OneD => "1d",
            Architecture::TwoD => "2d",
        }
    }

    fn dims(self) -> usize {
        self.input_rows()
    }
}

impl From<crate::fusion::Mode> for Architecture {
    fn from(m: crate::fusion::Mode) -> Self {
        match m {
            crate::fusion::Mode::OneD => Architecture::OneD,
            crate::fusion::Mode::TwoD => Architecture::TwoD,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Layer<T> {
    Conv(Conv<T>),
    BatchNorm(BatchNorm<T>),
    Relu(Relu),
    Flatten(Flatten),
    Linear(Linear<T>),
}

impl<T: Real> Layer<T> {
    /// Display type, e.g. `Conv1d` or `BatchNorm2d`.
    pub fn kind(&self) -> String {
        match self {
            Layer::Conv(c) => format!("Conv{}d", c.dims),
            Layer::BatchNorm(b) => format!("BatchNorm{}d", b.dims),
            Layer::Relu(_) => "ReLU".into(),
            Layer::Flatten(_) => "Flatten".into(),
            Layer::Linear(_) => "Linear".into(),
        }
    }

    fn forward(&mut self, name: &str, x: &Tensor<T>, pass: Pass) -> Result<Tensor<T>> {
        match self {
            Layer::Conv(l) => l.forward(name, x, pass),
            Layer::BatchNorm(l) => l.forward(name, x, pass),
            Layer::Relu(l) => Ok(l.forward(x, pass)),
            Layer::Flatten(l) => Ok(l.forward(x)),
            Layer::Linear(l) => l.forward(name, x, pass),
        }
    }

    fn backward(&mut self, name: &str, dy: &Tensor<T>) -> Result<Tensor<T>> {
        match self {
            Layer::Conv(l) => l.backward(name, dy),
            Layer::BatchNorm(l) => l.backward(name, dy),
            Layer::Relu(l) => l.backward(name, dy),
            Layer::Flatten(l) => l.backward(name, dy),
            Layer::Linear(l) => l.backward(name, dy),
        }
    }

    /// Trainable parameters as (suffix, param), in a fixed order.
    fn params(&self) -> Vec<(&'static str, &Param<T>)> {
        match self {
            Layer::Conv(l) => vec![("weight", &l.weight), ("bias", &l.bias)],
            Layer::BatchNorm(l) => vec![("weight", &l.gamma), ("bias", &l.beta)],
            Layer::Linear(l) => vec![("weight", &l.weight), ("bias", &l.bias)],
            Layer::Relu(_) | Layer::Flatten(_) => Vec::new(),
        }
    }

    fn params_mut(&mut self) -> Vec<(&'static str, &mut Param<T>)> {
        match self {
            Layer::Conv(l) => vec![("weight", &mut l.weight), ("bias", &mut l.bias)],
            Layer::BatchNorm(l) => vec![("weight", &mut l.gamma), ("bias", &mut l.beta)],
            Layer::Linear(l) => vec![("weight", &mut l.weight), ("bias", &mut l.bias)],
            Layer::Relu(_) | Layer::Flatten(_) => Vec::new(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|(_, p)| p.value.len()).sum()
    }

    fn cast<U: Real>(&self) -> Layer<U> {
        match self {
            Layer::Conv(l) => Layer::Conv(l.cast()),
            Layer::BatchNorm(l) => Layer::BatchNorm(l.cast()),
            Layer::Relu(_) => Layer::Relu(Relu::default()),
            Layer::Flatten(_) => Layer::Flatten(Flatten::default()),
            Layer::Linear(l) => Layer::Linear(l.cast()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetMode {
    Training,
    Evaluation,
}

/// One row of a layer summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSummary {
    pub name: String,
    pub kind: String,
    pub output_shape: Vec<usize>,
    pub trainable_params: usize,
}

/// Named tensor view used by checkpoints: trainable parameters and
/// batch-norm running statistics.
pub struct NamedTensor<'a, T> {
    pub name: String,
    pub tensor: &'a Tensor<T>,
    pub trainable: bool,
}

/// Conv→BN→ReLU ×3, flatten, linear.
#[derive(Debug, Clone)]
pub struct Network<T> {
    arch: Architecture,
    layers: Vec<(String, Layer<T>)>,
    mode: NetMode,
    update_running_stats: bool,
    ready_for_backward: bool,
}

impl<T: Real> Network<T> {
    pub fn build(arch: Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = arch.dims();
        let mut layers = Vec::new();
        let mut in_ch = 1;
        for (i, &out_ch) in CONV_CHANNELS.iter().enumerate() {
            let n = i + 1;
            layers.push((format!("conv{n}"), Layer::Conv(Conv::new(dims, in_ch, out_ch, KERNEL, PADDING, &mut rng))));
            layers.push((format!("bn{n}"), Layer::BatchNorm(BatchNorm::new(dims, out_ch))));
            layers.push((format!("relu{n}"), Layer::Relu(Relu::default())));
            in_ch = out_ch;
        }
        let features = in_ch * arch.input_rows() * MAX_LEN;
        layers.push(("flatten".into(), Layer::Flatten(Flatten::default())));
        layers.push(("fc".into(), Layer::Linear(Linear::new(features, NUM_CLASSES, &mut rng))));
        Network {
            arch,
            layers,
            mode: NetMode::Training,
            update_running_stats: true,
            ready_for_backward: false,
        }
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn layers(&self) -> impl Iterator<Item = (&str, &Layer<T>)> {
        self.layers.iter().map(|(n, l)| (n.as_str(), l))
    }

    pub fn layer_mut(&mut self, name: &str) -> Option<&mut Layer<T>> {
        self.layers.iter_mut().find(|(n, _)| n == name).map(|(_, l)| l)
    }

    pub fn mode(&self) -> NetMode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: NetMode) {
        self.mode = mode;
    }

    /// Freezes (or unfreezes) batch-norm running statistics during training
    /// passes.
    pub fn set_update_running_stats(&mut self, on: bool) {
        self.update_running_stats = on;
    }

    fn pass(&self) -> Pass {
        match self.mode {
            NetMode::Training => Pass {
                train: true,
                update_running: self.update_running_stats,
            },
            NetMode::Evaluation => Pass::EVAL,
        }
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        let shape = x.shape();
        let expected = self.arch.input_shape(shape.first().copied().unwrap_or(0).max(1));
        if shape.len() != expected.len() || shape[0] == 0 || shape[1..] != expected[1..] {
            let want = match self.arch {
                Architecture::OneD => format!("[B, 1, {MAX_LEN}]"),
                Architecture::TwoD => format!("[B, 1, 2, {MAX_LEN}]"),
            };
            return Err(Error::Shape {
                layer: self.layers[0].0.clone(),
                expected: want,
                actual: shape.to_vec(),
            });
        }
        Ok(())
    }

    /// Logits `B×3`. Training mode uses batch statistics and caches
    /// intermediates for [`Network::backward`].
    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.forward_trace(x)?.pop().expect("network has layers"))
    }

    /// Output of every layer, in order.
    pub fn forward_trace(&mut self, x: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        self.check_input(x)?;
        let pass = self.pass();
        self.ready_for_backward = false;
        let mut outputs: Vec<Tensor<T>> = Vec::with_capacity(self.layers.len());
        for (name, layer) in &mut self.layers {
            let input = outputs.last().unwrap_or(x);
            let y = layer.forward(name, input, pass)?;
            outputs.push(y);
        }
        self.ready_for_backward = pass.train;
        Ok(outputs)
    }

    /// Populates every parameter gradient from `dLoss/dLogits` and returns
    /// the gradient with respect to the input.
    pub fn backward(&mut self, dlogits: &Tensor<T>) -> Result<Tensor<T>> {
        if !self.ready_for_backward {
            return Err(Error::State("backward requires a preceding training-mode forward".into()));
        }
        let mut grad = dlogits.clone();
        for (name, layer) in self.layers.iter_mut().rev() {
            grad = layer.backward(name, &grad)?;
        }
        Ok(grad)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|(_, l)| l.param_count()).sum()
    }

    /// Trainable parameters as (`layer.suffix`, param).
    pub fn params(&self) -> Vec<(String, &Param<T>)> {
        self.layers
            .iter()
            .flat_map(|(n, l)| l.params().into_iter().map(move |(s, p)| (format!("{n}.{s}"), p)))
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<(String, &mut Param<T>)> {
        self.layers
            .iter_mut()
            .flat_map(|(n, l)| l.params_mut().into_iter().map(move |(s, p)| (format!("{n}.{s}"), p)))
            .collect()
    }

    /// Trainable parameters followed, per batch-norm layer, by its running
    /// statistics.
    pub fn named_tensors(&self) -> Vec<NamedTensor<'_, T>> {
        let mut out = Vec::new();
        for (n, l) in &self.layers {
            for (s, p) in l.params() {
                out.push(NamedTensor {
                    name: format!("{n}.{s}"),
                    tensor: &p.value,
                    trainable: true,
                });
            }
            if let Layer::BatchNorm(bn) = l {
                out.push(NamedTensor {
                    name: format!("{n}.running_mean"),
                    tensor: &bn.running_mean,
                    trainable: false,
                });
                out.push(NamedTensor {
                    name: format!("{n}.running_var"),
                    tensor: &bn.running_var,
                    trainable: false,
                });
            }
        }
        out
    }

    /// Mutable access to a tensor listed by [`Network::named_tensors`].
    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        let (layer, suffix) = name.split_once('.')?;
        match (self.layer_mut(layer)?, suffix) {
            (Layer::Conv(c), "weight") => Some(&mut c.weight.value),
            (Layer::Conv(c), "bias") => Some(&mut c.bias.value),
            (Layer::Linear(c), "weight") => Some(&mut c.weight.value),
            (Layer::Linear(c), "bias") => Some(&mut c.bias.value),
            (Layer::BatchNorm(b), "weight") => Some(&mut b.gamma.value),
            (Layer::BatchNorm(b), "bias") => Some(&mut b.beta.value),
            (Layer::BatchNorm(b), "running_mean") => Some(&mut b.running_mean),
            (Layer::BatchNorm(b), "running_var") => Some(&mut b.running_var),
            _ => None,
        }
    }

    /// Per-layer output shapes for a batch of zeros, without touching
    /// running statistics.
    pub fn summary(&self, batch: usize) -> Result<Vec<LayerSummary>> {
        let mut probe = self.clone();
        probe.set_mode(NetMode::Evaluation);
        let outputs = probe.forward_trace(&Tensor::zeros(&self.arch.input_shape(batch)))?;
        Ok(self
            .layers
            .iter()
            .zip(outputs)
            .map(|((name, layer), y)| LayerSummary {
                name: name.clone(),
                kind: layer.kind(),
                output_shape: y.shape().to_vec(),
                trainable_params: layer.param_count(),
            })
            .collect())
    }

    /// Copy with every tensor converted to another element type.
    pub fn cast<U: Real>(&self) -> Network<U> {
        Network {
            arch: self.arch,
            layers: self.layers.iter().map(|(n, l)| (n.clone(), l.cast())).collect(),
            mode: self.mode,
            update_running_stats: self.update_running_stats,
            ready_for_backward: false,
        }
    }
}

pub fn build_model_1d(seed: u64) -> Network<f32> {
    Network::build(Architecture::OneD, seed)
}

pub fn build_model_2d(seed: u64) -> Network<f32> {
    Network::build(Architecture::TwoD, seed)
}
