//! The fixed layer set: convolution (1D/2D), batch norm, ReLU, flatten and
//! linear, each with an analytic backward pass.

use rand::Rng;

use super::real::{matmul, Mat, Real};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Trainable tensor and its gradient (same shape).
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

impl<T: Real> Param<T> {
    pub fn new(value: Tensor<T>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Param { value, grad }
    }

    fn cast<U: Real>(&self) -> Param<U> {
        Param::new(self.value.cast())
    }
}

/// How a forward pass treats batch-norm statistics and caches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pass {
    /// Batch statistics and cached intermediates for backward.
    pub train: bool,
    /// Whether training passes fold batch statistics into the running ones.
    pub update_running: bool,
}

impl Pass {
    pub const TRAIN: Pass = Pass {
        train: true,
        update_running: true,
    };
    pub const EVAL: Pass = Pass {
        train: false,
        update_running: false,
    };
}

fn shape_err(layer: &str, expected: String, actual: &[usize]) -> Error {
    Error::Shape {
        layer: layer.to_string(),
        expected,
        actual: actual.to_vec(),
    }
}

fn uniform_init<T: Real, R: Rng>(rng: &mut R, shape: &[usize], fan_in: usize) -> Tensor<T> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| T::from_f64_lossy(rng.gen_range(-bound..bound)))
        .collect();
    Tensor::from_vec(shape, data)
}

/// Zero-padded, stride-1 convolution over one (`dims == 1`, input `B×C×L`)
/// or two (`dims == 2`, input `B×C×H×W`) spatial axes.
#[derive(Debug, Clone)]
pub struct Conv<T> {
    pub dims: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    /// (height, width); height is 1 for 1D.
    pub kernel: (usize, usize),
    pub padding: (usize, usize),
    pub weight: Param<T>,
    pub bias: Param<T>,
    cache: Option<ConvCache<T>>,
}

#[derive(Debug, Clone)]
struct ConvCache<T> {
    cols: Vec<T>,
    input_shape: Vec<usize>,
    out_hw: (usize, usize),
}

impl<T: Real> Conv<T> {
    /// Square kernel of size `k` with padding `pad` along every spatial axis.
    pub fn new<R: Rng>(dims: usize, in_channels: usize, out_channels: usize, k: usize, pad: usize, rng: &mut R) -> Self {
        assert!(dims == 1 || dims == 2);
        let (kernel, padding) = if dims == 1 { ((1, k), (0, pad)) } else { ((k, k), (pad, pad)) };
        let fan_in = in_channels * kernel.0 * kernel.1;
        let wshape: Vec<usize> = if dims == 1 {
            vec![out_channels, in_channels, k]
        } else {
            vec![out_channels, in_channels, k, k]
        };
        Conv {
            dims,
            in_channels,
            out_channels,
            kernel,
            padding,
            weight: Param::new(uniform_init(rng, &wshape, fan_in)),
            bias: Param::new(Tensor::zeros(&[out_channels])),
            cache: None,
        }
    }

    fn patch_len(&self) -> usize {
        self.in_channels * self.kernel.0 * self.kernel.1
    }

    /// (batch, height, width) of a valid input.
    fn input_dims(&self, name: &str, shape: &[usize]) -> Result<(usize, usize, usize)> {
        let ok = shape.len() == self.dims + 2 && shape[1] == self.in_channels && shape[0] > 0;
        if !ok {
            let expected = if self.dims == 1 {
                format!("[B, {}, L]", self.in_channels)
            } else {
                format!("[B, {}, H, W]", self.in_channels)
            };
            return Err(shape_err(name, expected, shape));
        }
        Ok(if self.dims == 1 {
            (shape[0], 1, shape[2])
        } else {
            (shape[0], shape[2], shape[3])
        })
    }

    fn out_hw(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.padding.0 + 1).saturating_sub(self.kernel.0),
            (w + 2 * self.padding.1 + 1).saturating_sub(self.kernel.1),
        )
    }

    fn im2col(&self, x: &[T], (h, w): (usize, usize), (oh, ow): (usize, usize), cols: &mut [T]) {
        let (kh, kw) = self.kernel;
        let (ph, pw) = (self.padding.0 as isize, self.padding.1 as isize);
        let hw = oh * ow;
        for c in 0..self.in_channels {
            let plane = &x[c * h * w..(c + 1) * h * w];
            for ki in 0..kh {
                for kj in 0..kw {
                    let row = &mut cols[((c * kh + ki) * kw + kj) * hw..][..hw];
                    for oy in 0..oh {
                        let iy = oy as isize + ki as isize - ph;
                        let dst = &mut row[oy * ow..(oy + 1) * ow];
                        if iy < 0 || iy >= h as isize {
                            dst.fill(T::zero());
                            continue;
                        }
                        let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                        for (ox, d) in dst.iter_mut().enumerate() {
                            let ix = ox as isize + kj as isize - pw;
                            *d = if ix < 0 || ix >= w as isize { T::zero() } else { src[ix as usize] };
                        }
                    }
                }
            }
        }
    }

    fn col2im(&self, cols: &[T], (h, w): (usize, usize), (oh, ow): (usize, usize), dx: &mut [T]) {
        let (kh, kw) = self.kernel;
        let (ph, pw) = (self.padding.0 as isize, self.padding.1 as isize);
        let hw = oh * ow;
        for c in 0..self.in_channels {
            let plane = &mut dx[c * h * w..(c + 1) * h * w];
            for ki in 0..kh {
                for kj in 0..kw {
                    let row = &cols[((c * kh + ki) * kw + kj) * hw..][..hw];
                    for oy in 0..oh {
                        let iy = oy as isize + ki as isize - ph;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let dst = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                        for (ox, &g) in row[oy * ow..(oy + 1) * ow].iter().enumerate() {
                            let ix = ox as isize + kj as isize - pw;
                            if ix >= 0 && ix < w as isize {
                                dst[ix as usize] = dst[ix as usize] + g;
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn forward(&mut self, name: &str, x: &Tensor<T>, pass: Pass) -> Result<Tensor<T>> {
        let (batch, h, w) = self.input_dims(name, x.shape())?;
        let (oh, ow) = self.out_hw(h, w);
        let (k, hw) = (self.patch_len(), oh * ow);
        let in_len = self.in_channels * h * w;
        let out_shape: Vec<usize> = if self.dims == 1 {
            vec![batch, self.out_channels, ow]
        } else {
            vec![batch, self.out_channels, oh, ow]
        };
        let mut out = Tensor::zeros(&out_shape);
        let mut cols = vec![T::zero(); batch * k * hw];
        let weight = Mat::new(self.weight.value.data(), self.out_channels, k);
        for b in 0..batch {
            let col_b = &mut cols[b * k * hw..(b + 1) * k * hw];
            self.im2col(&x.data()[b * in_len..(b + 1) * in_len], (h, w), (oh, ow), col_b);
            let out_b = &mut out.data_mut()[b * self.out_channels * hw..(b + 1) * self.out_channels * hw];
            matmul(weight, Mat::new(col_b, k, hw), out_b, false);
            for (o, row) in out_b.chunks_exact_mut(hw).enumerate() {
                let bias = self.bias.value.data()[o];
                row.iter_mut().for_each(|v| *v = *v + bias);
            }
        }
        self.cache = pass.train.then(|| ConvCache {
            cols,
            input_shape: x.shape().to_vec(),
            out_hw: (oh, ow),
        });
        Ok(out)
    }

    pub fn backward(&mut self, name: &str, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State(format!("{name}: backward called without a training forward pass")))?;
        let (oh, ow) = cache.out_hw;
        let batch = cache.input_shape[0];
        let (h, w) = if self.dims == 1 {
            (1, cache.input_shape[2])
        } else {
            (cache.input_shape[2], cache.input_shape[3])
        };
        let (k, hw) = (self.patch_len(), oh * ow);
        if dy.len() != batch * self.out_channels * hw {
            return Err(shape_err(name, format!("gradient of {} elements", batch * self.out_channels * hw), dy.shape()));
        }
        let in_len = self.in_channels * h * w;
        let mut dx = Tensor::zeros(&cache.input_shape);
        let mut dcols = vec![T::zero(); k * hw];
        self.weight.grad.fill(T::zero());
        let mut dbias = vec![0.0f64; self.out_channels];
        for b in 0..batch {
            let dy_b = &dy.data()[b * self.out_channels * hw..(b + 1) * self.out_channels * hw];
            let col_b = &cache.cols[b * k * hw..(b + 1) * k * hw];
            matmul(
                Mat::new(dy_b, self.out_channels, hw),
                Mat::new(col_b, k, hw).t(),
                self.weight.grad.data_mut(),
                true,
            );
            for (o, row) in dy_b.chunks_exact(hw).enumerate() {
                dbias[o] += row.iter().map(|v| v.as_f64()).sum::<f64>();
            }
            matmul(
                Mat::new(self.weight.value.data(), self.out_channels, k).t(),
                Mat::new(dy_b, self.out_channels, hw),
                &mut dcols,
                false,
            );
            self.col2im(&dcols, (h, w), (oh, ow), &mut dx.data_mut()[b * in_len..(b + 1) * in_len]);
        }
        for (g, v) in self.bias.grad.data_mut().iter_mut().zip(dbias) {
            *g = T::from_f64_lossy(v);
        }
        Ok(dx)
    }

    pub fn cast<U: Real>(&self) -> Conv<U> {
        Conv {
            dims: self.dims,
            in_channels: self.in_channels,
            out_channels: self.out_channels,
            kernel: self.kernel,
            padding: self.padding,
            weight: self.weight.cast(),
            bias: self.bias.cast(),
            cache: None,
        }
    }
}

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Per-channel batch normalization over batch and spatial axes.
#[derive(Debug, Clone)]
pub struct BatchNorm<T> {
    pub dims: usize,
    pub channels: usize,
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub eps: f64,
    pub momentum: f64,
    cache: Option<BnCache<T>>,
}

#[derive(Debug, Clone)]
struct BnCache<T> {
    x_hat: Vec<T>,
    inv_std: Vec<f64>,
    shape: Vec<usize>,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(dims: usize, channels: usize) -> Self {
        let mut gamma = Tensor::zeros(&[channels]);
        gamma.fill(T::one());
        let mut running_var = Tensor::zeros(&[channels]);
        running_var.fill(T::one());
        BatchNorm {
            dims,
            channels,
            gamma: Param::new(gamma),
            beta: Param::new(Tensor::zeros(&[channels])),
            running_mean: Tensor::zeros(&[channels]),
            running_var,
            eps: BN_EPS,
            momentum: BN_MOMENTUM,
            cache: None,
        }
    }

    fn layout(&self, name: &str, shape: &[usize]) -> Result<(usize, usize)> {
        if shape.len() != self.dims + 2 || shape[1] != self.channels || shape[0] == 0 {
            return Err(shape_err(
                name,
                format!("[B, {}, ...] with {} spatial axes", self.channels, self.dims),
                shape,
            ));
        }
        Ok((shape[0], shape[2..].iter().product()))
    }

    pub fn forward(&mut self, name: &str, x: &Tensor<T>, pass: Pass) -> Result<Tensor<T>> {
        let (batch, spatial) = self.layout(name, x.shape())?;
        let c_count = self.channels;
        let n = (batch * spatial) as f64;
        let mut y = Tensor::zeros(x.shape());
        let mut x_hat = if pass.train { vec![T::zero(); x.len()] } else { Vec::new() };
        let mut inv_stds = vec![0.0; c_count];
        let channel = |b: usize, c: usize| (b * c_count + c) * spatial;

        for c in 0..c_count {
            let (mean, inv_std) = if pass.train {
                let mut sum = 0.0;
                for b in 0..batch {
                    sum += x.data()[channel(b, c)..][..spatial].iter().map(|v| v.as_f64()).sum::<f64>();
                }
                let mean = sum / n;
                let mut sq = 0.0;
                for b in 0..batch {
                    sq += x.data()[channel(b, c)..][..spatial]
                        .iter()
                        .map(|v| (v.as_f64() - mean).powi(2))
                        .sum::<f64>();
                }
                let var = sq / n;
                if pass.update_running {
                    let unbiased = if n > 1.0 { sq / (n - 1.0) } else { var };
                    let m = self.momentum;
                    let rm = &mut self.running_mean.data_mut()[c];
                    *rm = T::from_f64_lossy((1.0 - m) * rm.as_f64() + m * mean);
                    let rv = &mut self.running_var.data_mut()[c];
                    *rv = T::from_f64_lossy((1.0 - m) * rv.as_f64() + m * unbiased);
                }
                (mean, 1.0 / (var + self.eps).sqrt())
            } else {
                let var = self.running_var.data()[c].as_f64();
                (self.running_mean.data()[c].as_f64(), 1.0 / (var + self.eps).sqrt())
            };
            inv_stds[c] = inv_std;
            let gamma = self.gamma.value.data()[c].as_f64();
            let beta = self.beta.value.data()[c].as_f64();
            for b in 0..batch {
                let off = channel(b, c);
                for s in 0..spatial {
                    let xh = (x.data()[off + s].as_f64() - mean) * inv_std;
                    if pass.train {
                        x_hat[off + s] = T::from_f64_lossy(xh);
                    }
                    y.data_mut()[off + s] = T::from_f64_lossy(gamma * xh + beta);
                }
            }
        }
        self.cache = pass.train.then(|| BnCache {
            x_hat,
            inv_std: inv_stds,
            shape: x.shape().to_vec(),
        });
        Ok(y)
    }

    pub fn backward(&mut self, name: &str, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State(format!("{name}: backward called without a training forward pass")))?;
        if dy.shape() != cache.shape.as_slice() {
            return Err(shape_err(name, format!("{:?}", cache.shape), dy.shape()));
        }
        let (batch, spatial) = (cache.shape[0], cache.shape[2..].iter().product::<usize>());
        let c_count = self.channels;
        let n = (batch * spatial) as f64;
        let mut dx = Tensor::zeros(dy.shape());
        for c in 0..c_count {
            let (mut sum_dy, mut sum_dy_xh) = (0.0, 0.0);
            for b in 0..batch {
                let off = (b * c_count + c) * spatial;
                for s in 0..spatial {
                    let g = dy.data()[off + s].as_f64();
                    sum_dy += g;
                    sum_dy_xh += g * cache.x_hat[off + s].as_f64();
                }
            }
            self.gamma.grad.data_mut()[c] = T::from_f64_lossy(sum_dy_xh);
            self.beta.grad.data_mut()[c] = T::from_f64_lossy(sum_dy);
            let scale = self.gamma.value.data()[c].as_f64() * cache.inv_std[c] / n;
            for b in 0..batch {
                let off = (b * c_count + c) * spatial;
                for s in 0..spatial {
                    let g = dy.data()[off + s].as_f64();
                    let xh = cache.x_hat[off + s].as_f64();
                    dx.data_mut()[off + s] = T::from_f64_lossy(scale * (n * g - sum_dy - xh * sum_dy_xh));
                }
            }
        }
        Ok(dx)
    }

    pub fn cast<U: Real>(&self) -> BatchNorm<U> {
        BatchNorm {
            dims: self.dims,
            channels: self.channels,
            gamma: self.gamma.cast(),
            beta: self.beta.cast(),
            running_mean: self.running_mean.cast(),
            running_var: self.running_var.cast(),
            eps: self.eps,
            momentum: self.momentum,
            cache: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Relu {
    mask: Option<Vec<bool>>,
}

impl Relu {
    pub fn forward<T: Real>(&mut self, x: &Tensor<T>, pass: Pass) -> Tensor<T> {
        let data: Vec<T> = x.data().iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect();
        self.mask = pass.train.then(|| x.data().iter().map(|&v| v > T::zero()).collect());
        Tensor::from_vec(x.shape(), data)
    }

    pub fn backward<T: Real>(&mut self, name: &str, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let mask = self
            .mask
            .as_ref()
            .ok_or_else(|| Error::State(format!("{name}: backward called without a training forward pass")))?;
        if mask.len() != dy.len() {
            return Err(shape_err(name, format!("{} elements", mask.len()), dy.shape()));
        }
        let data = dy
            .data()
            .iter()
            .zip(mask)
            .map(|(&g, &on)| if on { g } else { T::zero() })
            .collect();
        Ok(Tensor::from_vec(dy.shape(), data))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Flatten {
    input_shape: Option<Vec<usize>>,
}

impl Flatten {
    pub fn forward<T: Real>(&mut self, x: &Tensor<T>) -> Tensor<T> {
        let batch = x.shape()[0];
        self.input_shape = Some(x.shape().to_vec());
        x.clone().reshape(&[batch, x.len() / batch.max(1)])
    }

    pub fn backward<T: Real>(&mut self, name: &str, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let shape = self
            .input_shape
            .as_ref()
            .ok_or_else(|| Error::State(format!("{name}: backward called before forward")))?;
        if shape.iter().product::<usize>() != dy.len() {
            return Err(shape_err(name, format!("{shape:?}"), dy.shape()));
        }
        Ok(dy.clone().reshape(shape))
    }
}

/// `y = x·Wᵀ + b` with `W` stored `out × in`.
#[derive(Debug, Clone)]
pub struct Linear<T> {
    pub in_features: usize,
    pub out_features: usize,
    pub weight: Param<T>,
    pub bias: Param<T>,
    input: Option<Tensor<T>>,
}

impl<T: Real> Linear<T> {
    pub fn new<R: Rng>(in_features: usize, out_features: usize, rng: &mut R) -> Self {
        Linear {
            in_features,
            out_features,
            weight: Param::new(uniform_init(rng, &[out_features, in_features], in_features)),
            bias: Param::new(Tensor::zeros(&[out_features])),
            input: None,
        }
    }

    pub fn forward(&mut self, name: &str, x: &Tensor<T>, pass: Pass) -> Result<Tensor<T>> {
        let shape = x.shape();
        if shape.len() != 2 || shape[1] != self.in_features || shape[0] == 0 {
            return Err(shape_err(name, format!("[B, {}]", self.in_features), shape));
        }
        let batch = shape[0];
        let mut y = Tensor::zeros(&[batch, self.out_features]);
        matmul(
            Mat::new(x.data(), batch, self.in_features),
            Mat::new(self.weight.value.data(), self.out_features, self.in_features).t(),
            y.data_mut(),
            false,
        );
        for row in y.data_mut().chunks_exact_mut(self.out_features) {
            for (v, &b) in row.iter_mut().zip(self.bias.value.data()) {
                *v = *v + b;
            }
        }
        self.input = pass.train.then(|| x.clone());
        Ok(y)
    }

    pub fn backward(&mut self, name: &str, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self
            .input
            .as_ref()
            .ok_or_else(|| Error::State(format!("{name}: backward called without a training forward pass")))?;
        let batch = x.shape()[0];
        if dy.shape() != [batch, self.out_features] {
            return Err(shape_err(name, format!("[{batch}, {}]", self.out_features), dy.shape()));
        }
        matmul(
            Mat::new(dy.data(), batch, self.out_features).t(),
            Mat::new(x.data(), batch, self.in_features),
            self.weight.grad.data_mut(),
            false,
        );
        for (o, g) in self.bias.grad.data_mut().iter_mut().enumerate() {
            let s: f64 = (0..batch).map(|b| dy.data()[b * self.out_features + o].as_f64()).sum();
            *g = T::from_f64_lossy(s);
        }
        let mut dx = Tensor::zeros(x.shape());
        matmul(
            Mat::new(dy.data(), batch, self.out_features),
            Mat::new(self.weight.value.data(), self.out_features, self.in_features),
            dx.data_mut(),
            false,
        );
        Ok(dx)
    }

    pub fn cast<U: Real>(&self) -> Linear<U> {
        Linear {
            in_features: self.in_features,
            out_features: self.out_features,
            weight: self.weight.cast(),
            bias: self.bias.cast(),
            input: None,
        }
    }
}
