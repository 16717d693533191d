//! Layer primitives with explicit forward/backward passes.
//!
//! Activations are batch-major (batch, channels, len) tensors; dense layers
//! treat features as channels with len 1. All backward passes take the cached
//! forward input and the output gradient and return the input gradient plus
//! parameter gradients.

use crate::error::{Error, Result};
use crate::num::{scalar, scalar_usize, Scalar};

/// (batch, channels, len) activation tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    pub data: Vec<T>,
    pub batch: usize,
    pub channels: usize,
    pub len: usize,
}

impl<T: Scalar> Batch<T> {
    pub fn zeros(batch: usize, channels: usize, len: usize) -> Self {
        Batch {
            data: vec![T::zero(); batch * channels * len],
            batch,
            channels,
            len,
        }
    }

    /// Builds a batch from per-sample flat vectors, splitting each into
    /// `channels` channels of equal length.
    pub fn from_rows(rows: &[&[T]], channels: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("batch rows"));
        }
        let dim = rows[0].len();
        if !dim.is_multiple_of(channels) {
            return Err(Error::DimensionMismatch {
                context: "batch channel split",
                expected: channels,
                got: dim,
            });
        }
        let len = dim / channels;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "batch row",
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Batch {
            data,
            batch: rows.len(),
            channels,
            len,
        })
    }

    #[inline]
    pub fn idx(&self, b: usize, c: usize, l: usize) -> usize {
        (b * self.channels + c) * self.len + l
    }

    /// Flat feature vector of one sample.
    pub fn sample(&self, b: usize) -> &[T] {
        let stride = self.channels * self.len;
        &self.data[b * stride..(b + 1) * stride]
    }

    pub fn sample_mut(&mut self, b: usize) -> &mut [T] {
        let stride = self.channels * self.len;
        &mut self.data[b * stride..(b + 1) * stride]
    }

    pub fn has_non_finite(&self) -> bool {
        self.data.iter().any(|v| !v.is_finite())
    }
}

/// 1-D cross-correlation along the frequency axis, stride 1, symmetric zero
/// padding (filter length must be odd).
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dFreq<T> {
    pub out_ch: usize,
    pub in_ch: usize,
    pub taps: usize,
    /// [out][in][tap]
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Conv1dFreq<T> {
    pub fn zeros(out_ch: usize, in_ch: usize, taps: usize) -> Result<Self> {
        if taps.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "filter length must be odd, got {taps}"
            )));
        }
        Ok(Conv1dFreq {
            out_ch,
            in_ch,
            taps,
            weight: vec![T::zero(); out_ch * in_ch * taps],
            bias: vec![T::zero(); out_ch],
        })
    }

    #[inline]
    fn w(&self, o: usize, i: usize, t: usize) -> T {
        self.weight[(o * self.in_ch + i) * self.taps + t]
    }

    pub fn forward(&self, x: &Batch<T>) -> Result<Batch<T>> {
        if x.channels != self.in_ch {
            return Err(Error::DimensionMismatch {
                context: "conv input channels",
                expected: self.in_ch,
                got: x.channels,
            });
        }
        let pad = (self.taps - 1) / 2;
        let mut y = Batch::zeros(x.batch, self.out_ch, x.len);
        for b in 0..x.batch {
            for o in 0..self.out_ch {
                for l in 0..x.len {
                    let mut acc = self.bias[o];
                    for i in 0..self.in_ch {
                        for t in 0..self.taps {
                            let src = l + t;
                            if src < pad || src - pad >= x.len {
                                continue;
                            }
                            acc += self.w(o, i, t) * x.data[x.idx(b, i, src - pad)];
                        }
                    }
                    let out_idx = y.idx(b, o, l);
                    y.data[out_idx] = acc;
                }
            }
        }
        Ok(y)
    }

    /// Returns (input gradient, weight gradient, bias gradient).
    pub fn backward(&self, x: &Batch<T>, gout: &Batch<T>) -> (Batch<T>, Vec<T>, Vec<T>) {
        let pad = (self.taps - 1) / 2;
        let mut gin = Batch::zeros(x.batch, x.channels, x.len);
        let mut gw = vec![T::zero(); self.weight.len()];
        let mut gb = vec![T::zero(); self.bias.len()];
        for b in 0..x.batch {
            for o in 0..self.out_ch {
                for l in 0..x.len {
                    let g = gout.data[gout.idx(b, o, l)];
                    gb[o] += g;
                    for i in 0..self.in_ch {
                        for t in 0..self.taps {
                            let src = l + t;
                            if src < pad || src - pad >= x.len {
                                continue;
                            }
                            let m = src - pad;
                            gw[(o * self.in_ch + i) * self.taps + t] += g * x.data[x.idx(b, i, m)];
                            let gi = gin.idx(b, i, m);
                            gin.data[gi] += g * self.w(o, i, t);
                        }
                    }
                }
            }
        }
        (gin, gw, gb)
    }
}

/// Fully connected layer; expects len == 1 inputs (post-flatten).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub out_dim: usize,
    pub in_dim: usize,
    /// [out][in]
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Dense {
            out_dim,
            in_dim,
            weight: vec![T::zero(); out_dim * in_dim],
            bias: vec![T::zero(); out_dim],
        }
    }

    pub fn forward(&self, x: &Batch<T>) -> Result<Batch<T>> {
        if x.len != 1 || x.channels != self.in_dim {
            return Err(Error::DimensionMismatch {
                context: "dense input",
                expected: self.in_dim,
                got: x.channels * x.len,
            });
        }
        let mut y = Batch::zeros(x.batch, self.out_dim, 1);
        for b in 0..x.batch {
            let xin = x.sample(b);
            let yout = y.sample_mut(b);
            for (o, out) in yout.iter_mut().enumerate() {
                let row = &self.weight[o * self.in_dim..(o + 1) * self.in_dim];
                let mut acc = self.bias[o];
                for (w, v) in row.iter().zip(xin) {
                    acc += *w * *v;
                }
                *out = acc;
            }
        }
        Ok(y)
    }

    pub fn backward(&self, x: &Batch<T>, gout: &Batch<T>) -> (Batch<T>, Vec<T>, Vec<T>) {
        let mut gin = Batch::zeros(x.batch, x.channels, 1);
        let mut gw = vec![T::zero(); self.weight.len()];
        let mut gb = vec![T::zero(); self.bias.len()];
        for b in 0..x.batch {
            let xin = x.sample(b);
            let g = gout.sample(b);
            let gi = gin.sample_mut(b);
            for o in 0..self.out_dim {
                let go = g[o];
                gb[o] += go;
                let row = &self.weight[o * self.in_dim..(o + 1) * self.in_dim];
                let grow = &mut gw[o * self.in_dim..(o + 1) * self.in_dim];
                for i in 0..self.in_dim {
                    grow[i] += go * xin[i];
                    gi[i] += go * row[i];
                }
            }
        }
        (gin, gw, gb)
    }
}

/// Parametric ReLU with one learnable slope per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PRelu<T> {
    pub slopes: Vec<T>,
}

impl<T: Scalar> PRelu<T> {
    pub fn new(channels: usize, initial_slope: f64) -> Self {
        PRelu {
            slopes: vec![scalar(initial_slope); channels],
        }
    }

    pub fn forward(&self, x: &Batch<T>) -> Result<Batch<T>> {
        if x.channels != self.slopes.len() {
            return Err(Error::DimensionMismatch {
                context: "prelu channels",
                expected: self.slopes.len(),
                got: x.channels,
            });
        }
        let mut y = x.clone();
        for b in 0..x.batch {
            for (c, &a) in self.slopes.iter().enumerate() {
                for l in 0..x.len {
                    let idx = x.idx(b, c, l);
                    let v = x.data[idx];
                    if v < T::zero() {
                        y.data[idx] = a * v;
                    }
                }
            }
        }
        Ok(y)
    }

    /// Returns (input gradient, slope gradient).
    pub fn backward(&self, x: &Batch<T>, gout: &Batch<T>) -> (Batch<T>, Vec<T>) {
        let mut gin = Batch::zeros(x.batch, x.channels, x.len);
        let mut gs = vec![T::zero(); self.slopes.len()];
        for b in 0..x.batch {
            for (c, &a) in self.slopes.iter().enumerate() {
                for l in 0..x.len {
                    let idx = x.idx(b, c, l);
                    let v = x.data[idx];
                    let g = gout.data[idx];
                    if v < T::zero() {
                        gin.data[idx] = g * a;
                        gs[c] += g * v;
                    } else {
                        gin.data[idx] = g;
                    }
                }
            }
        }
        (gin, gs)
    }
}

/// Per-channel batch normalization over (batch, len).
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<T> {
    pub scale: Vec<T>,
    pub shift: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub momentum: f64,
    pub eps: f64,
}

/// Values cached by the training-mode forward pass, needed for the backward
/// pass and the running-statistics update.
#[derive(Debug, Clone)]
pub struct BatchNormCache<T> {
    pub normalized: Batch<T>,
    pub inv_std: Vec<T>,
    pub batch_mean: Vec<T>,
    pub batch_var: Vec<T>,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(channels: usize) -> Self {
        BatchNorm {
            scale: vec![T::one(); channels],
            shift: vec![T::zero(); channels],
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            momentum: 0.9,
            eps: 1e-5,
        }
    }

    pub fn channels(&self) -> usize {
        self.scale.len()
    }

    pub fn forward_train(&self, x: &Batch<T>) -> Result<(Batch<T>, BatchNormCache<T>)> {
        if x.channels != self.channels() {
            return Err(Error::DimensionMismatch {
                context: "batchnorm channels",
                expected: self.channels(),
                got: x.channels,
            });
        }
        if x.batch < 2 {
            return Err(Error::InvalidArgument(
                "batch normalization needs batch size >= 2 in training mode".into(),
            ));
        }
        let count: T = scalar_usize(x.batch * x.len);
        let eps: T = scalar(self.eps);
        let mut mean = vec![T::zero(); x.channels];
        let mut var = vec![T::zero(); x.channels];
        for c in 0..x.channels {
            let mut sum = T::zero();
            for b in 0..x.batch {
                for l in 0..x.len {
                    sum += x.data[x.idx(b, c, l)];
                }
            }
            let m = sum / count;
            let mut sq = T::zero();
            for b in 0..x.batch {
                for l in 0..x.len {
                    let d = x.data[x.idx(b, c, l)] - m;
                    sq += d * d;
                }
            }
            mean[c] = m;
            var[c] = sq / count;
        }
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let mut normalized = Batch::zeros(x.batch, x.channels, x.len);
        let mut y = Batch::zeros(x.batch, x.channels, x.len);
        for b in 0..x.batch {
            for c in 0..x.channels {
                for l in 0..x.len {
                    let idx = x.idx(b, c, l);
                    let xhat = (x.data[idx] - mean[c]) * inv_std[c];
                    normalized.data[idx] = xhat;
                    y.data[idx] = self.scale[c] * xhat + self.shift[c];
                }
            }
        }
        Ok((
            y,
            BatchNormCache {
                normalized,
                inv_std,
                batch_mean: mean,
                batch_var: var,
            },
        ))
    }

    pub fn forward_infer(&self, x: &Batch<T>) -> Result<Batch<T>> {
        if x.channels != self.channels() {
            return Err(Error::DimensionMismatch {
                context: "batchnorm channels",
                expected: self.channels(),
                got: x.channels,
            });
        }
        let eps: T = scalar(self.eps);
        let mut y = Batch::zeros(x.batch, x.channels, x.len);
        for c in 0..x.channels {
            let inv = T::one() / (self.running_var[c] + eps).sqrt();
            for b in 0..x.batch {
                for l in 0..x.len {
                    let idx = x.idx(b, c, l);
                    y.data[idx] =
                        self.scale[c] * (x.data[idx] - self.running_mean[c]) * inv + self.shift[c];
                }
            }
        }
        Ok(y)
    }

    /// Training-mode backward. Returns (input gradient, scale gradient,
    /// shift gradient).
    pub fn backward(
        &self,
        cache: &BatchNormCache<T>,
        gout: &Batch<T>,
    ) -> (Batch<T>, Vec<T>, Vec<T>) {
        let x = &cache.normalized;
        let count: T = scalar_usize(x.batch * x.len);
        let mut gin = Batch::zeros(x.batch, x.channels, x.len);
        let mut gscale = vec![T::zero(); x.channels];
        let mut gshift = vec![T::zero(); x.channels];
        for c in 0..x.channels {
            let mut sum_g = T::zero();
            let mut sum_gx = T::zero();
            for b in 0..x.batch {
                for l in 0..x.len {
                    let idx = x.idx(b, c, l);
                    let g = gout.data[idx];
                    sum_g += g;
                    sum_gx += g * x.data[idx];
                }
            }
            gscale[c] = sum_gx;
            gshift[c] = sum_g;
            let mean_g = sum_g / count;
            let mean_gx = sum_gx / count;
            let coeff = self.scale[c] * cache.inv_std[c];
            for b in 0..x.batch {
                for l in 0..x.len {
                    let idx = x.idx(b, c, l);
                    gin.data[idx] = coeff * (gout.data[idx] - mean_g - x.data[idx] * mean_gx);
                }
            }
        }
        (gin, gscale, gshift)
    }

    /// Folds batch statistics into the running estimates.
    pub fn update_running(&mut self, cache: &BatchNormCache<T>) {
        let m: T = scalar(self.momentum);
        let one_minus: T = scalar(1.0 - self.momentum);
        for c in 0..self.channels() {
            self.running_mean[c] = m * self.running_mean[c] + one_minus * cache.batch_mean[c];
            self.running_var[c] = m * self.running_var[c] + one_minus * cache.batch_var[c];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn batch_from(data: Vec<f64>, batch: usize, channels: usize, len: usize) -> Batch<f64> {
        assert_eq!(data.len(), batch * channels * len);
        Batch {
            data,
            batch,
            channels,
            len,
        }
    }

    fn random_batch(rng: &mut Rng, batch: usize, channels: usize, len: usize) -> Batch<f64> {
        batch_from(
            (0..batch * channels * len).map(|_| rng.normal()).collect(),
            batch,
            channels,
            len,
        )
    }

    #[test]
    fn conv_identity_filter_passes_input_through() {
        let mut conv = Conv1dFreq::<f64>::zeros(1, 1, 3).unwrap();
        conv.weight[1] = 1.0; // center tap
        let x = batch_from(vec![0.5, -1.0, 2.0, 0.25], 1, 1, 4);
        let y = conv.forward(&x).unwrap();
        assert_eq!(y.data, x.data);
    }

    #[test]
    fn conv_sliding_sum_oracle() {
        // [1,2,3] with kernel [1,1,1] and zero padding -> [3,6,5].
        let mut conv = Conv1dFreq::<f64>::zeros(1, 1, 3).unwrap();
        conv.weight.copy_from_slice(&[1.0, 1.0, 1.0]);
        let x = batch_from(vec![1.0, 2.0, 3.0], 1, 1, 3);
        let y = conv.forward(&x).unwrap();
        assert_eq!(y.data, vec![3.0, 6.0, 5.0]);
    }

    #[test]
    fn conv_bias_applied() {
        let mut conv = Conv1dFreq::<f64>::zeros(2, 1, 1).unwrap();
        conv.weight.copy_from_slice(&[1.0, 0.0]);
        conv.bias.copy_from_slice(&[0.0, 7.0]);
        let x = batch_from(vec![3.0, 4.0], 1, 1, 2);
        let y = conv.forward(&x).unwrap();
        assert_eq!(y.data, vec![3.0, 4.0, 7.0, 7.0]);
    }

    // Central finite differences for a scalar function of one slot.
    fn fd<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        let mut rng = Rng::new(31);
        let mut conv = Conv1dFreq::<f64>::zeros(3, 2, 3).unwrap();
        for w in conv.weight.iter_mut() {
            *w = rng.normal() * 0.5;
        }
        for b in conv.bias.iter_mut() {
            *b = rng.normal() * 0.1;
        }
        let x = random_batch(&mut rng, 2, 2, 7);
        // Loss: squared sum of outputs (gout = 2 y).
        let loss = |conv: &Conv1dFreq<f64>, x: &Batch<f64>| -> f64 {
            conv.forward(x).unwrap().data.iter().map(|v| v * v).sum()
        };
        let y = conv.forward(&x).unwrap();
        let gout = batch_from(y.data.iter().map(|v| 2.0 * v).collect(), 2, 3, 7);
        let (gin, gw, gb) = conv.backward(&x, &gout);
        let h = 1e-6;
        for i in 0..conv.weight.len() {
            let mut c = conv.clone();
            let num = fd(
                |v| {
                    c.weight[i] = v;
                    loss(&c, &x)
                },
                conv.weight[i],
                h,
            );
            assert!(rel_err(num, gw[i]) < 1e-5, "weight {i}: {num} vs {}", gw[i]);
        }
        for i in 0..conv.bias.len() {
            let mut c = conv.clone();
            let num = fd(
                |v| {
                    c.bias[i] = v;
                    loss(&c, &x)
                },
                conv.bias[i],
                h,
            );
            assert!(rel_err(num, gb[i]) < 1e-5, "bias {i}");
        }
        for i in 0..x.data.len() {
            let mut xc = x.clone();
            let num = fd(
                |v| {
                    xc.data[i] = v;
                    loss(&conv, &xc)
                },
                x.data[i],
                h,
            );
            assert!(rel_err(num, gin.data[i]) < 1e-5, "input {i}");
        }
    }

    #[test]
    fn dense_gradients_match_finite_differences() {
        let mut rng = Rng::new(32);
        let mut dense = Dense::<f64>::zeros(4, 5);
        for w in dense.weight.iter_mut() {
            *w = rng.normal() * 0.5;
        }
        for b in dense.bias.iter_mut() {
            *b = rng.normal() * 0.1;
        }
        let x = random_batch(&mut rng, 3, 5, 1);
        let loss = |d: &Dense<f64>, x: &Batch<f64>| -> f64 {
            d.forward(x).unwrap().data.iter().map(|v| v * v).sum()
        };
        let y = dense.forward(&x).unwrap();
        let gout = batch_from(y.data.iter().map(|v| 2.0 * v).collect(), 3, 4, 1);
        let (gin, gw, gb) = dense.backward(&x, &gout);
        let h = 1e-6;
        for i in 0..dense.weight.len() {
            let mut d = dense.clone();
            let num = fd(
                |v| {
                    d.weight[i] = v;
                    loss(&d, &x)
                },
                dense.weight[i],
                h,
            );
            assert!(rel_err(num, gw[i]) < 1e-5);
        }
        for i in 0..dense.bias.len() {
            let mut d = dense.clone();
            let num = fd(
                |v| {
                    d.bias[i] = v;
                    loss(&d, &x)
                },
                dense.bias[i],
                h,
            );
            assert!(rel_err(num, gb[i]) < 1e-5);
        }
        for i in 0..x.data.len() {
            let mut xc = x.clone();
            let num = fd(
                |v| {
                    xc.data[i] = v;
                    loss(&dense, &xc)
                },
                x.data[i],
                h,
            );
            assert!(rel_err(num, gin.data[i]) < 1e-5);
        }
    }

    #[test]
    fn prelu_gradients_match_finite_differences() {
        let mut rng = Rng::new(33);
        let prelu = PRelu::<f64>::new(2, 0.25);
        let x = random_batch(&mut rng, 2, 2, 5);
        let loss = |p: &PRelu<f64>, x: &Batch<f64>| -> f64 {
            p.forward(x).unwrap().data.iter().map(|v| v * v).sum()
        };
        let y = prelu.forward(&x).unwrap();
        let gout = batch_from(y.data.iter().map(|v| 2.0 * v).collect(), 2, 2, 5);
        let (gin, gs) = prelu.backward(&x, &gout);
        let h = 1e-6;
        for i in 0..prelu.slopes.len() {
            let mut p = prelu.clone();
            let num = fd(
                |v| {
                    p.slopes[i] = v;
                    loss(&p, &x)
                },
                prelu.slopes[i],
                h,
            );
            assert!(rel_err(num, gs[i]) < 1e-5);
        }
        for i in 0..x.data.len() {
            let mut xc = x.clone();
            let num = fd(
                |v| {
                    xc.data[i] = v;
                    loss(&prelu, &xc)
                },
                x.data[i],
                h,
            );
            assert!(rel_err(num, gin.data[i]) < 1e-5);
        }
    }

    #[test]
    fn batchnorm_standardized_input_passes_through() {
        // A batch that already has zero mean and unit variance per channel
        // is (nearly) unchanged by scale=1, shift=0.
        let x = batch_from(vec![1.0, -1.0, 1.0, -1.0], 4, 1, 1);
        let bn = BatchNorm::<f64>::new(1);
        let (y, _) = bn.forward_train(&x).unwrap();
        for (a, b) in y.data.iter().zip(&x.data) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn batchnorm_constant_batch_outputs_shift() {
        let x = batch_from(vec![5.0; 6], 3, 2, 1);
        let mut bn = BatchNorm::<f64>::new(2);
        bn.shift = vec![0.7, -0.3];
        let (y, _) = bn.forward_train(&x).unwrap();
        for b in 0..3 {
            assert!((y.data[y.idx(b, 0, 0)] - 0.7).abs() < 1e-12);
            assert!((y.data[y.idx(b, 1, 0)] + 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn batchnorm_rejects_batch_of_one_in_train_mode() {
        let x = batch_from(vec![1.0, 2.0], 1, 2, 1);
        let bn = BatchNorm::<f64>::new(2);
        assert!(bn.forward_train(&x).is_err());
        assert!(bn.forward_infer(&x).is_ok());
    }

    #[test]
    fn batchnorm_gradients_match_finite_differences() {
        let mut rng = Rng::new(34);
        let mut bn = BatchNorm::<f64>::new(2);
        bn.scale = vec![1.3, 0.8];
        bn.shift = vec![0.2, -0.1];
        let x = random_batch(&mut rng, 4, 2, 3);
        let loss = |bn: &BatchNorm<f64>, x: &Batch<f64>| -> f64 {
            bn.forward_train(x)
                .unwrap()
                .0
                .data
                .iter()
                .enumerate()
                .map(|(i, v)| (i as f64 * 0.1 + 1.0) * v * v)
                .sum()
        };
        let (y, cache) = bn.forward_train(&x).unwrap();
        let gout = batch_from(
            y.data
                .iter()
                .enumerate()
                .map(|(i, v)| 2.0 * (i as f64 * 0.1 + 1.0) * v)
                .collect(),
            4,
            2,
            3,
        );
        let (gin, gscale, gshift) = bn.backward(&cache, &gout);
        let h = 1e-6;
        for i in 0..bn.scale.len() {
            let mut b = bn.clone();
            let num = fd(
                |v| {
                    b.scale[i] = v;
                    loss(&b, &x)
                },
                bn.scale[i],
                h,
            );
            assert!(rel_err(num, gscale[i]) < 1e-5, "scale {i}");
            let mut b = bn.clone();
            let num = fd(
                |v| {
                    b.shift[i] = v;
                    loss(&b, &x)
                },
                bn.shift[i],
                h,
            );
            assert!(rel_err(num, gshift[i]) < 1e-5, "shift {i}");
        }
        for i in 0..x.data.len() {
            let mut xc = x.clone();
            let num = fd(
                |v| {
                    xc.data[i] = v;
                    loss(&bn, &xc)
                },
                x.data[i],
                h,
            );
            assert!(
                rel_err(num, gin.data[i]) < 1e-4,
                "input {i}: {num} vs {}",
                gin.data[i]
            );
        }
    }

    #[test]
    fn batchnorm_running_stats_update() {
        let x = batch_from(vec![1.0, 3.0], 2, 1, 1);
        let mut bn = BatchNorm::<f64>::new(1);
        let (_, cache) = bn.forward_train(&x).unwrap();
        bn.update_running(&cache);
        // mean 2, var 1; running = 0.9 * init + 0.1 * batch.
        assert!((bn.running_mean[0] - 0.2).abs() < 1e-12);
        assert!((bn.running_var[0] - (0.9 + 0.1)).abs() < 1e-12);
    }
}
