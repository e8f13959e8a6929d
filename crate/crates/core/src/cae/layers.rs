use serde::{Deserialize, Serialize};

use super::tensor::{col2im, gemm, im2col, Tensor, Window};

/// Per-image shape `(height, width, channels)`.
pub type Shape = (usize, usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Activation {
    LeakyRelu(f64),
    Sigmoid,
    Linear,
}

impl Activation {
    pub(crate) fn apply(self, v: &mut [f64]) {
        match self {
            Activation::LeakyRelu(slope) => v.iter_mut().for_each(|x| {
                if *x < 0.0 {
                    *x *= slope
                }
            }),
            Activation::Sigmoid => v.iter_mut().for_each(|x| *x = 1.0 / (1.0 + (-*x).exp())),
            Activation::Linear => {}
        }
    }

    /// Multiplies `grad` by the derivative, expressed through the output.
    pub(crate) fn backprop(self, out: &[f64], grad: &mut [f64]) {
        match self {
            Activation::LeakyRelu(slope) => grad.iter_mut().zip(out).for_each(|(g, y)| {
                if *y < 0.0 || (slope == 0.0 && *y == 0.0) {
                    *g *= slope
                }
            }),
            Activation::Sigmoid => grad.iter_mut().zip(out).for_each(|(g, y)| *g *= y * (1.0 - y)),
            Activation::Linear => {}
        }
    }
}

/// One layer of the network description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LayerSpec {
    Conv2d {
        filters: usize,
        kernel: (usize, usize),
        stride: usize,
        padding: usize,
        activation: Activation,
    },
    /// Adjoint of a `Conv2d` with the same kernel, stride and padding;
    /// `output_padding` picks among the input sizes that conv maps onto
    /// the same output size.
    Conv2dTranspose {
        filters: usize,
        kernel: (usize, usize),
        stride: usize,
        padding: usize,
        output_padding: usize,
        activation: Activation,
    },
    BatchNorm,
    Dense {
        units: usize,
        activation: Activation,
    },
    Flatten,
    Reshape {
        height: usize,
        width: usize,
        channels: usize,
    },
    Activation(Activation),
}

impl LayerSpec {
    pub fn conv(filters: usize, activation: Activation) -> Self {
        LayerSpec::Conv2d {
            filters,
            kernel: (3, 3),
            stride: 2,
            padding: 1,
            activation,
        }
    }

    pub fn conv_transpose(filters: usize, activation: Activation) -> Self {
        LayerSpec::Conv2dTranspose {
            filters,
            kernel: (3, 3),
            stride: 2,
            padding: 1,
            output_padding: 1,
            activation,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::Conv2dTranspose { .. } => "conv2d_transpose",
            LayerSpec::BatchNorm => "batch_norm",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Reshape { .. } => "reshape",
            LayerSpec::Activation(_) => "activation",
        }
    }

    pub fn activation(&self) -> Option<Activation> {
        match self {
            LayerSpec::Conv2d { activation, .. }
            | LayerSpec::Conv2dTranspose { activation, .. }
            | LayerSpec::Dense { activation, .. }
            | LayerSpec::Activation(activation) => Some(*activation),
            _ => None,
        }
    }

    pub(crate) fn window(&self, input: Shape) -> Option<Window> {
        match *self {
            LayerSpec::Conv2d {
                kernel, stride, padding, ..
            } => Window::new(input.0, input.1, kernel.0, kernel.1, stride, padding),
            LayerSpec::Conv2dTranspose { .. } => {
                let out = self.output_shape(input).ok()?;
                let LayerSpec::Conv2dTranspose {
                    kernel, stride, padding, ..
                } = *self
                else {
                    unreachable!()
                };
                Window::new(out.0, out.1, kernel.0, kernel.1, stride, padding)
            }
            _ => None,
        }
    }

    /// Shape produced from `input`, or why the layer cannot accept it.
    pub fn output_shape(&self, input: Shape) -> Result<Shape, String> {
        let (h, w, c) = input;
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(format!("{name} must be positive"))
            } else {
                Ok(())
            }
        };
        if h == 0 || w == 0 || c == 0 {
            return Err(format!("empty input shape {h}x{w}x{c}"));
        }
        if let Some(Activation::LeakyRelu(s)) = self.activation() {
            if !(0.0..1.0).contains(&s) {
                return Err(format!("leaky ReLU slope {s} must lie in [0, 1)"));
            }
        }
        match *self {
            LayerSpec::Conv2d {
                filters,
                kernel,
                stride,
                padding,
                ..
            } => {
                positive("filters", filters)?;
                positive("kernel height", kernel.0)?;
                positive("kernel width", kernel.1)?;
                positive("stride", stride)?;
                let win = Window::new(h, w, kernel.0, kernel.1, stride, padding).ok_or_else(|| {
                    format!("{}x{} kernel does not fit a padded {h}x{w} input", kernel.0, kernel.1)
                })?;
                Ok((win.oh, win.ow, filters))
            }
            LayerSpec::Conv2dTranspose {
                filters,
                kernel,
                stride,
                padding,
                output_padding,
                ..
            } => {
                positive("filters", filters)?;
                positive("kernel height", kernel.0)?;
                positive("kernel width", kernel.1)?;
                positive("stride", stride)?;
                if output_padding >= stride {
                    return Err(format!("output padding {output_padding} must be below stride {stride}"));
                }
                let grow = |n: usize, k: usize| ((n - 1) * stride + k + output_padding).checked_sub(2 * padding);
                let (Some(oh), Some(ow)) = (grow(h, kernel.0), grow(w, kernel.1)) else {
                    return Err(format!("padding {padding} exceeds the transposed output size"));
                };
                match Window::new(oh, ow, kernel.0, kernel.1, stride, padding) {
                    Some(win) if win.oh == h && win.ow == w && oh > 0 && ow > 0 => Ok((oh, ow, filters)),
                    _ => Err(format!("no {oh}x{ow} output maps back onto a {h}x{w} input")),
                }
            }
            LayerSpec::BatchNorm => Ok(input),
            LayerSpec::Dense { units, .. } => {
                positive("units", units)?;
                if h != 1 || w != 1 {
                    return Err(format!("dense layer needs a flat input, got {h}x{w}x{c}; add a flatten layer"));
                }
                Ok((1, 1, units))
            }
            LayerSpec::Flatten => Ok((1, 1, h * w * c)),
            LayerSpec::Reshape {
                height,
                width,
                channels,
            } => {
                if height * width * channels != h * w * c {
                    return Err(format!(
                        "cannot reshape {} values into {height}x{width}x{channels}",
                        h * w * c
                    ));
                }
                if h != 1 || w != 1 {
                    return Err("reshape expects a flat input".into());
                }
                Ok((height, width, channels))
            }
            LayerSpec::Activation(_) => Ok(input),
        }
    }

    /// Trainable parameter count for `input`.
    pub fn trainable_params(&self, input: Shape) -> usize {
        let (h, w, c) = input;
        match *self {
            LayerSpec::Conv2d { filters, kernel, .. } => filters * c * kernel.0 * kernel.1 + filters,
            LayerSpec::Conv2dTranspose { filters, kernel, .. } => c * filters * kernel.0 * kernel.1 + filters,
            LayerSpec::BatchNorm => 2 * c,
            LayerSpec::Dense { units, .. } => units * h * w * c + units,
            _ => 0,
        }
    }

    /// Non-trainable state (batch-norm running mean and variance).
    pub fn running_stats(&self, input: Shape) -> usize {
        match self {
            LayerSpec::BatchNorm => 2 * input.2,
            _ => 0,
        }
    }

    pub fn fan_in(&self, input: Shape) -> usize {
        let (h, w, c) = input;
        match *self {
            LayerSpec::Conv2d { kernel, .. } => c * kernel.0 * kernel.1,
            LayerSpec::Conv2dTranspose { kernel, stride, .. } => {
                (c * kernel.0 * kernel.1 / (stride * stride)).max(1)
            }
            LayerSpec::Dense { .. } => h * w * c,
            _ => 0,
        }
    }
}

/// A layer bound to its position in the flat parameter and statistics
/// vectors.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layer {
    pub spec: LayerSpec,
    pub input: Shape,
    pub output: Shape,
    pub offset: usize,
    pub n_params: usize,
    pub stat_offset: usize,
    pub win: Option<Window>,
}

pub(crate) const BN_EPS: f64 = 1e-5;

/// What the backward pass needs from the forward pass.
pub(crate) enum Cache {
    Conv { cols: Vec<f64>, out: Vec<f64> },
    ConvT { input: Vec<f64>, out: Vec<f64> },
    Dense { input: Vec<f64>, out: Vec<f64> },
    Norm { xhat: Vec<f64>, inv_std: Vec<f64>, mean: Vec<f64>, var: Vec<f64> },
    Act { out: Vec<f64> },
    Shape,
}

impl Layer {
    /// `train` selects batch statistics for batch normalisation.
    pub fn forward(&self, x: Tensor, params: &[f64], stats: &[f64], train: bool) -> (Tensor, Cache) {
        let p = &params[self.offset..self.offset + self.n_params];
        let n = x.n;
        match self.spec {
            LayerSpec::Conv2d {
                filters, activation, ..
            } => {
                let win = self.win.expect("conv window");
                let cols = im2col(&x, &win);
                let k = x.c * win.taps();
                let np = n * win.oh * win.ow;
                let (wt, bias) = p.split_at(filters * k);
                let mut out = Tensor::zeros(filters, n, win.oh, win.ow);
                gemm(filters, k, np, wt, false, &cols, false, &mut out.data, false);
                add_channel_bias(&mut out, bias);
                activation.apply(&mut out.data);
                let cache = Cache::Conv {
                    cols,
                    out: out.data.clone(),
                };
                (out, cache)
            }
            LayerSpec::Conv2dTranspose {
                filters, activation, ..
            } => {
                let win = self.win.expect("transposed conv window");
                let k = filters * win.taps();
                let np = n * x.h * x.w;
                let (wt, bias) = p.split_at(x.c * k);
                let mut cols = vec![0.0; k * np];
                gemm(k, x.c, np, wt, true, &x.data, false, &mut cols, false);
                let mut out = col2im(&cols, filters, n, &win);
                add_channel_bias(&mut out, bias);
                activation.apply(&mut out.data);
                let cache = Cache::ConvT {
                    input: x.data,
                    out: out.data.clone(),
                };
                (out, cache)
            }
            LayerSpec::Dense { units, activation } => {
                let d = x.c;
                let (wt, bias) = p.split_at(units * d);
                let mut out = Tensor::zeros(units, n, 1, 1);
                gemm(units, d, n, wt, false, &x.data, false, &mut out.data, false);
                add_channel_bias(&mut out, bias);
                activation.apply(&mut out.data);
                let cache = Cache::Dense {
                    input: x.data,
                    out: out.data.clone(),
                };
                (out, cache)
            }
            LayerSpec::BatchNorm => {
                let c = x.c;
                let plane = x.plane();
                let (gamma, beta) = p.split_at(c);
                let s = &stats[self.stat_offset..self.stat_offset + 2 * c];
                let (mut mean, mut var) = (vec![0.0; c], vec![0.0; c]);
                if train {
                    for ch in 0..c {
                        let v = &x.data[ch * plane..(ch + 1) * plane];
                        let mu = v.iter().sum::<f64>() / plane as f64;
                        mean[ch] = mu;
                        var[ch] = v.iter().map(|t| (t - mu) * (t - mu)).sum::<f64>() / plane as f64;
                    }
                } else {
                    mean.copy_from_slice(&s[..c]);
                    var.copy_from_slice(&s[c..]);
                }
                let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
                let mut out = x;
                let mut xhat = vec![0.0; out.data.len()];
                for ch in 0..c {
                    let range = ch * plane..(ch + 1) * plane;
                    for (o, xh) in out.data[range.clone()].iter_mut().zip(&mut xhat[range]) {
                        *xh = (*o - mean[ch]) * inv_std[ch];
                        *o = gamma[ch] * *xh + beta[ch];
                    }
                }
                (
                    out,
                    Cache::Norm {
                        xhat,
                        inv_std,
                        mean,
                        var,
                    },
                )
            }
            LayerSpec::Flatten => (x.flatten(), Cache::Shape),
            LayerSpec::Reshape {
                height,
                width,
                channels,
            } => (x.unflatten(channels, height, width), Cache::Shape),
            LayerSpec::Activation(act) => {
                let mut out = x;
                act.apply(&mut out.data);
                let cache = Cache::Act { out: out.data.clone() };
                (out, cache)
            }
        }
    }

    /// Consumes the gradient with respect to this layer's output, adds
    /// parameter gradients into `grads`, and returns the gradient with
    /// respect to its input.
    pub fn backward(&self, mut g: Tensor, cache: &Cache, params: &[f64], grads: &mut [f64]) -> Tensor {
        let p = &params[self.offset..self.offset + self.n_params];
        let dp = &mut grads[self.offset..self.offset + self.n_params];
        let n = g.n;
        let (ih, iw, ic) = self.input;
        match (&self.spec, cache) {
            (LayerSpec::Conv2d { filters, activation, .. }, Cache::Conv { cols, out }) => {
                let win = self.win.expect("conv window");
                activation.backprop(out, &mut g.data);
                let k = ic * win.taps();
                let np = n * win.oh * win.ow;
                let (wt, _) = p.split_at(filters * k);
                let (dw, db) = dp.split_at_mut(filters * k);
                gemm(*filters, np, k, &g.data, false, cols, true, dw, true);
                accumulate_channel_sums(&g, db);
                let mut dcols = vec![0.0; k * np];
                gemm(k, *filters, np, wt, true, &g.data, false, &mut dcols, false);
                col2im(&dcols, ic, n, &win)
            }
            (LayerSpec::Conv2dTranspose { filters, activation, .. }, Cache::ConvT { input, out }) => {
                let win = self.win.expect("transposed conv window");
                activation.backprop(out, &mut g.data);
                let k = filters * win.taps();
                let np = n * ih * iw;
                let (wt, _) = p.split_at(ic * k);
                let (dw, db) = dp.split_at_mut(ic * k);
                accumulate_channel_sums(&g, db);
                let gcols = im2col(&g, &win);
                gemm(ic, np, k, input, false, &gcols, true, dw, true);
                let mut dx = Tensor::zeros(ic, n, ih, iw);
                gemm(ic, k, np, wt, false, &gcols, false, &mut dx.data, false);
                dx
            }
            (LayerSpec::Dense { units, activation }, Cache::Dense { input, out }) => {
                activation.backprop(out, &mut g.data);
                let d = ic;
                let (wt, _) = p.split_at(units * d);
                let (dw, db) = dp.split_at_mut(units * d);
                gemm(*units, n, d, &g.data, false, input, true, dw, true);
                accumulate_channel_sums(&g, db);
                let mut dx = Tensor::zeros(d, n, 1, 1);
                gemm(d, *units, n, wt, true, &g.data, false, &mut dx.data, false);
                dx
            }
            (LayerSpec::BatchNorm, Cache::Norm { xhat, inv_std, .. }) => {
                let c = ic;
                let plane = g.plane();
                let m = plane as f64;
                let gamma = &p[..c];
                let (dgamma, dbeta) = dp.split_at_mut(c);
                for ch in 0..c {
                    let range = ch * plane..(ch + 1) * plane;
                    let gy = &mut g.data[range.clone()];
                    let xh = &xhat[range];
                    let sum_g: f64 = gy.iter().sum();
                    let sum_gx: f64 = gy.iter().zip(xh).map(|(a, b)| a * b).sum();
                    dbeta[ch] += sum_g;
                    dgamma[ch] += sum_gx;
                    let scale = gamma[ch] * inv_std[ch] / m;
                    for (gv, xv) in gy.iter_mut().zip(xh) {
                        *gv = scale * (m * *gv - sum_g - xv * sum_gx);
                    }
                }
                g
            }
            (LayerSpec::Flatten, _) => g.unflatten(ic, ih, iw),
            (LayerSpec::Reshape { .. }, _) => g.flatten(),
            (LayerSpec::Activation(act), Cache::Act { out }) => {
                act.backprop(out, &mut g.data);
                g
            }
            _ => unreachable!("cache does not match layer kind"),
        }
    }
}

fn add_channel_bias(t: &mut Tensor, bias: &[f64]) {
    let plane = t.plane();
    for (ch, b) in bias.iter().enumerate() {
        t.data[ch * plane..(ch + 1) * plane].iter_mut().for_each(|v| *v += b);
    }
}

fn accumulate_channel_sums(t: &Tensor, acc: &mut [f64]) {
    let plane = t.plane();
    for (ch, a) in acc.iter_mut().enumerate() {
        *a += t.data[ch * plane..(ch + 1) * plane].iter().sum::<f64>();
    }
}
