//! Convolutional autoencoder: stride-2 convolution encoder, small dense
//! code, mirrored transposed-convolution decoder, trained with Adam on the
//! mean squared reconstruction error.
//!
//! Everything runs in `f64`. Activations flow through the network
//! channel-major (`[c][n][h][w]`) so each convolution over a batch is one
//! matrix product.

mod checkpoint;
mod layers;
mod tensor;

use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalogram::ImageTensor;
use crate::seed;
use layers::{Cache, Layer};
use tensor::Tensor;

pub use layers::{Activation, LayerSpec, Shape};

/// Leaky-ReLU slope used by the presets.
pub const LEAKY_SLOPE: f64 = 0.2;
/// Weight of the previous running statistic in each batch-norm update.
pub const BN_MOMENTUM: f64 = 0.99;
pub const BN_EPSILON: f64 = layers::BN_EPS;

/// A batch of `h × w × c` images, each stored row-major with the channel
/// fastest (the [`ImageTensor`] layout).
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    n: usize,
    shape: Shape,
    data: Vec<f64>,
}

impl Batch {
    pub fn new(n: usize, shape: Shape, data: Vec<f64>) -> Result<Self> {
        let per = shape.0 * shape.1 * shape.2;
        if data.len() != n * per {
            return Err(Error::DimensionMismatch {
                context: "batch data",
                expected: n * per,
                got: data.len(),
            });
        }
        Ok(Self { n, shape, data })
    }

    pub fn from_images(images: &[ImageTensor]) -> Result<Self> {
        let Some(first) = images.first() else {
            return Err(Error::invalid("empty image batch"));
        };
        let shape = first.shape();
        let mut data = Vec::with_capacity(images.len() * first.pixels().len());
        for img in images {
            if img.shape() != shape {
                return Err(Error::invalid(format!(
                    "image shape {:?} differs from batch shape {:?}",
                    img.shape(),
                    shape
                )));
            }
            data.extend_from_slice(img.pixels());
        }
        Self::new(images.len(), shape, data)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn image_len(&self) -> usize {
        self.shape.0 * self.shape.1 * self.shape.2
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let per = self.image_len();
        &self.data[i * per..(i + 1) * per]
    }

    pub fn select(&self, indices: &[usize]) -> Batch {
        let mut data = Vec::with_capacity(indices.len() * self.image_len());
        for &i in indices {
            data.extend_from_slice(self.image(i));
        }
        Batch {
            n: indices.len(),
            shape: self.shape,
            data,
        }
    }

    fn tensor(&self) -> Tensor {
        let (h, w, c) = self.shape;
        Tensor::from_hwc(self.n, h, w, c, &self.data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in batch normalisation.
    Train,
    /// Running statistics; required for scoring.
    Infer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Section {
    Encoder,
    Code,
    Decoder,
}

/// Parameter totals split at the code boundary. Batch-norm layers count
/// their running mean and variance alongside γ and β.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCounts {
    /// Encoder convolutions plus the flatten/dense code layers.
    pub encoder: usize,
    pub decoder: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaeModel {
    input_shape: Shape,
    layers: Vec<Layer>,
    sections: Vec<Section>,
    params: Vec<f64>,
    stats: Vec<f64>,
    training: bool,
}

/// Filter widths and bottleneck sizes of the mirrored architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_shape: Shape,
    pub filters: Vec<usize>,
    pub dense_units: usize,
    pub code_units: usize,
}

impl Architecture {
    /// 256×256×3 input, filters 16-32-64-128-256, Dense(50), code 3.
    pub fn paper() -> Self {
        Self {
            input_shape: (256, 256, 3),
            filters: vec![16, 32, 64, 128, 256],
            dense_units: 50,
            code_units: 3,
        }
    }

    /// 64×64 grayscale input, filters 8-16-32, Dense(50), code 3.
    pub fn desk() -> Self {
        Self {
            input_shape: (64, 64, 1),
            filters: vec![8, 16, 32],
            dense_units: 50,
            code_units: 3,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "paper" | "paper-shape" => Some(Self::paper()),
            "desk" => Some(Self::desk()),
            _ => None,
        }
    }

    /// Encoder: `[conv(LReLU) → BN]` per filter width. Code: flatten,
    /// dense(LReLU), dense(linear). Decoder: dense expansion (LReLU),
    /// reshape, transposed convolutions in reverse order with BN between,
    /// and a sigmoid output layer restoring the input channels.
    pub fn layer_specs(&self) -> Result<(Vec<LayerSpec>, Vec<LayerSpec>, Vec<LayerSpec>)> {
        let lrelu = Activation::LeakyRelu(LEAKY_SLOPE);
        let (h, w, c) = self.input_shape;
        let depth = self.filters.len();
        if depth == 0 {
            return Err(Error::invalid("architecture needs at least one convolution"));
        }
        let factor = 1usize << depth;
        if h % factor != 0 || w % factor != 0 {
            return Err(Error::invalid(format!(
                "{h}x{w} input cannot be halved {depth} times exactly"
            )));
        }
        let (bh, bw, bc) = (h / factor, w / factor, *self.filters.last().unwrap());

        let mut encoder = Vec::new();
        for &f in &self.filters {
            encoder.push(LayerSpec::conv(f, lrelu));
            encoder.push(LayerSpec::BatchNorm);
        }
        let code = vec![
            LayerSpec::Flatten,
            LayerSpec::Dense {
                units: self.dense_units,
                activation: lrelu,
            },
            LayerSpec::Dense {
                units: self.code_units,
                activation: Activation::Linear,
            },
        ];
        let mut decoder = vec![
            LayerSpec::Dense {
                units: bh * bw * bc,
                activation: lrelu,
            },
            LayerSpec::Reshape {
                height: bh,
                width: bw,
                channels: bc,
            },
        ];
        for &f in self.filters[..depth - 1].iter().rev() {
            decoder.push(LayerSpec::conv_transpose(f, lrelu));
            decoder.push(LayerSpec::BatchNorm);
        }
        decoder.push(LayerSpec::conv_transpose(c, Activation::Sigmoid));
        Ok((encoder, code, decoder))
    }

    pub fn build(&self, seed: u64) -> Result<CaeModel> {
        let (e, c, d) = self.layer_specs()?;
        build_cae(&e, &c, &d, self.input_shape, seed)
    }
}

/// Validates the shape chain, lays out parameters and initialises them:
/// weights from a zero-mean normal scaled by fan-in (gain 2/(1+slope²) for
/// leaky ReLU), zero biases, unit γ, zero β, running mean 0 and variance 1.
pub fn build_cae(
    encoder: &[LayerSpec],
    code: &[LayerSpec],
    decoder: &[LayerSpec],
    input_shape: Shape,
    seed: u64,
) -> Result<CaeModel> {
    let mut model = CaeModel::layout(encoder, code, decoder, input_shape)?;
    model.initialise(seed);
    Ok(model)
}

impl CaeModel {
    fn layout(encoder: &[LayerSpec], code: &[LayerSpec], decoder: &[LayerSpec], input_shape: Shape) -> Result<Self> {
        let tagged = encoder
            .iter()
            .map(|s| (Section::Encoder, s))
            .chain(code.iter().map(|s| (Section::Code, s)))
            .chain(decoder.iter().map(|s| (Section::Decoder, s)));
        let mut layers = Vec::new();
        let mut sections = Vec::new();
        let mut shape = input_shape;
        let (mut offset, mut stat_offset) = (0, 0);
        for (index, (section, spec)) in tagged.enumerate() {
            let output = spec.output_shape(shape).map_err(|reason| Error::LayerShape {
                index,
                kind: spec.kind_name().into(),
                reason,
            })?;
            let n_params = spec.trainable_params(shape);
            layers.push(Layer {
                spec: spec.clone(),
                input: shape,
                output,
                offset,
                n_params,
                stat_offset,
                win: spec.window(shape),
            });
            sections.push(section);
            offset += n_params;
            stat_offset += spec.running_stats(shape);
            shape = output;
        }
        if layers.is_empty() {
            return Err(Error::invalid("autoencoder has no layers"));
        }
        if shape != input_shape {
            let last = layers.len() - 1;
            return Err(Error::LayerShape {
                index: last,
                kind: layers[last].spec.kind_name().into(),
                reason: format!("network output {shape:?} differs from input {input_shape:?}"),
            });
        }
        Ok(Self {
            input_shape,
            layers,
            sections,
            params: vec![0.0; offset],
            stats: vec![0.0; stat_offset],
            training: true,
        })
    }

    fn initialise(&mut self, master: u64) {
        for (i, layer) in self.layers.iter().enumerate() {
            let p = &mut self.params[layer.offset..layer.offset + layer.n_params];
            match layer.spec {
                LayerSpec::BatchNorm => {
                    let c = layer.input.2;
                    p[..c].fill(1.0);
                    self.stats[layer.stat_offset + c..layer.stat_offset + 2 * c].fill(1.0);
                }
                LayerSpec::Conv2d { .. } | LayerSpec::Conv2dTranspose { .. } | LayerSpec::Dense { .. } => {
                    let gain = match layer.spec.activation() {
                        Some(Activation::LeakyRelu(s)) => 2.0 / (1.0 + s * s),
                        _ => 1.0,
                    };
                    let std = (gain / layer.spec.fan_in(layer.input) as f64).sqrt();
                    let bias = layer.output.2;
                    let mut rng = seed::rng(seed::derive(master, seed::stream::CAE_INIT, i as u64));
                    let n_w = p.len() - bias;
                    for v in &mut p[..n_w] {
                        *v = std * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                _ => {}
            }
        }
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    pub fn set_training(&mut self, training: bool) {
        self.training = training;
    }

    /// Layer descriptions with their section and output shape.
    pub fn layer_table(&self) -> Vec<(Section, &LayerSpec, Shape, usize)> {
        self.layers
            .iter()
            .zip(&self.sections)
            .map(|(l, s)| (*s, &l.spec, l.output, l.n_params + l.spec.running_stats(l.input)))
            .collect()
    }

    pub fn specs(&self, section: Section) -> Vec<LayerSpec> {
        self.layers
            .iter()
            .zip(&self.sections)
            .filter(|(_, s)| **s == section)
            .map(|(l, _)| l.spec.clone())
            .collect()
    }

    pub fn count_params(&self) -> ParamCounts {
        let (mut encoder, mut decoder) = (0, 0);
        for (section, _, _, n) in self.layer_table() {
            match section {
                Section::Encoder | Section::Code => encoder += n,
                Section::Decoder => decoder += n,
            }
        }
        ParamCounts {
            encoder,
            decoder,
            total: encoder + decoder,
        }
    }

    /// Trainable parameters in layer order (weights, then biases; γ, then β).
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Batch-norm running means and variances in layer order.
    pub fn running_stats(&self) -> &[f64] {
        &self.stats
    }

    pub fn code_width(&self) -> usize {
        self.code_index().map_or(0, |i| self.layers[i].output.2)
    }

    /// Last layer whose output is the code: the final code layer, or the
    /// final encoder layer when there is no code section.
    fn code_index(&self) -> Option<usize> {
        self.sections
            .iter()
            .rposition(|s| *s == Section::Code)
            .or_else(|| self.sections.iter().rposition(|s| *s == Section::Encoder))
    }

    fn check_batch(&self, batch: &Batch) -> Result<()> {
        if batch.shape() != self.input_shape {
            let (h, w, c) = self.input_shape;
            let (bh, bw, bc) = batch.shape();
            return Err(Error::DimensionMismatch {
                context: "autoencoder input (h·w·c)",
                expected: h * w * c,
                got: bh * bw * bc,
            });
        }
        if batch.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("autoencoder input".into()));
        }
        Ok(())
    }

    fn run(&self, x: Tensor, train: bool, keep: bool) -> (Tensor, Tensor, Vec<Cache>) {
        let code_at = self.code_index();
        let mut caches = Vec::with_capacity(if keep { self.layers.len() } else { 0 });
        let mut code = None;
        let mut t = x;
        for (i, layer) in self.layers.iter().enumerate() {
            let (out, cache) = layer.forward(t, &self.params, &self.stats, train);
            if keep {
                caches.push(cache);
            }
            if Some(i) == code_at {
                code = Some(out.clone());
            }
            t = out;
        }
        (t, code.expect("model has a code layer"), caches)
    }

    /// Reconstruction and `n × code_width` code batch.
    pub fn forward(&self, batch: &Batch, mode: Mode) -> Result<(Batch, DMatrix<f64>)> {
        self.check_batch(batch)?;
        let (out, code, _) = self.run(batch.tensor(), mode == Mode::Train, false);
        let (h, w, c) = self.input_shape;
        let recon = Batch::new(batch.len(), (h, w, c), out.to_hwc())?;
        let codes = DMatrix::from_fn(batch.len(), code.c, |i, j| code.data[j * code.n + i]);
        Ok((recon, codes))
    }

    /// Train-mode MSE and its gradient with respect to every trainable
    /// parameter. Running statistics are left untouched.
    pub fn loss_and_gradient(&self, batch: &Batch) -> Result<(f64, Vec<f64>)> {
        self.check_batch(batch)?;
        let pass = self.train_pass(batch);
        Ok((pass.loss, pass.grads))
    }

    fn train_pass(&self, batch: &Batch) -> TrainPass {
        let x = batch.tensor();
        let (out, _, caches) = self.run(x.clone(), true, true);
        let total = out.data.len() as f64;
        let metrics = Metrics::between(&out.data, &x.data);
        let mut g = out.clone();
        for (gv, t) in g.data.iter_mut().zip(&x.data) {
            *gv = 2.0 * (*gv - t) / total;
        }
        let mut grads = vec![0.0; self.params.len()];
        for (layer, cache) in self.layers.iter().zip(&caches).rev() {
            g = layer.backward(g, cache, &self.params, &mut grads);
        }
        let batch_stats = self
            .layers
            .iter()
            .zip(&caches)
            .filter_map(|(l, c)| match c {
                Cache::Norm { mean, var, .. } => Some((l.stat_offset, mean.clone(), var.clone())),
                _ => None,
            })
            .collect();
        TrainPass {
            loss: metrics.mse,
            metrics,
            grads,
            batch_stats,
        }
    }

    /// One optimisation step on `batch`: exact gradients in train mode,
    /// a running-statistics update, and an Adam update. Returns the loss
    /// before the step.
    pub fn backward_and_step(&mut self, batch: &Batch, opt: &mut OptimizerState) -> Result<f64> {
        Ok(self.step(batch, opt)?.mse)
    }

    fn step(&mut self, batch: &Batch, opt: &mut OptimizerState) -> Result<Metrics> {
        self.check_batch(batch)?;
        if opt.m.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                context: "optimizer state",
                expected: self.params.len(),
                got: opt.m.len(),
            });
        }
        let pass = self.train_pass(batch);
        if !pass.loss.is_finite() || pass.grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!(
                "training loss {} after {} optimizer steps",
                pass.loss, opt.step
            )));
        }
        for (offset, mean, var) in pass.batch_stats {
            let c = mean.len();
            let s = &mut self.stats[offset..offset + 2 * c];
            for ch in 0..c {
                s[ch] = BN_MOMENTUM * s[ch] + (1.0 - BN_MOMENTUM) * mean[ch];
                s[c + ch] = BN_MOMENTUM * s[c + ch] + (1.0 - BN_MOMENTUM) * var[ch];
            }
        }
        opt.apply(&mut self.params, &pass.grads);
        Ok(pass.metrics)
    }

    /// Code activations per image (infer mode).
    pub fn latent_codes(&self, batch: &Batch) -> Result<DMatrix<f64>> {
        let mut rows = Vec::with_capacity(batch.len());
        for chunk in chunks(batch.len()) {
            let (_, codes) = self.forward(&batch.select(&chunk), Mode::Infer)?;
            rows.extend(codes.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()));
        }
        crate::subspace::rows_to_matrix(&rows).map(|m| {
            if batch.is_empty() {
                DMatrix::zeros(0, self.code_width())
            } else {
                m
            }
        })
    }

    /// Per-image mean squared reconstruction error (infer mode).
    pub fn reconstruction_errors(&self, batch: &Batch) -> Result<Vec<f64>> {
        let mut errors = Vec::with_capacity(batch.len());
        for chunk in chunks(batch.len()) {
            let sub = batch.select(&chunk);
            let (recon, _) = self.forward(&sub, Mode::Infer)?;
            for i in 0..sub.len() {
                errors.push(Metrics::between(recon.image(i), sub.image(i)).mse);
            }
        }
        Ok(errors)
    }
}

/// Inference chunks bound the size of the intermediate buffers; infer-mode
/// outputs do not depend on batch composition.
fn chunks(n: usize) -> Vec<Vec<usize>> {
    const CHUNK: usize = 64;
    (0..n)
        .collect::<Vec<_>>()
        .chunks(CHUNK)
        .map(<[usize]>::to_vec)
        .collect()
}

struct TrainPass {
    loss: f64,
    metrics: Metrics,
    grads: Vec<f64>,
    batch_stats: Vec<(usize, Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Metrics {
    mse: f64,
    mae: f64,
    r2: f64,
}

impl Metrics {
    fn between(recon: &[f64], target: &[f64]) -> Self {
        Self {
            mse: mse_loss(recon, target),
            mae: mae(recon, target),
            r2: r2(recon, target),
        }
    }
}

/// Mean squared elementwise error (no ½ factor).
pub fn mse_loss(recon: &[f64], target: &[f64]) -> f64 {
    debug_assert_eq!(recon.len(), target.len());
    if recon.is_empty() {
        return 0.0;
    }
    recon.iter().zip(target).map(|(r, t)| (r - t) * (r - t)).sum::<f64>() / recon.len() as f64
}

pub fn mae(recon: &[f64], target: &[f64]) -> f64 {
    debug_assert_eq!(recon.len(), target.len());
    if recon.is_empty() {
        return 0.0;
    }
    recon.iter().zip(target).map(|(r, t)| (r - t).abs()).sum::<f64>() / recon.len() as f64
}

/// `1 − SSE/SST` over all elements. A constant target gives 1 for an exact
/// reconstruction and 0 otherwise.
pub fn r2(recon: &[f64], target: &[f64]) -> f64 {
    debug_assert_eq!(recon.len(), target.len());
    if target.is_empty() {
        return 1.0;
    }
    let mean = target.iter().sum::<f64>() / target.len() as f64;
    let sst: f64 = target.iter().map(|t| (t - mean) * (t - mean)).sum();
    let sse: f64 = recon.iter().zip(target).map(|(r, t)| (r - t) * (r - t)).sum();
    if sst == 0.0 {
        return if sse == 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - sse / sst
}

/// Adam moments for every trainable parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerState {
    pub fn adam(n_params: usize, learning_rate: f64) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn for_model(model: &CaeModel, learning_rate: f64) -> Self {
        Self::adam(model.params().len(), learning_rate)
    }

    /// Bias-corrected Adam update.
    pub fn apply(&mut self, params: &mut [f64], grads: &[f64]) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(epochs: usize, batch_size: usize, seed: u64) -> Self {
        Self {
            epochs,
            learning_rate: 1e-3,
            batch_size,
            seed,
        }
    }
}

/// Per-epoch metrics, averaged over the epoch's mini-batches weighted by
/// batch size.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub loss: Vec<f64>,
    pub mae: Vec<f64>,
    pub r2: Vec<f64>,
    pub epoch_seconds: Vec<f64>,
    pub wall_time: f64,
}

impl TrainHistory {
    pub fn epochs(&self) -> usize {
        self.loss.len()
    }

    /// Equality of the recorded metrics, ignoring timings.
    pub fn same_metrics(&self, other: &Self) -> bool {
        self.loss == other.loss && self.mae == other.mae && self.r2 == other.r2
    }
}

/// Mini-batch Adam training with a seeded shuffle per epoch. Leaves the
/// model in infer mode.
pub fn train(model: &mut CaeModel, images: &Batch, config: &TrainConfig) -> Result<(TrainHistory, OptimizerState)> {
    if images.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if config.batch_size == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::invalid(format!("learning rate {} must be positive", config.learning_rate)));
    }
    model.check_batch(images)?;
    let mut opt = OptimizerState::for_model(model, config.learning_rate);
    let mut history = TrainHistory::default();
    let start = Instant::now();
    model.training = true;
    let mut order: Vec<usize> = (0..images.len()).collect();
    for epoch in 0..config.epochs {
        let t0 = Instant::now();
        let mut rng = seed::rng(seed::derive(config.seed, seed::stream::CAE_SHUFFLE, epoch as u64));
        order.sort_unstable();
        order.shuffle(&mut rng);
        let (mut loss, mut mae_sum, mut r2_sum) = (0.0, 0.0, 0.0);
        for idx in order.chunks(config.batch_size) {
            let m = model
                .step(&images.select(idx), &mut opt)
                .map_err(|e| match e {
                    Error::NonFinite(msg) => Error::NonFinite(format!("epoch {epoch}: {msg}")),
                    other => other,
                })?;
            let w = idx.len() as f64;
            loss += m.mse * w;
            mae_sum += m.mae * w;
            r2_sum += m.r2 * w;
        }
        let n = images.len() as f64;
        history.loss.push(loss / n);
        history.mae.push(mae_sum / n);
        history.r2.push(r2_sum / n);
        history.epoch_seconds.push(t0.elapsed().as_secs_f64());
    }
    history.wall_time = start.elapsed().as_secs_f64();
    model.training = false;
    Ok((history, opt))
}

pub fn count_params(model: &CaeModel) -> ParamCounts {
    model.count_params()
}

pub fn latent_codes(model: &CaeModel, images: &Batch) -> Result<DMatrix<f64>> {
    model.latent_codes(images)
}

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
