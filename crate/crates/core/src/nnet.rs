//! A small dual-head network: a rectifier trunk feeding two dense branches
//! that predict the article-level (global) and caption-level (local) topic
//! distributions through logistic outputs.
//!
//! Everything is 8-byte floats; gradients are exact reverse-mode derivatives
//! of the batch-mean loss and are checked against central differences.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::sampling::rng_from_seed;

pub const CHECKPOINT_FORMAT: &str = "topicnet-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Floor applied to log arguments in the cross-entropy.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        units: usize,
    },
    /// Valid (unpadded) stride-1 convolution over a `channels × height × width` input.
    Conv2d {
        channels: usize,
        height: usize,
        width: usize,
        out_channels: usize,
        kernel: usize,
    },
}

/// Shape of a [`Network`]: input width, trunk layers, hidden widths of each
/// head branch, and the topic count K.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub trunk: Vec<LayerSpec>,
    #[serde(default)]
    pub head_hidden: Vec<usize>,
    pub k: usize,
}

impl Architecture {
    /// Dense rectifier trunk with the given widths and single-layer heads.
    pub fn mlp(input_dim: usize, hidden: &[usize], k: usize) -> Self {
        Architecture {
            input_dim,
            trunk: hidden.iter().map(|&units| LayerSpec::Dense { units }).collect(),
            head_hidden: Vec::new(),
            k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// Per-topic binary cross-entropy of the logistic outputs against the soft targets.
    #[default]
    SigmoidCrossEntropy,
    /// `−Σ t·log softmax(logits)` per head.
    SoftmaxCrossEntropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dense {
    inputs: usize,
    outputs: usize,
    /// outputs × inputs, row-major
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Dense {
    fn forward(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.outputs);
        for (i, row) in x.iter_rows().enumerate() {
            let o_row = out.row_mut(i);
            for (o, dst) in o_row.iter_mut().enumerate() {
                let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                *dst = self.bias[o] + w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        out
    }

    /// Returns (d input, d weights, d bias) given d pre-activation.
    fn backward(&self, x: &Matrix, delta: &Matrix) -> (Matrix, Vec<f64>, Vec<f64>) {
        let mut gw = vec![0.0; self.weights.len()];
        let mut gb = vec![0.0; self.outputs];
        let mut gx = Matrix::zeros(x.rows(), self.inputs);
        for i in 0..x.rows() {
            let xi = x.row(i);
            let di = delta.row(i);
            let gxi = gx.row_mut(i);
            for (o, &d) in di.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                let g = &mut gw[o * self.inputs..(o + 1) * self.inputs];
                for j in 0..self.inputs {
                    g[j] += d * xi[j];
                    gxi[j] += d * w[j];
                }
            }
        }
        (gx, gw, gb)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Conv2d {
    channels: usize,
    height: usize,
    width: usize,
    out_channels: usize,
    kernel: usize,
    /// out_channels × channels × kernel × kernel
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Conv2d {
    fn out_hw(&self) -> (usize, usize) {
        (self.height - self.kernel + 1, self.width - self.kernel + 1)
    }

    fn output_dim(&self) -> usize {
        let (h, w) = self.out_hw();
        self.out_channels * h * w
    }

    fn widx(&self, oc: usize, ic: usize, ky: usize, kx: usize) -> usize {
        ((oc * self.channels + ic) * self.kernel + ky) * self.kernel + kx
    }

    fn forward(&self, x: &Matrix) -> Matrix {
        let (oh, ow) = self.out_hw();
        let mut out = Matrix::zeros(x.rows(), self.output_dim());
        for (n, input) in x.iter_rows().enumerate() {
            let dst = out.row_mut(n);
            for oc in 0..self.out_channels {
                for y in 0..oh {
                    for xx in 0..ow {
                        let mut acc = self.bias[oc];
                        for ic in 0..self.channels {
                            for ky in 0..self.kernel {
                                let in_row = (ic * self.height + y + ky) * self.width + xx;
                                for kx in 0..self.kernel {
                                    acc += self.weights[self.widx(oc, ic, ky, kx)] * input[in_row + kx];
                                }
                            }
                        }
                        dst[(oc * oh + y) * ow + xx] = acc;
                    }
                }
            }
        }
        out
    }

    fn backward(&self, x: &Matrix, delta: &Matrix) -> (Matrix, Vec<f64>, Vec<f64>) {
        let (oh, ow) = self.out_hw();
        let mut gw = vec![0.0; self.weights.len()];
        let mut gb = vec![0.0; self.out_channels];
        let mut gx = Matrix::zeros(x.rows(), self.channels * self.height * self.width);
        for n in 0..x.rows() {
            let input = x.row(n);
            let d = delta.row(n);
            let gxn = gx.row_mut(n);
            for oc in 0..self.out_channels {
                for y in 0..oh {
                    for xx in 0..ow {
                        let g = d[(oc * oh + y) * ow + xx];
                        if g == 0.0 {
                            continue;
                        }
                        gb[oc] += g;
                        for ic in 0..self.channels {
                            for ky in 0..self.kernel {
                                let in_row = (ic * self.height + y + ky) * self.width + xx;
                                for kx in 0..self.kernel {
                                    let wi = self.widx(oc, ic, ky, kx);
                                    gw[wi] += g * input[in_row + kx];
                                    gxn[in_row + kx] += g * self.weights[wi];
                                }
                            }
                        }
                    }
                }
            }
        }
        (gx, gw, gb)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Layer {
    Dense(Dense),
    Conv2d(Conv2d),
}

impl Layer {
    fn output_dim(&self) -> usize {
        match self {
            Layer::Dense(d) => d.outputs,
            Layer::Conv2d(c) => c.output_dim(),
        }
    }

    fn forward(&self, x: &Matrix) -> Matrix {
        match self {
            Layer::Dense(d) => d.forward(x),
            Layer::Conv2d(c) => c.forward(x),
        }
    }

    fn backward(&self, x: &Matrix, delta: &Matrix) -> (Matrix, Vec<f64>, Vec<f64>) {
        match self {
            Layer::Dense(d) => d.backward(x, delta),
            Layer::Conv2d(c) => c.backward(x, delta),
        }
    }

    fn params(&self) -> [&[f64]; 2] {
        match self {
            Layer::Dense(d) => [&d.weights, &d.bias],
            Layer::Conv2d(c) => [&c.weights, &c.bias],
        }
    }

    fn params_mut(&mut self) -> [&mut Vec<f64>; 2] {
        match self {
            Layer::Dense(d) => [&mut d.weights, &mut d.bias],
            Layer::Conv2d(c) => [&mut c.weights, &mut c.bias],
        }
    }
}

/// Gradient tensors in [`Network::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Per-head batch-mean losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub global: f64,
    pub local: f64,
    pub total: f64,
}

/// Activations kept from [`Network::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    trunk_inputs: Vec<Matrix>,
    trunk_pre: Vec<Matrix>,
    trunk_out: Matrix,
    global: HeadPass,
    local: HeadPass,
}

#[derive(Debug, Clone)]
struct HeadPass {
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    logits: Matrix,
    outputs: Matrix,
}

impl ForwardPass {
    /// Logistic outputs of the article-level head, one row per sample.
    pub fn global_outputs(&self) -> &Matrix {
        &self.global.outputs
    }

    /// Logistic outputs of the caption-level head, one row per sample.
    pub fn local_outputs(&self) -> &Matrix {
        &self.local.outputs
    }

    pub fn global_logits(&self) -> &Matrix {
        &self.global.logits
    }

    pub fn local_logits(&self) -> &Matrix {
        &self.local.logits
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Architecture,
    trunk: Vec<Layer>,
    head_global: Vec<Dense>,
    head_local: Vec<Dense>,
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn relu_inplace(m: &mut Matrix) {
    m.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
}

fn relu_mask(delta: &mut Matrix, pre: &Matrix) {
    for (d, &p) in delta.as_mut_slice().iter_mut().zip(pre.as_slice()) {
        if p <= 0.0 {
            *d = 0.0;
        }
    }
}

fn new_dense(
    init: &mut dyn FnMut(usize, usize, usize) -> Vec<f64>,
    inputs: usize,
    outputs: usize,
) -> Result<Dense> {
    if outputs == 0 {
        return Err(Error::InvalidDimension("dense layer with zero units".into()));
    }
    Ok(Dense {
        inputs,
        outputs,
        weights: init(inputs, outputs, inputs * outputs),
        bias: vec![0.0; outputs],
    })
}

impl Network {
    /// Glorot-uniform weights, zero biases.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let mut init = |fan_in: usize, fan_out: usize, n: usize| -> Vec<f64> {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..n).map(|_| rng.random_range(-limit..=limit)).collect()
        };
        Network::build(arch, &mut init)
    }

    /// All weights and biases zero.
    pub fn zeros(arch: Architecture) -> Result<Self> {
        Network::build(arch, &mut |_, _, n| vec![0.0; n])
    }

    fn build(arch: Architecture, init: &mut dyn FnMut(usize, usize, usize) -> Vec<f64>) -> Result<Self> {
        if arch.input_dim == 0 || arch.k == 0 {
            return Err(Error::InvalidDimension("input_dim and K must be positive".into()));
        }
        let mut trunk = Vec::with_capacity(arch.trunk.len());
        let mut dim = arch.input_dim;
        for spec in &arch.trunk {
            let layer = match *spec {
                LayerSpec::Dense { units } => Layer::Dense(new_dense(init, dim, units)?),
                LayerSpec::Conv2d {
                    channels,
                    height,
                    width,
                    out_channels,
                    kernel,
                } => {
                    if channels * height * width != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            got: channels * height * width,
                        });
                    }
                    if kernel == 0 || kernel > height || kernel > width || out_channels == 0 {
                        return Err(Error::InvalidDimension("bad convolution geometry".into()));
                    }
                    let fan = kernel * kernel;
                    Layer::Conv2d(Conv2d {
                        channels,
                        height,
                        width,
                        out_channels,
                        kernel,
                        weights: init(channels * fan, out_channels * fan, out_channels * channels * fan),
                        bias: vec![0.0; out_channels],
                    })
                }
            };
            dim = layer.output_dim();
            trunk.push(layer);
        }
        let mut head = || -> Result<Vec<Dense>> {
            let mut layers = Vec::new();
            let mut d = dim;
            for &h in &arch.head_hidden {
                layers.push(new_dense(init, d, h)?);
                d = h;
            }
            layers.push(new_dense(init, d, arch.k)?);
            Ok(layers)
        };
        let head_global = head()?;
        let head_local = head()?;
        Ok(Network {
            arch,
            trunk,
            head_global,
            head_local,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn input_dim(&self) -> usize {
        self.arch.input_dim
    }

    pub fn k(&self) -> usize {
        self.arch.k
    }

    /// Parameter tensors: trunk layers, then global head, then local head;
    /// weights before bias within each layer.
    pub fn params(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.trunk {
            out.extend(l.params());
        }
        for d in self.head_global.iter().chain(&self.head_local) {
            out.push(&d.weights);
            out.push(&d.bias);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = Vec::new();
        for l in &mut self.trunk {
            out.extend(l.params_mut());
        }
        for d in self.head_global.iter_mut().chain(self.head_local.iter_mut()) {
            out.push(&mut d.weights);
            out.push(&mut d.bias);
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Replaces all parameters; shapes must match [`Network::params`].
    pub fn set_params(&mut self, values: Vec<Vec<f64>>) -> Result<()> {
        let mut slots = self.params_mut();
        if slots.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: slots.len(),
                got: values.len(),
            });
        }
        for (slot, v) in slots.iter().zip(&values) {
            if slot.len() != v.len() {
                return Err(Error::DimensionMismatch {
                    expected: slot.len(),
                    got: v.len(),
                });
            }
        }
        for (slot, v) in slots.iter_mut().zip(values) {
            **slot = v;
        }
        Ok(())
    }

    fn head_forward(layers: &[Dense], x: &Matrix) -> HeadPass {
        let mut inputs = Vec::with_capacity(layers.len());
        let mut pre = Vec::with_capacity(layers.len());
        let mut h = x.clone();
        let (last, hidden) = layers.split_last().expect("head has an output layer");
        for layer in hidden {
            let z = layer.forward(&h);
            inputs.push(std::mem::replace(&mut h, z.clone()));
            relu_inplace(&mut h);
            pre.push(z);
        }
        let logits = last.forward(&h);
        inputs.push(h);
        let mut outputs = logits.clone();
        outputs.as_mut_slice().iter_mut().for_each(|v| *v = logistic(*v));
        HeadPass {
            inputs,
            pre,
            logits,
            outputs,
        }
    }

    /// Runs a batch (one sample per row) through both heads.
    pub fn forward(&self, batch: &Matrix) -> Result<ForwardPass> {
        if batch.cols() != self.arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.arch.input_dim,
                got: batch.cols(),
            });
        }
        let mut trunk_inputs = Vec::with_capacity(self.trunk.len());
        let mut trunk_pre = Vec::with_capacity(self.trunk.len());
        let mut h = batch.clone();
        for layer in &self.trunk {
            let z = layer.forward(&h);
            trunk_inputs.push(std::mem::replace(&mut h, z.clone()));
            relu_inplace(&mut h);
            trunk_pre.push(z);
        }
        let global = Network::head_forward(&self.head_global, &h);
        let local = Network::head_forward(&self.head_local, &h);
        Ok(ForwardPass {
            trunk_inputs,
            trunk_pre,
            trunk_out: h,
            global,
            local,
        })
    }

    /// Loss of a completed forward pass.
    pub fn loss(
        &self,
        pass: &ForwardPass,
        targets_global: &Matrix,
        targets_local: &Matrix,
        kind: LossKind,
    ) -> Result<LossBreakdown> {
        let (global, local) = match kind {
            LossKind::SigmoidCrossEntropy => (
                sigmoid_cross_entropy(&pass.global.outputs, targets_global)?,
                sigmoid_cross_entropy(&pass.local.outputs, targets_local)?,
            ),
            LossKind::SoftmaxCrossEntropy => (
                softmax_cross_entropy(&pass.global.logits, targets_global)?,
                softmax_cross_entropy(&pass.local.logits, targets_local)?,
            ),
        };
        Ok(LossBreakdown {
            global,
            local,
            total: global + local,
        })
    }

    fn head_backward(layers: &[Dense], pass: &HeadPass, mut delta: Matrix, grads: &mut Vec<Vec<f64>>) -> Matrix {
        let mut layer_grads = Vec::with_capacity(layers.len());
        for (i, layer) in layers.iter().enumerate().rev() {
            let (mut gx, gw, gb) = layer.backward(&pass.inputs[i], &delta);
            layer_grads.push((gw, gb));
            if i > 0 {
                relu_mask(&mut gx, &pass.pre[i - 1]);
            }
            delta = gx;
        }
        for (gw, gb) in layer_grads.into_iter().rev() {
            grads.push(gw);
            grads.push(gb);
        }
        delta
    }

    /// Gradient of the batch-mean loss with respect to every parameter.
    pub fn backward(
        &self,
        pass: &ForwardPass,
        targets_global: &Matrix,
        targets_local: &Matrix,
        kind: LossKind,
    ) -> Result<Gradients> {
        let n = pass.trunk_out.rows();
        for t in [targets_global, targets_local] {
            if t.rows() != n || t.cols() != self.arch.k {
                return Err(Error::DimensionMismatch {
                    expected: n * self.arch.k,
                    got: t.rows() * t.cols(),
                });
            }
        }
        let head_delta = |head: &HeadPass, target: &Matrix| -> Matrix {
            let pred = match kind {
                LossKind::SigmoidCrossEntropy => head.outputs.clone(),
                LossKind::SoftmaxCrossEntropy => softmax_rows(&head.logits),
            };
            let mut d = pred;
            let inv_n = 1.0 / n as f64;
            for ((dv, &t), row_sum) in d
                .as_mut_slice()
                .iter_mut()
                .zip(target.as_slice())
                .zip(target_row_sums(target, kind))
            {
                // softmax: ∂/∂z of −Σ t log softmax(z) = softmax(z)·Σt − t
                *dv = (*dv * row_sum - t) * inv_n;
            }
            d
        };

        let mut head_grads_g = Vec::new();
        let mut head_grads_l = Vec::new();
        let dg = Network::head_backward(
            &self.head_global,
            &pass.global,
            head_delta(&pass.global, targets_global),
            &mut head_grads_g,
        );
        let dl = Network::head_backward(
            &self.head_local,
            &pass.local,
            head_delta(&pass.local, targets_local),
            &mut head_grads_l,
        );
        let mut delta = dg;
        for (a, b) in delta.as_mut_slice().iter_mut().zip(dl.as_slice()) {
            *a += b;
        }

        let mut trunk_grads = Vec::with_capacity(self.trunk.len());
        for (i, layer) in self.trunk.iter().enumerate().rev() {
            relu_mask(&mut delta, &pass.trunk_pre[i]);
            let (gx, gw, gb) = layer.backward(&pass.trunk_inputs[i], &delta);
            trunk_grads.push((gw, gb));
            delta = gx;
        }
        let mut all = Vec::with_capacity(2 * (self.trunk.len() + self.head_global.len() * 2));
        for (gw, gb) in trunk_grads.into_iter().rev() {
            all.push(gw);
            all.push(gb);
        }
        all.extend(head_grads_g);
        all.extend(head_grads_l);
        Ok(Gradients(all))
    }

    /// Forward, loss and backward in one call.
    pub fn loss_and_gradients(
        &self,
        batch: &Matrix,
        targets_global: &Matrix,
        targets_local: &Matrix,
        kind: LossKind,
    ) -> Result<(LossBreakdown, Gradients)> {
        let pass = self.forward(batch)?;
        let loss = self.loss(&pass, targets_global, targets_local, kind)?;
        let grads = self.backward(&pass, targets_global, targets_local, kind)?;
        Ok((loss, grads))
    }

    pub fn save(&self, path: impl AsRef<Path>, opt: Option<&OptimizerState>, loss: LossKind) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_checkpoint_json(opt, loss)?).map_err(|e| Error::io(path, e))
    }

    pub fn to_checkpoint_json(&self, opt: Option<&OptimizerState>, loss: LossKind) -> Result<String> {
        let ckpt = CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            architecture: self.arch.clone(),
            loss,
            params: self.params().into_iter().map(<[f64]>::to_vec).collect(),
            optimizer: opt.cloned(),
        };
        Ok(serde_json::to_string(&ckpt)?)
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Checkpoint> {
        let f: CheckpointFile = serde_json::from_str(text)?;
        if f.format != CHECKPOINT_FORMAT || f.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION}, found {} v{}",
                f.format, f.version
            )));
        }
        let mut net = Network::zeros(f.architecture)?;
        net.set_params(f.params)?;
        if let Some(opt) = &f.optimizer {
            let shapes: Vec<usize> = net.params().iter().map(|p| p.len()).collect();
            let got: Vec<usize> = opt.velocity.iter().map(Vec::len).collect();
            if shapes != got {
                return Err(Error::Format("optimizer state does not match network".into()));
            }
        }
        Ok(Checkpoint {
            network: net,
            optimizer: f.optimizer,
            loss: f.loss,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Network::from_checkpoint_json(&text)
    }
}

fn target_row_sums(target: &Matrix, kind: LossKind) -> impl Iterator<Item = f64> + '_ {
    let k = target.cols();
    (0..target.rows() * k).map(move |i| match kind {
        LossKind::SigmoidCrossEntropy => 1.0,
        LossKind::SoftmaxCrossEntropy => target.row(i / k).iter().sum(),
    })
}

fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

fn check_same_shape(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.rows() * a.cols(),
            got: b.rows() * b.cols(),
        });
    }
    Ok(())
}

/// Batch mean of `Σ_k −t·ln(o) − (1−t)·ln(1−o)`, log arguments floored at [`LOG_FLOOR`].
pub fn sigmoid_cross_entropy(outputs: &Matrix, targets: &Matrix) -> Result<f64> {
    check_same_shape(outputs, targets)?;
    let total: f64 = outputs
        .as_slice()
        .iter()
        .zip(targets.as_slice())
        .map(|(&o, &t)| -t * o.max(LOG_FLOOR).ln() - (1.0 - t) * (1.0 - o).max(LOG_FLOOR).ln())
        .sum();
    let loss = total / outputs.rows().max(1) as f64;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok(loss)
}

/// Batch mean of `−Σ_k t·ln softmax(z)_k`.
pub fn softmax_cross_entropy(logits: &Matrix, targets: &Matrix) -> Result<f64> {
    check_same_shape(logits, targets)?;
    let probs = softmax_rows(logits);
    let total: f64 = probs
        .as_slice()
        .iter()
        .zip(targets.as_slice())
        .map(|(&p, &t)| -t * p.max(LOG_FLOOR).ln())
        .sum();
    let loss = total / logits.rows().max(1) as f64;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok(loss)
}

/// Momentum SGD with step decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub base_lr: f64,
    pub decay_factor: f64,
    pub decay_every: u64,
    pub momentum: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            base_lr: 0.001,
            decay_factor: 0.1,
            decay_every: 200_000,
            momentum: 0.9,
        }
    }
}

impl SgdConfig {
    /// `base_lr · decay_factor^⌊iteration / decay_every⌋`
    pub fn lr_at(&self, iteration: u64) -> f64 {
        let steps = iteration / self.decay_every.max(1);
        self.base_lr * self.decay_factor.powi(steps.min(i32::MAX as u64) as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: SgdConfig,
    pub velocity: Vec<Vec<f64>>,
    pub iteration: u64,
}

impl OptimizerState {
    pub fn new(net: &Network, config: SgdConfig) -> Self {
        OptimizerState {
            config,
            velocity: net.params().iter().map(|p| vec![0.0; p.len()]).collect(),
            iteration: 0,
        }
    }

    pub fn current_lr(&self) -> f64 {
        self.config.lr_at(self.iteration)
    }
}

/// `v ← momentum·v − lr(iter)·g; θ ← θ + v; iter += 1`
pub fn sgd_step(net: &mut Network, grads: &Gradients, opt: &mut OptimizerState) -> Result<()> {
    let lr = opt.current_lr();
    let mu = opt.config.momentum;
    let mut params = net.params_mut();
    if params.len() != grads.0.len() || params.len() != opt.velocity.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            got: grads.0.len(),
        });
    }
    for ((p, g), v) in params.iter().zip(&grads.0).zip(&opt.velocity) {
        if p.len() != g.len() || p.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                got: g.len(),
            });
        }
    }
    for ((p, g), v) in params.iter_mut().zip(&grads.0).zip(opt.velocity.iter_mut()) {
        for ((pi, gi), vi) in p.iter_mut().zip(g).zip(v.iter_mut()) {
            *vi = mu * *vi - lr * gi;
            *pi += *vi;
        }
    }
    opt.iteration += 1;
    Ok(())
}

/// Largest relative disagreement between backprop and central differences,
/// `|a − n| / max(|a|, |n|, 1e-8)`, over every parameter.
pub fn grad_check(
    net: &Network,
    batch: &Matrix,
    targets_global: &Matrix,
    targets_local: &Matrix,
    epsilon: f64,
    kind: LossKind,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidHyperparameter(format!("epsilon = {epsilon}")));
    }
    let (_, analytic) = net.loss_and_gradients(batch, targets_global, targets_local, kind)?;
    let mut probe = net.clone();
    let eval = |n: &Network| -> Result<f64> {
        let pass = n.forward(batch)?;
        Ok(n.loss(&pass, targets_global, targets_local, kind)?.total)
    };
    let mut worst = 0.0f64;
    for (t, grad) in analytic.0.iter().enumerate() {
        for (j, &a) in grad.iter().enumerate() {
            let orig = probe.params()[t][j];
            probe.params_mut()[t][j] = orig + epsilon;
            let up = eval(&probe)?;
            probe.params_mut()[t][j] = orig - epsilon;
            let down = eval(&probe)?;
            probe.params_mut()[t][j] = orig;
            let numeric = (up - down) / (2.0 * epsilon);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

/// Network, optional optimizer state and the loss it was trained with.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub network: Network,
    pub optimizer: Option<OptimizerState>,
    pub loss: LossKind,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    architecture: Architecture,
    loss: LossKind,
    params: Vec<Vec<f64>>,
    optimizer: Option<OptimizerState>,
}

/// Reads a binary portable pixmap (`P6`, max value 255) into channel-interleaved
/// row-major values in `[0, 1]`.
pub fn read_ppm(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ppm(&bytes)
}

pub fn parse_ppm(bytes: &[u8]) -> Result<Vec<f64>> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::TruncatedFile("incomplete pixmap header".into()));
        }
        fields.push(&bytes[start..pos]);
        if fields.len() == 1 && fields[0] != b"P6" {
            return Err(Error::UnsupportedFormat(format!(
                "magic `{}`, expected P6",
                String::from_utf8_lossy(fields[0])
            )));
        }
    }
    let num = |f: &[u8]| -> Result<usize> {
        std::str::from_utf8(f)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::UnsupportedFormat(format!("bad header field `{}`", String::from_utf8_lossy(f))))
    };
    let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("max value {maxval}, expected 255")));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::TruncatedFile("missing raster".into()));
    }
    pos += 1;
    let needed = width * height * 3;
    let data = &bytes[pos..];
    if data.len() < needed {
        return Err(Error::TruncatedFile(format!(
            "raster has {} bytes, expected {needed}",
            data.len()
        )));
    }
    Ok(data[..needed].iter().map(|&b| b as f64 / 255.0).collect())
}
