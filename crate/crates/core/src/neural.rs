//! From-scratch feedforward networks: fully connected and circularly padded
//! (transposed) convolution layers with smooth bounded activations, plus
//! reverse-mode gradients, regression training, and checkpointing.
//!
//! Convolutions are square-kernel, square-spatial, channel-major, and always
//! circular: spatial indices wrap modulo the side length. A stride-σ
//! convolution consumes an m×m input with m divisible by σ and emits
//! (m/σ)×(m/σ); its transpose scatters an m×m input onto (mσ)×(mσ). The two
//! free kernels [`conv_apply`] and [`conv_transpose_apply`] are exact
//! adjoints of one another for the same kernel tensor, which is also what
//! makes backpropagation through either layer kind the other's forward.

use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded_rng};

/// Pointwise nonlinearity. Tanh and sigmoid are bounded, smooth, and have
/// nonvanishing derivative everywhere, which the injectivity analysis
/// relies on; identity marks purely linear layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation value a = σ(z).
    #[inline]
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }

    /// Output range as an interval, None for unbounded.
    pub fn range(self) -> Option<(f64, f64)> {
        match self {
            Activation::Tanh => Some((-1.0, 1.0)),
            Activation::Sigmoid => Some((0.0, 1.0)),
            Activation::Identity => None,
        }
    }
}

/// Shape and wiring of one layer, without its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerKind {
    Dense {
        input: usize,
        output: usize,
    },
    /// k=in_channels at spatial×spatial, stride σ, emits out_channels at
    /// (spatial/σ)².
    Conv {
        in_channels: usize,
        out_channels: usize,
        spatial: usize,
        kernel: usize,
        stride: usize,
    },
    /// Adjoint wiring: k=in_channels at spatial², emits out_channels at
    /// (spatial·σ)².
    ConvTranspose {
        in_channels: usize,
        out_channels: usize,
        spatial: usize,
        kernel: usize,
        stride: usize,
    },
}

impl LayerKind {
    pub fn input_dim(&self) -> usize {
        match *self {
            LayerKind::Dense { input, .. } => input,
            LayerKind::Conv { in_channels, spatial, .. }
            | LayerKind::ConvTranspose { in_channels, spatial, .. } => {
                in_channels * spatial * spatial
            }
        }
    }

    pub fn output_dim(&self) -> usize {
        match *self {
            LayerKind::Dense { output, .. } => output,
            LayerKind::Conv { out_channels, spatial, stride, .. } => {
                let n = spatial / stride;
                out_channels * n * n
            }
            LayerKind::ConvTranspose { out_channels, spatial, stride, .. } => {
                let n = spatial * stride;
                out_channels * n * n
            }
        }
    }

    /// Output spatial side for the convolutional kinds.
    pub fn output_spatial(&self) -> Option<usize> {
        match *self {
            LayerKind::Dense { .. } => None,
            LayerKind::Conv { spatial, stride, .. } => Some(spatial / stride),
            LayerKind::ConvTranspose { spatial, stride, .. } => Some(spatial * stride),
        }
    }

    pub fn weight_count(&self) -> usize {
        match *self {
            LayerKind::Dense { input, output } => input * output,
            LayerKind::Conv { in_channels, out_channels, kernel, .. }
            | LayerKind::ConvTranspose { in_channels, out_channels, kernel, .. } => {
                in_channels * out_channels * kernel * kernel
            }
        }
    }

    pub fn bias_count(&self) -> usize {
        match *self {
            LayerKind::Dense { output, .. } => output,
            LayerKind::Conv { out_channels, .. } | LayerKind::ConvTranspose { out_channels, .. } => {
                out_channels
            }
        }
    }

    fn fan_in(&self) -> usize {
        match *self {
            LayerKind::Dense { input, .. } => input,
            LayerKind::Conv { in_channels, kernel, .. }
            | LayerKind::ConvTranspose { in_channels, kernel, .. } => {
                in_channels * kernel * kernel
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            LayerKind::Dense { input, output } => {
                if input == 0 || output == 0 {
                    return Err(Error::Shape("dense layer dimensions must be positive".into()));
                }
            }
            LayerKind::Conv { in_channels, out_channels, spatial, kernel, stride } => {
                if in_channels == 0 || out_channels == 0 || spatial == 0 || kernel == 0 {
                    return Err(Error::Shape("conv layer dimensions must be positive".into()));
                }
                if kernel > spatial {
                    return Err(Error::Shape(format!(
                        "kernel {kernel} exceeds spatial side {spatial}"
                    )));
                }
                if stride == 0 || spatial % stride != 0 {
                    return Err(Error::Shape(format!(
                        "stride {stride} must be positive and divide spatial side {spatial}"
                    )));
                }
            }
            LayerKind::ConvTranspose { in_channels, out_channels, spatial, kernel, stride } => {
                if in_channels == 0 || out_channels == 0 || spatial == 0 || kernel == 0 {
                    return Err(Error::Shape(
                        "conv_transpose layer dimensions must be positive".into(),
                    ));
                }
                if stride == 0 {
                    return Err(Error::Shape("stride must be positive".into()));
                }
                if kernel > spatial * stride {
                    return Err(Error::Shape(format!(
                        "kernel {kernel} exceeds output spatial side {}",
                        spatial * stride
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Circular convolution, channel-major vectors.
///
/// `kernel` is indexed `[out_c][in_c][p][q]`; `x` holds `in_ch` channels of
/// `spatial`² entries; the result holds `out_ch` channels of `(spatial/stride)²`.
pub fn conv_apply(
    kernel: &[f64],
    out_ch: usize,
    in_ch: usize,
    ksize: usize,
    stride: usize,
    x: &[f64],
    spatial: usize,
) -> Result<Vec<f64>> {
    if kernel.len() != out_ch * in_ch * ksize * ksize {
        return Err(Error::Shape(format!(
            "kernel has {} entries, expected {}",
            kernel.len(),
            out_ch * in_ch * ksize * ksize
        )));
    }
    if x.len() != in_ch * spatial * spatial {
        return Err(Error::Shape(format!(
            "conv input has {} entries, expected {}",
            x.len(),
            in_ch * spatial * spatial
        )));
    }
    if stride == 0 || spatial % stride != 0 {
        return Err(Error::Shape(format!(
            "stride {stride} must divide spatial side {spatial}"
        )));
    }
    let n = spatial / stride;
    let mut out = vec![0.0; out_ch * n * n];
    for c in 0..out_ch {
        for cp in 0..in_ch {
            let kbase = (c * in_ch + cp) * ksize * ksize;
            let xbase = cp * spatial * spatial;
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for p in 0..ksize {
                        let row = (i * stride + p) % spatial;
                        for q in 0..ksize {
                            let col = (j * stride + q) % spatial;
                            acc += kernel[kbase + p * ksize + q] * x[xbase + row * spatial + col];
                        }
                    }
                    out[(c * n + i) * n + j] += acc;
                }
            }
        }
    }
    Ok(out)
}

/// Adjoint of [`conv_apply`] for the same kernel tensor: takes `out_ch`
/// channels at `(y_spatial)²` and scatters to `in_ch` channels at
/// `(y_spatial·stride)²`, so ⟨conv_apply(K,x), y⟩ = ⟨x, conv_transpose_apply(K,y)⟩.
pub fn conv_transpose_apply(
    kernel: &[f64],
    out_ch: usize,
    in_ch: usize,
    ksize: usize,
    stride: usize,
    y: &[f64],
    y_spatial: usize,
) -> Result<Vec<f64>> {
    if kernel.len() != out_ch * in_ch * ksize * ksize {
        return Err(Error::Shape(format!(
            "kernel has {} entries, expected {}",
            kernel.len(),
            out_ch * in_ch * ksize * ksize
        )));
    }
    if y.len() != out_ch * y_spatial * y_spatial {
        return Err(Error::Shape(format!(
            "transpose input has {} entries, expected {}",
            y.len(),
            out_ch * y_spatial * y_spatial
        )));
    }
    if stride == 0 {
        return Err(Error::Shape("stride must be positive".into()));
    }
    let m = y_spatial * stride;
    let mut out = vec![0.0; in_ch * m * m];
    for c in 0..out_ch {
        let ybase = c * y_spatial * y_spatial;
        for cp in 0..in_ch {
            let kbase = (c * in_ch + cp) * ksize * ksize;
            let obase = cp * m * m;
            for i in 0..y_spatial {
                for j in 0..y_spatial {
                    let v = y[ybase + i * y_spatial + j];
                    for p in 0..ksize {
                        let row = (i * stride + p) % m;
                        for q in 0..ksize {
                            let col = (j * stride + q) % m;
                            out[obase + row * m + col] += kernel[kbase + p * ksize + q] * v;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// One parameterized layer.
///
/// Weight layouts: dense is row-major `[output][input]`; conv is
/// `[out_c][in_c][p][q]`; conv_transpose is `[in_c][out_c][p][q]`, i.e. the
/// conv layout of the adjoint map it computes. Biases are per output
/// feature for dense and per output channel for the convolutional kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub kind: LayerKind,
    pub activation: Activation,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    pub fn new(
        kind: LayerKind,
        activation: Activation,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        kind.validate()?;
        if weights.len() != kind.weight_count() {
            return Err(Error::Shape(format!(
                "layer weights have {} entries, expected {}",
                weights.len(),
                kind.weight_count()
            )));
        }
        if bias.len() != kind.bias_count() {
            return Err(Error::Shape(format!(
                "layer bias has {} entries, expected {}",
                bias.len(),
                kind.bias_count()
            )));
        }
        Ok(Layer { kind, activation, weights, bias })
    }

    /// Seeded initialization: weights uniform in ±1/√fan_in, biases zero.
    pub fn initialized(kind: LayerKind, activation: Activation, rng: &mut impl Rng) -> Result<Self> {
        kind.validate()?;
        let scale = 1.0 / (kind.fan_in() as f64).sqrt();
        let weights = (0..kind.weight_count())
            .map(|_| (2.0 * rng.random::<f64>() - 1.0) * scale)
            .collect();
        Ok(Layer {
            kind,
            activation,
            weights,
            bias: vec![0.0; kind.bias_count()],
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Pre-activation linear map plus bias.
    fn affine(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.kind.input_dim() {
            return Err(Error::Shape(format!(
                "layer input has {} entries, expected {}",
                x.len(),
                self.kind.input_dim()
            )));
        }
        match self.kind {
            LayerKind::Dense { input, output } => {
                let mut z = self.bias.clone();
                for r in 0..output {
                    let wrow = &self.weights[r * input..(r + 1) * input];
                    let mut acc = 0.0;
                    for c in 0..input {
                        acc += wrow[c] * x[c];
                    }
                    z[r] += acc;
                }
                Ok(z)
            }
            LayerKind::Conv { in_channels, out_channels, spatial, kernel, stride } => {
                let mut z = conv_apply(
                    &self.weights,
                    out_channels,
                    in_channels,
                    kernel,
                    stride,
                    x,
                    spatial,
                )?;
                let n = spatial / stride;
                for c in 0..out_channels {
                    for e in 0..n * n {
                        z[c * n * n + e] += self.bias[c];
                    }
                }
                Ok(z)
            }
            LayerKind::ConvTranspose { in_channels, out_channels, spatial, kernel, stride } => {
                // The stored kernel is the conv kernel of the adjoint map
                // (in_channels plays the conv's out role).
                let mut z = conv_transpose_apply(
                    &self.weights,
                    in_channels,
                    out_channels,
                    kernel,
                    stride,
                    x,
                    spatial,
                )?;
                let n = spatial * stride;
                for c in 0..out_channels {
                    for e in 0..n * n {
                        z[c * n * n + e] += self.bias[c];
                    }
                }
                Ok(z)
            }
        }
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.affine(x)?;
        for v in &mut z {
            *v = self.activation.apply(*v);
        }
        Ok(z)
    }

    /// Reverse-mode step. `x` is the layer input, `a` its activation
    /// output, `da` the gradient at the output. Returns the input gradient;
    /// when `grads` is given, accumulates parameter gradients into it.
    fn backward(
        &self,
        x: &[f64],
        a: &[f64],
        da: &[f64],
        mut grads: Option<&mut LayerGrads>,
    ) -> Result<Vec<f64>> {
        // dz = da ⊙ σ′(z), with σ′ recovered from the output value.
        let dz: Vec<f64> = da
            .iter()
            .zip(a)
            .map(|(&g, &av)| g * self.activation.derivative_from_output(av))
            .collect();
        match self.kind {
            LayerKind::Dense { input, output } => {
                if let Some(g) = grads.as_deref_mut() {
                    for r in 0..output {
                        g.bias[r] += dz[r];
                        let grow = &mut g.weights[r * input..(r + 1) * input];
                        for c in 0..input {
                            grow[c] += dz[r] * x[c];
                        }
                    }
                }
                let mut dx = vec![0.0; input];
                for r in 0..output {
                    let wrow = &self.weights[r * input..(r + 1) * input];
                    for c in 0..input {
                        dx[c] += wrow[c] * dz[r];
                    }
                }
                Ok(dx)
            }
            LayerKind::Conv { in_channels, out_channels, spatial, kernel, stride } => {
                let n = spatial / stride;
                if let Some(g) = grads.as_deref_mut() {
                    for c in 0..out_channels {
                        for e in 0..n * n {
                            g.bias[c] += dz[c * n * n + e];
                        }
                    }
                    for c in 0..out_channels {
                        for cp in 0..in_channels {
                            let kbase = (c * in_channels + cp) * kernel * kernel;
                            let xbase = cp * spatial * spatial;
                            for p in 0..kernel {
                                for q in 0..kernel {
                                    let mut acc = 0.0;
                                    for i in 0..n {
                                        let row = (i * stride + p) % spatial;
                                        for j in 0..n {
                                            let col = (j * stride + q) % spatial;
                                            acc += dz[(c * n + i) * n + j]
                                                * x[xbase + row * spatial + col];
                                        }
                                    }
                                    g.weights[kbase + p * kernel + q] += acc;
                                }
                            }
                        }
                    }
                }
                conv_transpose_apply(
                    &self.weights,
                    out_channels,
                    in_channels,
                    kernel,
                    stride,
                    &dz,
                    n,
                )
            }
            LayerKind::ConvTranspose { in_channels, out_channels, spatial, kernel, stride } => {
                let n = spatial * stride;
                if let Some(g) = grads.as_deref_mut() {
                    for c in 0..out_channels {
                        for e in 0..n * n {
                            g.bias[c] += dz[c * n * n + e];
                        }
                    }
                    for cin in 0..in_channels {
                        let xbase = cin * spatial * spatial;
                        for cout in 0..out_channels {
                            let kbase = (cin * out_channels + cout) * kernel * kernel;
                            for p in 0..kernel {
                                for q in 0..kernel {
                                    let mut acc = 0.0;
                                    for i in 0..spatial {
                                        let row = (i * stride + p) % n;
                                        for j in 0..spatial {
                                            let col = (j * stride + q) % n;
                                            acc += x[xbase + i * spatial + j]
                                                * dz[(cout * n + row) * n + col];
                                        }
                                    }
                                    g.weights[kbase + p * kernel + q] += acc;
                                }
                            }
                        }
                    }
                }
                // Backward through a scatter is the matching gather.
                conv_apply(
                    &self.weights,
                    in_channels,
                    out_channels,
                    kernel,
                    stride,
                    &dz,
                    n,
                )
            }
        }
    }
}

/// Per-layer parameter gradients, shaped like the layer's parameters.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Full-network gradients from one reverse pass.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
    pub input: Vec<f64>,
}

/// Feedforward network: an ordered chain of layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    seed: u64,
}

impl Network {
    /// Seeded construction; weights drawn layer by layer in order.
    pub fn new(specs: &[(LayerKind, Activation)], seed: u64) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        let mut rng = seeded_rng(derive_seed(seed, "network init"));
        let mut layers = Vec::with_capacity(specs.len());
        for &(kind, act) in specs {
            layers.push(Layer::initialized(kind, act, &mut rng)?);
        }
        let net = Network { layers, seed };
        net.validate_chain()?;
        Ok(net)
    }

    pub fn from_layers(layers: Vec<Layer>, seed: u64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        let net = Network { layers, seed };
        net.validate_chain()?;
        Ok(net)
    }

    fn validate_chain(&self) -> Result<()> {
        for w in self.layers.windows(2) {
            if w[0].kind.output_dim() != w[1].kind.input_dim() {
                return Err(Error::Shape(format!(
                    "layer output dimension {} does not chain into next input {}",
                    w[0].kind.output_dim(),
                    w[1].kind.input_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].kind.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].kind.output_dim()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut cur = x.to_vec();
        for layer in &self.layers {
            cur = layer.forward(&cur)?;
        }
        Ok(cur)
    }

    /// All intermediate activations: entry 0 is the input, entry i+1 the
    /// output of layer i.
    pub fn forward_full(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for layer in &self.layers {
            let next = layer.forward(acts.last().expect("nonempty"))?;
            acts.push(next);
        }
        Ok(acts)
    }

    fn zero_grads(&self) -> Vec<LayerGrads> {
        self.layers
            .iter()
            .map(|l| LayerGrads {
                weights: vec![0.0; l.weights.len()],
                bias: vec![0.0; l.bias.len()],
            })
            .collect()
    }

    fn backward_from_acts(
        &self,
        acts: &[Vec<f64>],
        output_gradient: &[f64],
        grads: Option<&mut Vec<LayerGrads>>,
    ) -> Result<Vec<f64>> {
        if output_gradient.len() != self.output_dim() {
            return Err(Error::Shape(format!(
                "output gradient has {} entries, expected {}",
                output_gradient.len(),
                self.output_dim()
            )));
        }
        let mut da = output_gradient.to_vec();
        match grads {
            Some(gs) => {
                for (idx, layer) in self.layers.iter().enumerate().rev() {
                    da = layer.backward(&acts[idx], &acts[idx + 1], &da, Some(&mut gs[idx]))?;
                }
            }
            None => {
                for (idx, layer) in self.layers.iter().enumerate().rev() {
                    da = layer.backward(&acts[idx], &acts[idx + 1], &da, None)?;
                }
            }
        }
        Ok(da)
    }

    /// Exact reverse-mode gradients of ⟨output_gradient, f(x)⟩ with respect
    /// to every parameter and the input.
    pub fn backward(&self, x: &[f64], output_gradient: &[f64]) -> Result<Gradients> {
        let acts = self.forward_full(x)?;
        let mut grads = self.zero_grads();
        let input = self.backward_from_acts(&acts, output_gradient, Some(&mut grads))?;
        Ok(Gradients { layers: grads, input })
    }

    /// Jacobian assembled row by row from reverse passes with unit output
    /// gradients.
    pub fn jacobian(&self, x: &[f64]) -> Result<Array2<f64>> {
        let acts = self.forward_full(x)?;
        let out_dim = self.output_dim();
        let in_dim = self.input_dim();
        let mut jac = Array2::zeros((out_dim, in_dim));
        let mut unit = vec![0.0; out_dim];
        for r in 0..out_dim {
            unit[r] = 1.0;
            let row = self.backward_from_acts(&acts, &unit, None)?;
            unit[r] = 0.0;
            for c in 0..in_dim {
                jac[[r, c]] = row[c];
            }
        }
        Ok(jac)
    }

    /// Canonical flat parameter order: per layer, weights then bias.
    pub fn flatten_parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn load_parameters(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.parameter_count() {
            return Err(Error::Shape(format!(
                "parameter block has {} values, network expects {}",
                flat.len(),
                self.parameter_count()
            )));
        }
        let mut pos = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[pos..pos + nw]);
            pos += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[pos..pos + nb]);
            pos += nb;
        }
        Ok(())
    }

    /// Writes a checkpoint: one JSON header line describing the
    /// architecture, then the flat little-endian f64 parameter block.
    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let header = CheckpointHeader {
            format: CHECKPOINT_FORMAT.to_string(),
            version: 1,
            seed: self.seed,
            layers: self
                .layers
                .iter()
                .map(|l| CheckpointLayer { kind: l.kind, activation: l.activation })
                .collect(),
        };
        let mut bytes = serde_json::to_vec(&header).map_err(|e| Error::Malformed {
            what: "checkpoint header",
            detail: e.to_string(),
        })?;
        bytes.push(b'\n');
        for v in self.flatten_parameters() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or(Error::Malformed {
                what: "network checkpoint",
                detail: "missing header line".into(),
            })?;
        let header: CheckpointHeader =
            serde_json::from_slice(&bytes[..newline]).map_err(|e| Error::Malformed {
                what: "network checkpoint",
                detail: format!("bad header: {e}"),
            })?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(Error::Malformed {
                what: "network checkpoint",
                detail: format!("unknown format {:?}", header.format),
            });
        }
        let mut layers = Vec::with_capacity(header.layers.len());
        for cl in &header.layers {
            layers.push(Layer::new(
                cl.kind,
                cl.activation,
                vec![0.0; cl.kind.weight_count()],
                vec![0.0; cl.kind.bias_count()],
            )?);
        }
        let mut net = Network::from_layers(layers, header.seed)?;
        let body = &bytes[newline + 1..];
        if body.len() != net.parameter_count() * 8 {
            return Err(Error::Malformed {
                what: "network checkpoint",
                detail: format!(
                    "parameter block has {} bytes, expected {}",
                    body.len(),
                    net.parameter_count() * 8
                ),
            });
        }
        let flat: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        net.load_parameters(&flat)?;
        Ok(net)
    }
}

const CHECKPOINT_FORMAT: &str = "geogen-network";

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    version: u32,
    seed: u64,
    layers: Vec<CheckpointLayer>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointLayer {
    #[serde(flatten)]
    kind: LayerKind,
    activation: Activation,
}

/// Gradient-descent variants. Momentum keeps a velocity per parameter;
/// Adaptive rescales each step by a running RMS of that parameter's
/// gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Gradient,
    Momentum { beta: f64 },
    Adaptive { beta: f64, epsilon: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Gradient
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Training stops after any epoch whose mean squared error falls to
    /// this value or below. Zero keeps all epochs.
    pub target_loss: f64,
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        match self.optimizer {
            Optimizer::Momentum { beta } => {
                if !(0.0..1.0).contains(&beta) {
                    return Err(Error::InvalidArgument(format!(
                        "momentum beta must lie in [0, 1), got {beta}"
                    )));
                }
            }
            Optimizer::Adaptive { beta, epsilon } => {
                if !(0.0..1.0).contains(&beta) || !(epsilon > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "adaptive parameters out of range: beta {beta}, epsilon {epsilon}"
                    )));
                }
            }
            Optimizer::Gradient => {}
        }
        Ok(())
    }
}

/// Loss curve and stopping point of one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean squared error of each completed epoch, averaged over samples
    /// and output components.
    pub loss_history: Vec<f64>,
    pub final_loss: f64,
    pub epochs_run: usize,
}

/// Minimizes mean squared error over the dataset with the configured
/// optimizer. Deterministic for a fixed seed: the shuffle schedule, batch
/// boundaries, and all summation orders are fixed.
pub fn train_regression(
    net: &mut Network,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::Shape(format!(
            "dataset has {} inputs and {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    let out_dim = net.output_dim();
    for (i, (x, t)) in inputs.iter().zip(targets).enumerate() {
        if x.len() != net.input_dim() || t.len() != out_dim {
            return Err(Error::Shape(format!(
                "sample {i} has shape ({}, {}), expected ({}, {})",
                x.len(),
                t.len(),
                net.input_dim(),
                out_dim
            )));
        }
    }

    let mut shuffle_rng = seeded_rng(derive_seed(config.seed, "train shuffle"));
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut velocity: Option<Vec<LayerGrads>> = None;
    let mut second_moment: Option<Vec<LayerGrads>> = None;
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut sq_err_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = net.zero_grads();
            let scale = 1.0 / (batch.len() * out_dim) as f64;
            for &idx in batch {
                let acts = net.forward_full(&inputs[idx])?;
                let out = acts.last().expect("nonempty activations");
                let dy: Vec<f64> = out
                    .iter()
                    .zip(&targets[idx])
                    .map(|(&o, &t)| {
                        let r = o - t;
                        sq_err_sum += r * r;
                        2.0 * r * scale
                    })
                    .collect();
                net.backward_from_acts(&acts, &dy, Some(&mut grads))?;
            }
            apply_update(net, &grads, config, &mut velocity, &mut second_moment);
        }
        let epoch_loss = sq_err_sum / (inputs.len() * out_dim) as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        history.push(epoch_loss);
        if config.target_loss > 0.0 && epoch_loss <= config.target_loss {
            break;
        }
    }

    let final_loss = *history.last().expect("at least one epoch");
    Ok(TrainReport {
        epochs_run: history.len(),
        final_loss,
        loss_history: history,
    })
}

fn apply_update(
    net: &mut Network,
    grads: &[LayerGrads],
    config: &TrainConfig,
    velocity: &mut Option<Vec<LayerGrads>>,
    second_moment: &mut Option<Vec<LayerGrads>>,
) {
    let lr = config.learning_rate;
    match config.optimizer {
        Optimizer::Gradient => {
            for (layer, g) in net.layers.iter_mut().zip(grads) {
                for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                    *w -= lr * gw;
                }
                for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                    *b -= lr * gb;
                }
            }
        }
        Optimizer::Momentum { beta } => {
            let vel = velocity.get_or_insert_with(|| net.zero_grads());
            for ((layer, g), v) in net.layers.iter_mut().zip(grads).zip(vel) {
                for i in 0..layer.weights.len() {
                    v.weights[i] = beta * v.weights[i] + g.weights[i];
                    layer.weights[i] -= lr * v.weights[i];
                }
                for i in 0..layer.bias.len() {
                    v.bias[i] = beta * v.bias[i] + g.bias[i];
                    layer.bias[i] -= lr * v.bias[i];
                }
            }
        }
        Optimizer::Adaptive { beta, epsilon } => {
            let sm = second_moment.get_or_insert_with(|| net.zero_grads());
            for ((layer, g), s) in net.layers.iter_mut().zip(grads).zip(sm) {
                for i in 0..layer.weights.len() {
                    s.weights[i] = beta * s.weights[i] + (1.0 - beta) * g.weights[i] * g.weights[i];
                    layer.weights[i] -= lr * g.weights[i] / (s.weights[i].sqrt() + epsilon);
                }
                for i in 0..layer.bias.len() {
                    s.bias[i] = beta * s.bias[i] + (1.0 - beta) * g.bias[i] * g.bias[i];
                    layer.bias[i] -= lr * g.bias[i] / (s.bias[i].sqrt() + epsilon);
                }
            }
        }
    }
}

/// Mean squared error of the network over a dataset.
pub fn evaluate_mse(net: &Network, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::Shape("dataset shape mismatch".into()));
    }
    let mut sum = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        let out = net.forward(x)?;
        for (o, tv) in out.iter().zip(t) {
            let r = o - tv;
            sum += r * r;
        }
    }
    Ok(sum / (inputs.len() * net.output_dim()) as f64)
}
