//! A small dense classification network with exact, hand-derived gradients.
//!
//! The architecture is fixed by [`Arch`]: a feature extractor of tanh hidden
//! layers followed by a linear embedding layer, then a linear softmax head.
//! Everything is `f64` and deterministic per seed. The training loss is
//! weighted cross-entropy plus an optional `gamma * MMD^2` alignment term
//! between the embeddings of two unlabeled feature sets; its gradient is
//! computed by explicit reverse-mode passes (no autodiff) and is validated
//! against central finite differences in the test suite.
//!
//! Cross-entropy is fused from logits (log-sum-exp form) inside
//! [`loss_and_grad`] so extreme logits cannot produce `ln(0)`; the
//! standalone [`ce_loss`] operates on probabilities for hand checks.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::divergence::{mmd2_biased_with, mmd2_grad_with, KernelCfg};
use crate::error::{Error, Result};

/// Elementwise nonlinearity of one layer. Hidden layers are tanh; the
/// embedding output and the classification head are linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Identity,
}

/// Network shape: `input_dim -> hidden_dims (tanh each) -> embed_dim
/// (linear) -> num_classes (linear head)`. With `hidden_dims = []` the
/// extractor is a single linear map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arch {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub embed_dim: usize,
    pub num_classes: usize,
}

impl Arch {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, embed_dim: usize, num_classes: usize) -> Self {
        Arch {
            input_dim,
            hidden_dims,
            embed_dim,
            num_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.embed_dim == 0 || self.num_classes == 0 {
            return Err(Error::config(format!(
                "arch dimensions must be positive: input {}, embed {}, classes {}",
                self.input_dim, self.embed_dim, self.num_classes
            )));
        }
        if self.hidden_dims.iter().any(|&h| h == 0) {
            return Err(Error::config("hidden layer width must be positive"));
        }
        Ok(())
    }

    /// Number of layers in the feature extractor; layers at or past this
    /// index belong to the classification head. The embedding is the output
    /// of layer `extractor_layers() - 1`.
    pub fn extractor_layers(&self) -> usize {
        self.hidden_dims.len() + 1
    }

    /// `(in, out, activation)` for every layer, extractor first.
    pub fn layer_shapes(&self) -> Vec<(usize, usize, Activation)> {
        let mut shapes = Vec::with_capacity(self.hidden_dims.len() + 2);
        let mut prev = self.input_dim;
        for &h in &self.hidden_dims {
            shapes.push((prev, h, Activation::Tanh));
            prev = h;
        }
        shapes.push((prev, self.embed_dim, Activation::Identity));
        shapes.push((self.embed_dim, self.num_classes, Activation::Identity));
        shapes
    }

    pub fn num_params(&self) -> usize {
        self.layer_shapes()
            .iter()
            .map(|(i, o, _)| i * o + o)
            .sum()
    }
}

/// One dense layer, weight stored as `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

/// Full parameter set for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    arch: Arch,
    layers: Vec<LayerParams>,
}

impl ModelParams {
    pub fn arch(&self) -> &Arch {
        &self.arch
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    /// Lossless flat view: per layer, weight entries row-major, then bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.arch.num_params());
        for layer in &self.layers {
            flat.extend(layer.weight.iter());
            flat.extend(layer.bias.iter());
        }
        flat
    }

    /// Inverse of [`to_flat`](Self::to_flat); bitwise round-trip.
    pub fn from_flat(arch: &Arch, flat: &[f64]) -> Result<Self> {
        arch.validate()?;
        if flat.len() != arch.num_params() {
            return Err(Error::shape(format!(
                "flat parameter vector has {} entries, arch needs {}",
                flat.len(),
                arch.num_params()
            )));
        }
        let mut layers = Vec::new();
        let mut pos = 0;
        for (inp, out, act) in arch.layer_shapes() {
            let w = Array2::from_shape_vec((out, inp), flat[pos..pos + out * inp].to_vec())
                .expect("length checked above");
            pos += out * inp;
            let b = Array1::from_vec(flat[pos..pos + out].to_vec());
            pos += out;
            layers.push(LayerParams {
                weight: w,
                bias: b,
                activation: act,
            });
        }
        Ok(ModelParams {
            arch: arch.clone(),
            layers,
        })
    }
}

/// Gradient with the same layer structure as [`ModelParams`], plus the loss
/// value it was taken at.
#[derive(Debug, Clone)]
pub struct GradVector {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub loss: f64,
}

impl GradVector {
    pub fn zeros_like(params: &ModelParams) -> Self {
        GradVector {
            weights: params
                .layers
                .iter()
                .map(|l| Array2::zeros(l.weight.raw_dim()))
                .collect(),
            biases: params
                .layers
                .iter()
                .map(|l| Array1::zeros(l.bias.raw_dim()))
                .collect(),
            loss: 0.0,
        }
    }

    /// Same ordering as [`ModelParams::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for (w, b) in self.weights.iter().zip(self.biases.iter()) {
            flat.extend(w.iter());
            flat.extend(b.iter());
        }
        flat
    }

    pub fn add_scaled(&mut self, other: &GradVector, scale: f64) -> Result<()> {
        if self.weights.len() != other.weights.len() {
            return Err(Error::shape("gradient layer counts differ"));
        }
        for (a, b) in self.weights.iter_mut().zip(other.weights.iter()) {
            if a.raw_dim() != b.raw_dim() {
                return Err(Error::shape("gradient weight shapes differ"));
            }
            a.scaled_add(scale, b);
        }
        for (a, b) in self.biases.iter_mut().zip(other.biases.iter()) {
            if a.raw_dim() != b.raw_dim() {
                return Err(Error::shape("gradient bias shapes differ"));
            }
            a.scaled_add(scale, b);
        }
        self.loss += scale * other.loss;
        Ok(())
    }
}

/// A labeled (or weighted) classification batch.
#[derive(Debug, Clone)]
pub struct Batch {
    pub features: Array2<f64>,
    pub labels: Option<Vec<usize>>,
    /// Per-row nonnegative loss weights; `None` means uniform.
    pub weights: Option<Vec<f64>>,
}

impl Batch {
    pub fn new(
        features: Array2<f64>,
        labels: Option<Vec<usize>>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let m = features.nrows();
        if let Some(l) = &labels {
            if l.len() != m {
                return Err(Error::shape(format!(
                    "{} labels for {} rows",
                    l.len(),
                    m
                )));
            }
        }
        if let Some(w) = &weights {
            if w.len() != m {
                return Err(Error::shape(format!(
                    "{} weights for {} rows",
                    w.len(),
                    m
                )));
            }
            if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::data("batch weights must be finite and nonnegative"));
            }
        }
        Ok(Batch {
            features,
            labels,
            weights,
        })
    }
}

/// Forward products for one feature matrix.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Extractor output, one row per input row.
    pub embedding: Array2<f64>,
    pub logits: Array2<f64>,
    /// Row-wise softmax of the logits (max-subtracted).
    pub probs: Array2<f64>,
}

/// Draws weights from a zero-mean normal with standard deviation
/// `sqrt(2 / fan_in)`; biases start at zero. Deterministic per seed.
pub fn init_params(arch: &Arch, seed: u64) -> Result<ModelParams> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::new();
    for (inp, out, act) in arch.layer_shapes() {
        let normal = Normal::new(0.0, (2.0 / inp as f64).sqrt())
            .map_err(|e| Error::numerical(format!("init distribution: {e}")))?;
        let weight = Array2::from_shape_fn((out, inp), |_| normal.sample(&mut rng));
        layers.push(LayerParams {
            weight,
            bias: Array1::zeros(out),
            activation: act,
        });
    }
    Ok(ModelParams {
        arch: arch.clone(),
        layers,
    })
}

fn check_input(params: &ModelParams, x: ArrayView2<f64>) -> Result<()> {
    if x.ncols() != params.arch.input_dim {
        return Err(Error::shape(format!(
            "input has {} columns, model expects {}",
            x.ncols(),
            params.arch.input_dim
        )));
    }
    Ok(())
}

/// All per-layer activations, `acts[0]` being the input and `acts[l + 1]`
/// the output of layer `l`. `upto` limits the stack (e.g. extractor only).
fn forward_stack(params: &ModelParams, x: ArrayView2<f64>, upto: usize) -> Vec<Array2<f64>> {
    let mut acts: Vec<Array2<f64>> = Vec::with_capacity(upto + 1);
    acts.push(x.to_owned());
    for layer in &params.layers[..upto] {
        let mut z = acts.last().expect("nonempty").dot(&layer.weight.t());
        z += &layer.bias;
        if layer.activation == Activation::Tanh {
            z.mapv_inplace(f64::tanh);
        }
        acts.push(z);
    }
    acts
}

fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut probs = logits.clone();
    for mut row in probs.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|z| (z - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|e| e / sum);
    }
    probs
}

/// Runs the full network: embedding, logits, and softmax probabilities.
pub fn forward(params: &ModelParams, x: ArrayView2<f64>) -> Result<ForwardPass> {
    check_input(params, x)?;
    let acts = forward_stack(params, x, params.layers.len());
    let embedding = acts[params.arch.extractor_layers()].clone();
    let logits = acts.last().expect("nonempty").clone();
    let probs = softmax_rows(&logits);
    Ok(ForwardPass {
        embedding,
        logits,
        probs,
    })
}

fn resolve_weights(weights: Option<&[f64]>, m: usize) -> Result<(Vec<f64>, f64)> {
    let w: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != m {
                return Err(Error::shape(format!("{} weights for {} rows", w.len(), m)));
            }
            if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::data("weights must be finite and nonnegative"));
            }
            w.to_vec()
        }
        None => vec![1.0; m],
    };
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::data("weights sum to zero"));
    }
    Ok((w, total))
}

/// Weighted mean negative log-probability of the true labels, computed from
/// probabilities. Intended for hand checks and evaluation; training uses the
/// fused log-sum-exp form inside [`loss_and_grad`].
pub fn ce_loss(probs: ArrayView2<f64>, labels: &[usize], weights: Option<&[f64]>) -> Result<f64> {
    let m = probs.nrows();
    if m == 0 {
        return Err(Error::data("cross-entropy of an empty batch"));
    }
    if labels.len() != m {
        return Err(Error::shape(format!(
            "{} labels for {} rows",
            labels.len(),
            m
        )));
    }
    let (w, total) = resolve_weights(weights, m)?;
    let mut acc = 0.0;
    for i in 0..m {
        let y = labels[i];
        if y >= probs.ncols() {
            return Err(Error::data(format!(
                "label {y} out of range for {} classes",
                probs.ncols()
            )));
        }
        let p = probs[[i, y]];
        if !(p > 0.0) {
            return Err(Error::numerical(format!(
                "zero or invalid probability {p} on the true label of row {i}"
            )));
        }
        acc += w[i] * (-p.ln());
    }
    let loss = acc / total;
    if !loss.is_finite() {
        return Err(Error::numerical("cross-entropy is not finite"));
    }
    Ok(loss)
}

/// Accumulates gradients for a backward pass that starts at the output of
/// layer `last` with upstream gradient `d_out` (w.r.t. post-activation
/// values) and the activation stack `acts` from the matching forward pass.
fn backprop(
    params: &ModelParams,
    acts: &[Array2<f64>],
    mut d_out: Array2<f64>,
    last: usize,
    grads: &mut GradVector,
) {
    for l in (0..=last).rev() {
        let layer = &params.layers[l];
        let d_pre = match layer.activation {
            Activation::Tanh => {
                let a = &acts[l + 1];
                let mut d = d_out;
                d.zip_mut_with(a, |g, &v| *g *= 1.0 - v * v);
                d
            }
            Activation::Identity => d_out,
        };
        grads.weights[l] += &d_pre.t().dot(&acts[l]);
        grads.biases[l] += &d_pre.sum_axis(Axis(0));
        d_out = d_pre.dot(&layer.weight);
    }
}

/// Loss and exact gradient of
/// `CE(cls) + gamma * MMD^2(phi(div.0), phi(div.1))`.
///
/// The divergence term flows through the feature extractor only. When the
/// kernel bandwidth is the median heuristic it is resolved once on the raw
/// `div_pair` features, which do not depend on the parameters, so the
/// analytic gradient is consistent with finite differences of the loss.
/// An empty classification batch is legal and contributes zero to both
/// loss and gradient.
pub fn loss_and_grad(
    params: &ModelParams,
    cls: &Batch,
    div_pair: Option<(ArrayView2<f64>, ArrayView2<f64>)>,
    gamma: f64,
    kernel: &KernelCfg,
) -> Result<(f64, GradVector)> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::config(format!("gamma must be finite and >= 0, got {gamma}")));
    }
    check_input(params, cls.features.view())?;
    let m = cls.features.nrows();

    let mut grads = GradVector::zeros_like(params);

    // Cross-entropy, fused from logits. An empty batch contributes zero
    // (pseudo-labeled pairs can have no selected rows in a split).
    let mut ce = 0.0;
    if m > 0 {
        let labels = cls
            .labels
            .as_ref()
            .ok_or_else(|| Error::data("classification batch has no labels"))?;
        if labels.len() != m {
            return Err(Error::shape(format!("{} labels for {} rows", labels.len(), m)));
        }
        let c = params.arch.num_classes;
        if let Some(&bad) = labels.iter().find(|&&y| y >= c) {
            return Err(Error::data(format!("label {bad} out of range for {c} classes")));
        }
        let (w, w_total) = resolve_weights(cls.weights.as_deref(), m)?;

        let acts = forward_stack(params, cls.features.view(), params.layers.len());
        let logits = acts.last().expect("nonempty");
        let probs = softmax_rows(logits);
        for i in 0..m {
            let row = logits.row(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
            ce += w[i] * (lse - row[labels[i]]);
        }
        ce /= w_total;
        if !ce.is_finite() {
            return Err(Error::numerical("cross-entropy term is not finite"));
        }
        let mut d_logits = probs;
        for i in 0..m {
            let scale = w[i] / w_total;
            for cc in 0..c {
                let delta = if cc == labels[i] { 1.0 } else { 0.0 };
                d_logits[[i, cc]] = scale * (d_logits[[i, cc]] - delta);
            }
        }
        backprop(params, &acts, d_logits, params.layers.len() - 1, &mut grads);
    }

    // Embedding alignment term.
    let mut div_value = 0.0;
    if let Some((xa, xb)) = div_pair {
        if gamma > 0.0 {
            check_input(params, xa)?;
            check_input(params, xb)?;
            if xa.nrows() < 2 || xb.nrows() < 2 {
                return Err(Error::data(format!(
                    "divergence pair needs at least 2 rows per side, got {} and {}",
                    xa.nrows(),
                    xb.nrows()
                )));
            }
            // Bandwidth from raw features: constant w.r.t. the parameters.
            let (_, bws) = kernel.resolve(xa, xb)?;
            let e = params.arch.extractor_layers();
            let acts_a = forward_stack(params, xa, e);
            let acts_b = forward_stack(params, xb, e);
            let za = &acts_a[e];
            let zb = &acts_b[e];
            let mmd = mmd2_biased_with(za.view(), zb.view(), &bws)
                .map_err(|e| Error::numerical(format!("divergence term: {e}")))?;
            div_value = gamma * mmd;
            let (mut ga, mut gb) = mmd2_grad_with(za.view(), zb.view(), &bws);
            ga.mapv_inplace(|g| g * gamma);
            gb.mapv_inplace(|g| g * gamma);
            backprop(params, &acts_a, ga, e - 1, &mut grads);
            backprop(params, &acts_b, gb, e - 1, &mut grads);
        }
    }

    let loss = ce + div_value;
    if !loss.is_finite() {
        return Err(Error::numerical("total loss is not finite"));
    }
    for g in grads
        .weights
        .iter()
        .flat_map(|w| w.iter())
        .chain(grads.biases.iter().flat_map(|b| b.iter()))
    {
        if !g.is_finite() {
            return Err(Error::numerical("gradient has a non-finite entry"));
        }
    }
    grads.loss = loss;
    Ok((loss, grads))
}

/// One plain gradient step `p - lr * g`; never mutates its input.
pub fn sgd_step(params: &ModelParams, grad: &GradVector, lr: f64) -> Result<ModelParams> {
    if params.layers.len() != grad.weights.len() || params.layers.len() != grad.biases.len() {
        return Err(Error::shape("gradient layer count does not match model"));
    }
    let mut layers = Vec::with_capacity(params.layers.len());
    for (layer, (gw, gb)) in params
        .layers
        .iter()
        .zip(grad.weights.iter().zip(grad.biases.iter()))
    {
        if layer.weight.raw_dim() != gw.raw_dim() || layer.bias.raw_dim() != gb.raw_dim() {
            return Err(Error::shape("gradient shape does not match model layer"));
        }
        let mut weight = layer.weight.clone();
        weight.scaled_add(-lr, gw);
        let mut bias = layer.bias.clone();
        bias.scaled_add(-lr, gb);
        layers.push(LayerParams {
            weight,
            bias,
            activation: layer.activation,
        });
    }
    Ok(ModelParams {
        arch: params.arch.clone(),
        layers,
    })
}

/// Row-wise Shannon entropy in nats of already-normalized probability rows;
/// `0 ln 0` counts as 0.
pub fn predict_entropy(probs: ArrayView2<f64>) -> Vec<f64> {
    probs
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
                .sum()
        })
        .collect()
}

/// Central finite-difference gradient of an arbitrary scalar function of the
/// parameters, in flat order. The oracle the analytic gradients are tested
/// against; also handy for ad-hoc gradient checks in downstream code.
pub fn fd_gradient<F>(params: &ModelParams, f: F, eps: f64) -> Result<Vec<f64>>
where
    F: Fn(&ModelParams) -> Result<f64>,
{
    let flat = params.to_flat();
    let mut grad = Vec::with_capacity(flat.len());
    for i in 0..flat.len() {
        let mut plus = flat.clone();
        plus[i] += eps;
        let mut minus = flat.clone();
        minus[i] -= eps;
        let fp = f(&ModelParams::from_flat(&params.arch, &plus)?)?;
        let fm = f(&ModelParams::from_flat(&params.arch, &minus)?)?;
        grad.push((fp - fm) / (2.0 * eps));
    }
    Ok(grad)
}

// ============================================================================
// Tests
// ============================================================================
