//! A small dense classifier with hand-written backpropagation.
//!
//! The network is a plain MLP: rectified linear hidden layers, identity
//! output layer producing logits. Forward passes return a cache of
//! activations; backward consumes the cache and a logit gradient and
//! produces parameter gradients. Caches are stamped with a parameter
//! version so a backward pass against mutated parameters fails loudly
//! instead of silently producing garbage.
//!
//! Parameters can be read into / written from a flat vector (weights in
//! layer order, row-major, each followed by its bias vector), which is what
//! the optimizer and the finite-difference tests operate on.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::numeric::DenseMatrix;
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct MlpModel {
    dims: Vec<usize>,
    /// `weights[l]` maps activations of width `dims[l]` to `dims[l+1]`.
    weights: Vec<DenseMatrix>,
    biases: Vec<Vec<f64>>,
    /// Bumped on every parameter mutation; caches carry the value they saw.
    version: u64,
}

/// Activations recorded by [`MlpModel::forward`], sufficient for one
/// backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    /// Layer inputs: `inputs[0]` is the sample, `inputs[l]` the rectified
    /// activation entering layer `l`.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation values per layer; the last entry is the logits.
    pre_activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn logits(&self) -> &[f64] {
        self.pre_activations
            .last()
            .expect("a model always has at least one layer")
    }
}

/// Per-layer parameter gradients, shaped exactly like the model.
#[derive(Debug, Clone)]
pub struct Gradients {
    weights: Vec<DenseMatrix>,
    biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Gradients {
        Gradients {
            weights: model
                .weights
                .iter()
                .map(|w| DenseMatrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.weights {
            for x in w.as_mut_slice() {
                *x *= factor;
            }
        }
        for b in &mut self.biases {
            for x in b.iter_mut() {
                *x *= factor;
            }
        }
    }

    /// Appends all gradient entries in the model's flat parameter order.
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
    }
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(CoreError::Dimension(format!(
            "a model needs an input and an output layer, got dims {dims:?}"
        )));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(CoreError::Dimension(format!(
            "layer widths must be positive, got dims {dims:?}"
        )));
    }
    Ok(())
}

impl MlpModel {
    /// All-zero parameters (useful mostly for tests; train from
    /// [`MlpModel::he_init`]).
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        validate_dims(dims)?;
        let weights = dims
            .windows(2)
            .map(|w| DenseMatrix::zeros(w[1], w[0]))
            .collect();
        let biases = dims[1..].iter().map(|&d| vec![0.0; d]).collect();
        Ok(MlpModel {
            dims: dims.to_vec(),
            weights,
            biases,
            version: 0,
        })
    }

    /// He initialization: weights drawn from a Gaussian scaled by
    /// `sqrt(2 / fan_in)`, biases zero. The standard choice for rectifier
    /// networks; fully determined by the stream.
    pub fn he_init(dims: &[usize], rng: &mut RngStream) -> Result<Self> {
        let mut model = Self::zeros(dims)?;
        for w in &mut model.weights {
            let scale = crate::math::sqrt(2.0 / w.cols() as f64);
            for v in w.as_mut_slice() {
                *v = rng.next_gaussian() * scale;
            }
        }
        Ok(model)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("dims is nonempty")
    }

    pub fn param_count(&self) -> usize {
        self.dims
            .windows(2)
            .map(|w| w[1] * w[0] + w[1])
            .sum()
    }

    /// Runs the network on one sample and records everything backward needs.
    pub fn forward(&self, x: &[f64]) -> Result<ForwardCache> {
        if x.len() != self.input_dim() {
            return Err(CoreError::Dimension(format!(
                "input has length {} but the model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("model input must be finite".into()));
        }
        let layers = self.weights.len();
        let mut inputs = Vec::with_capacity(layers);
        let mut pre_activations = Vec::with_capacity(layers);
        let mut current = x.to_vec();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut pre = vec![0.0; w.rows()];
            w.matvec(&current, &mut pre);
            for (p, bias) in pre.iter_mut().zip(b) {
                *p += bias;
            }
            inputs.push(current);
            // Hidden layers rectify; the final layer emits raw logits.
            current = if l + 1 < layers {
                pre.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
            } else {
                Vec::new()
            };
            pre_activations.push(pre);
        }
        Ok(ForwardCache {
            version: self.version,
            inputs,
            pre_activations,
        })
    }

    /// Chains a logit gradient back through the cached activations.
    ///
    /// The rectifier's derivative at exactly zero is taken as zero.
    pub fn backward(&self, cache: &ForwardCache, grad_z: &[f64]) -> Result<Gradients> {
        if cache.version != self.version {
            return Err(CoreError::StaleCache);
        }
        if grad_z.len() != self.output_dim() {
            return Err(CoreError::Dimension(format!(
                "logit gradient has length {} but the model emits {}",
                grad_z.len(),
                self.output_dim()
            )));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut delta = grad_z.to_vec();
        for l in (0..self.weights.len()).rev() {
            let input = &cache.inputs[l];
            let gw = &mut grads.weights[l];
            for (r, d) in delta.iter().enumerate() {
                let row = gw.row_mut(r);
                for (slot, x) in row.iter_mut().zip(input) {
                    *slot = d * x;
                }
            }
            grads.biases[l].copy_from_slice(&delta);
            if l == 0 {
                break;
            }
            let w = &self.weights[l];
            let mut prev = vec![0.0; w.cols()];
            for (r, d) in delta.iter().enumerate() {
                for (slot, v) in prev.iter_mut().zip(w.row(r)) {
                    *slot += d * v;
                }
            }
            // Gate by the previous layer's rectifier.
            for (slot, pre) in prev.iter_mut().zip(&cache.pre_activations[l - 1]) {
                if *pre <= 0.0 {
                    *slot = 0.0;
                }
            }
            delta = prev;
        }
        Ok(grads)
    }

    /// Copies all parameters into `out` in flat order.
    pub fn read_params_into(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
    }

    /// Overwrites all parameters from a flat vector and invalidates every
    /// outstanding forward cache.
    pub fn write_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(CoreError::Dimension(format!(
                "flat parameter vector has length {} but the model holds {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut offset = 0;
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            let n = w.as_slice().len();
            w.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
            let blen = b.len();
            b.copy_from_slice(&flat[offset..offset + blen]);
            offset += blen;
        }
        self.version += 1;
        Ok(())
    }
}
