//! Dense feed-forward networks with hand-written backpropagation.
//!
//! Parameters of a whole network live in one flat vector, layer by layer,
//! each layer storing its weight matrix row-major (one row per output unit)
//! followed by its biases.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Tanh => 1,
            Activation::Sigmoid => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Activation::Identity),
            1 => Ok(Activation::Tanh),
            2 => Ok(Activation::Sigmoid),
            _ => Err(Error::data(format!("unknown activation code {c}"))),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

impl Dense {
    pub fn param_count(&self) -> usize {
        self.outputs * (self.inputs + 1)
    }

    /// `y = act(W x + b)` with the layer's slice of parameters.
    pub fn forward(&self, params: &[f64], x: &[f64], y: &mut Vec<f64>) {
        let (w, b) = params.split_at(self.outputs * self.inputs);
        y.clear();
        for o in 0..self.outputs {
            let row = &w[o * self.inputs..(o + 1) * self.inputs];
            let z = b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            y.push(self.activation.apply(z));
        }
    }

    /// Accumulates parameter gradients into `grad` and returns the gradient
    /// with respect to the input `x`, given the layer output `y` and the
    /// gradient `gy` with respect to it.
    pub fn backward(&self, params: &[f64], x: &[f64], y: &[f64], gy: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let (w, _) = params.split_at(self.outputs * self.inputs);
        let (gw, gb) = grad.split_at_mut(self.outputs * self.inputs);
        let mut gx = vec![0.0; self.inputs];
        for o in 0..self.outputs {
            let gz = gy[o] * self.activation.derivative_from_output(y[o]);
            if gz == 0.0 {
                continue;
            }
            gb[o] += gz;
            let row = &w[o * self.inputs..(o + 1) * self.inputs];
            let grow = &mut gw[o * self.inputs..(o + 1) * self.inputs];
            for i in 0..self.inputs {
                grow[i] += gz * x[i];
                gx[i] += gz * row[i];
            }
        }
        gx
    }
}

/// Activations of every layer from one forward pass; `values[0]` is the input.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    pub values: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.values.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Dense>,
    params: Vec<f64>,
}

impl Mlp {
    /// Zero-initialised network; `sizes` has one more entry than
    /// `activations`.
    pub fn new(sizes: &[usize], activations: &[Activation]) -> Result<Self> {
        if sizes.len() != activations.len() + 1 || activations.is_empty() {
            return Err(Error::param("network needs one activation per layer"));
        }
        if sizes.contains(&0) {
            return Err(Error::param("layer sizes must be positive"));
        }
        let layers: Vec<Dense> = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| Dense { inputs: w[0], outputs: w[1], activation })
            .collect();
        let n = layers.iter().map(Dense::param_count).sum();
        Ok(Self { layers, params: vec![0.0; n] })
    }

    pub fn from_parts(layers: Vec<Dense>, params: Vec<f64>) -> Result<Self> {
        if layers.is_empty() || layers.windows(2).any(|w| w[0].outputs != w[1].inputs) {
            return Err(Error::data("inconsistent layer shapes"));
        }
        let n: usize = layers.iter().map(Dense::param_count).sum();
        if n != params.len() {
            return Err(Error::Shape { expected: n, got: params.len() });
        }
        Ok(Self { layers, params })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn outputs(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layer_ranges(&self) -> impl Iterator<Item = (usize, &Dense)> {
        self.layers.iter().scan(0, |off, l| {
            let start = *off;
            *off += l.param_count();
            Some((start, l))
        })
    }

    /// Orthogonal initialisation with one gain per layer and zero biases.
    pub fn init_orthogonal<R: Rng + ?Sized>(&mut self, gains: &[f64], rng: &mut R) {
        let ranges: Vec<(usize, Dense)> = self.layer_ranges().map(|(s, l)| (s, *l)).collect();
        for ((start, layer), &gain) in ranges.into_iter().zip(gains) {
            let w = orthogonal(layer.outputs, layer.inputs, rng);
            let slice = &mut self.params[start..start + layer.param_count()];
            for (dst, src) in slice.iter_mut().zip(w.iter().chain(std::iter::repeat(&0.0))) {
                *dst = gain * src;
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(x)?.values.pop().unwrap_or_default())
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache> {
        if x.len() != self.inputs() {
            return Err(Error::Shape { expected: self.inputs(), got: x.len() });
        }
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(x.to_vec());
        for (start, layer) in self.layer_ranges() {
            let mut y = Vec::with_capacity(layer.outputs);
            layer.forward(&self.params[start..start + layer.param_count()], values.last().expect("input"), &mut y);
            values.push(y);
        }
        Ok(ForwardCache { values })
    }

    /// Backpropagates `grad_out` (gradient with respect to the output),
    /// accumulating into `grad`, and returns the gradient with respect to the
    /// input.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let ranges: Vec<(usize, &Dense)> = self.layer_ranges().collect();
        let mut g = grad_out.to_vec();
        for (k, (start, layer)) in ranges.into_iter().enumerate().rev() {
            let end = start + layer.param_count();
            g = layer.backward(
                &self.params[start..end],
                &cache.values[k],
                &cache.values[k + 1],
                &g,
                &mut grad[start..end],
            );
        }
        g
    }
}

/// `rows × cols` matrix with orthonormal rows (or columns, whichever is
/// fewer), from Gram–Schmidt on a Gaussian matrix.
fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<f64> {
    let (n, m) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for b in &basis {
                let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = if rows <= cols { basis[r][c] } else { basis[c][r] };
        }
    }
    out
}
