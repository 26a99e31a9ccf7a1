//! Fully connected networks with rectifier hidden layers.
//!
//! Batches are matrices with one sample per column.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OutputHead {
    Linear,
    /// `scale · σ(z)`, bounded to `[0, scale]`.
    Sigmoid {
        scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    layers: Vec<Layer>,
    head: OutputHead,
}

/// Gradients with the same layout as the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

/// Forward activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input; `activations[l]` the output of layer `l`.
    activations: Vec<DMatrix<f64>>,
    /// Pre-activations of every layer.
    pre: Vec<DMatrix<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &DMatrix<f64> {
        self.activations.last().expect("at least the input")
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Mlp {
    /// Uniform fan-in initialisation `U(±1/√fan_in)`; the last layer uses `U(±3e-3)` so
    /// initial outputs sit near the head's midpoint.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], head: OutputHead, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need input and output sizes");
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let bound = if l == last { 3e-3 } else { 1.0 / (w[0] as f64).sqrt() };
                Layer {
                    weights: DMatrix::from_fn(w[1], w[0], |_, _| rng.random_range(-bound..=bound)),
                    bias: DVector::from_fn(w[1], |_, _| rng.random_range(-bound..=bound)),
                }
            })
            .collect();
        Self {
            sizes: sizes.to_vec(),
            layers,
            head,
        }
    }

    pub fn zeros(sizes: &[usize], head: OutputHead) -> Self {
        Self::from_layers(
            sizes
                .windows(2)
                .map(|w| Layer {
                    weights: DMatrix::zeros(w[1], w[0]),
                    bias: DVector::zeros(w[1]),
                })
                .collect(),
            head,
        )
        .expect("consistent by construction")
    }

    pub fn from_layers(layers: Vec<Layer>, head: OutputHead) -> Result<Self> {
        let first = layers.first().ok_or(Error::DimensionMismatch { expected: 1, got: 0 })?;
        let mut sizes = vec![first.weights.ncols()];
        for layer in &layers {
            let fan_in = *sizes.last().expect("nonempty");
            if layer.weights.ncols() != fan_in {
                return Err(Error::DimensionMismatch {
                    expected: fan_in,
                    got: layer.weights.ncols(),
                });
            }
            if layer.bias.len() != layer.weights.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: layer.weights.nrows(),
                    got: layer.bias.len(),
                });
            }
            sizes.push(layer.weights.nrows());
        }
        Ok(Self { sizes, layers, head })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn head(&self) -> OutputHead {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("nonempty")
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn check_input(&self, rows: usize) -> Result<()> {
        if rows != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: rows,
            });
        }
        Ok(())
    }

    fn apply_head(&self, z: &mut DMatrix<f64>) {
        if let OutputHead::Sigmoid { scale } = self.head {
            z.apply(|v| *v = scale * sigmoid(*v));
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let x = DMatrix::from_column_slice(input.len(), 1, input);
        Ok(self.forward_batch(&x)?.as_slice().to_vec())
    }

    pub fn forward_batch(&self, input: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_input(input.nrows())?;
        let mut a = input.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = &layer.weights * &a;
            for mut col in z.column_iter_mut() {
                col += &layer.bias;
            }
            if l < last {
                z.apply(|v| *v = v.max(0.0));
            } else {
                self.apply_head(&mut z);
            }
            a = z;
        }
        Ok(a)
    }

    pub fn forward_cached(&self, input: &DMatrix<f64>) -> Result<ForwardCache> {
        self.check_input(input.nrows())?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        activations.push(input.clone());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = &layer.weights * activations.last().expect("nonempty");
            for mut col in z.column_iter_mut() {
                col += &layer.bias;
            }
            let mut a = z.clone();
            if l < last {
                a.apply(|v| *v = v.max(0.0));
            } else {
                self.apply_head(&mut a);
            }
            pre.push(z);
            activations.push(a);
        }
        Ok(ForwardCache { activations, pre })
    }

    /// Reverse-mode pass. `upstream` holds `∂L/∂output` per sample; parameter gradients
    /// are summed over the batch. Also returns `∂L/∂input`.
    pub fn backward(&self, cache: &ForwardCache, upstream: &DMatrix<f64>) -> Result<(Gradients, DMatrix<f64>)> {
        let out = cache.output();
        if upstream.shape() != out.shape() {
            return Err(Error::DimensionMismatch {
                expected: out.len(),
                got: upstream.len(),
            });
        }
        let last = self.layers.len() - 1;
        let mut delta = upstream.clone();
        if let OutputHead::Sigmoid { scale } = self.head {
            // d(scale·σ)/dz = y(1 − y/scale).
            delta.zip_apply(out, |d, y| *d *= y * (1.0 - y / scale));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        for l in (0..=last).rev() {
            if l < last {
                // Rectifier subgradient at exactly zero is zero.
                delta.zip_apply(&cache.pre[l], |d, z| {
                    if z <= 0.0 {
                        *d = 0.0
                    }
                });
            }
            let weights = &delta * cache.activations[l].transpose();
            let bias = delta.column_sum();
            let below = self.layers[l].weights.tr_mul(&delta);
            grads.push(Layer { weights, bias });
            delta = below;
        }
        grads.reverse();
        Ok((Gradients { layers: grads }, delta))
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// `θ_self ← (1 − ρ)·θ_self + ρ·θ_source`.
    pub fn soft_update_from(&mut self, source: &Mlp, rho: f64) {
        for (t, s) in self.layers.iter_mut().zip(&source.layers) {
            t.weights.zip_apply(&s.weights, |a, b| *a = (1.0 - rho) * *a + rho * b);
            t.bias.zip_apply(&s.bias, |a, b| *a = (1.0 - rho) * *a + rho * b);
        }
    }

    /// Euclidean distance between two parameter vectors of the same architecture.
    pub fn parameter_distance(&self, other: &Mlp) -> f64 {
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| (&a.weights - &b.weights).norm_squared() + (&a.bias - &b.bias).norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

impl Gradients {
    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights *= factor;
            l.bias *= factor;
        }
    }
}
