use alloc::vec;
use alloc::vec::Vec;

use super::data::Dataset;
use crate::linalg;
use crate::{Error, Result};

/// Shape of a softmax-regression parameter vector: `classes` rows of
/// `features + 1` weights, the last one a bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Model {
    pub classes: usize,
    pub features: usize,
}

impl Model {
    pub fn for_dataset(data: &Dataset) -> Self {
        Self { classes: data.classes(), features: data.feature_dim() }
    }

    /// `d`
    pub fn dim(&self) -> usize {
        self.classes * (self.features + 1)
    }

    fn logits(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let row = self.features + 1;
        for (c, z) in out.iter_mut().enumerate() {
            let w = &theta[c * row..(c + 1) * row];
            *z = linalg::dot(&w[..self.features], x) + w[self.features];
        }
    }
}

/// In-place softmax; returns `log sum exp` of the input.
fn softmax(z: &mut [f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
    max + libm::log(sum)
}

/// Regularized cross-entropy over the samples `batch` of `data` and its gradient.
///
/// `F = -(1/n) Σ log softmax_y(Wx + b) + (μ/2)‖θ‖²`, with the softmax
/// normalized over all classes.
pub fn loss_and_gradient(
    theta: &[f64],
    data: &Dataset,
    batch: &[usize],
    mu: f64,
) -> Result<(f64, Vec<f64>)> {
    let model = Model::for_dataset(data);
    if theta.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: theta.len() });
    }
    if batch.is_empty() {
        return Err(Error::DatasetTooSmall("empty batch".into()));
    }
    let row = model.features + 1;
    let mut grad = vec![0.0; theta.len()];
    let mut z = vec![0.0; model.classes];
    let mut loss = 0.0;
    let inv = 1.0 / batch.len() as f64;
    for &n in batch {
        let x = data.sample(n);
        let y = data.label(n);
        model.logits(theta, x, &mut z);
        let zy = z[y];
        loss -= zy - softmax(&mut z);
        z[y] -= 1.0;
        for (c, &err) in z.iter().enumerate() {
            let g = &mut grad[c * row..(c + 1) * row];
            linalg::axpy(err * inv, x, &mut g[..model.features]);
            g[model.features] += err * inv;
        }
    }
    loss *= inv;
    loss += 0.5 * mu * linalg::norm_sq(theta);
    linalg::axpy(mu, theta, &mut grad);
    Ok((loss, grad))
}

/// Global objective `(1/K) Σ_i f_i(θ)`.
pub fn global_loss(theta: &[f64], shards: &[Dataset], mu: f64) -> Result<f64> {
    let mut total = 0.0;
    for s in shards {
        let all: Vec<usize> = (0..s.len()).collect();
        total += loss_and_gradient(theta, s, &all, mu)?.0;
    }
    Ok(total / shards.len() as f64)
}

/// Fraction of samples whose largest logit is the label.
pub fn accuracy(theta: &[f64], data: &Dataset) -> f64 {
    let model = Model::for_dataset(data);
    let mut z = vec![0.0; model.classes];
    let correct = (0..data.len())
        .filter(|&n| {
            model.logits(theta, data.sample(n), &mut z);
            let best = (0..model.classes).fold(0, |b, c| if z[c] > z[b] { c } else { b });
            best == data.label(n)
        })
        .count();
    correct as f64 / data.len().max(1) as f64
}

/// `λ_max(XᵀX / n) + μ`, with `X` the samples augmented by a constant 1.
pub fn lipschitz_constant(data: &Dataset, mu: f64) -> f64 {
    let f = data.feature_dim() + 1;
    let mut gram = vec![0.0; f * f];
    let mut x = vec![1.0; f];
    for n in 0..data.len() {
        x[..f - 1].copy_from_slice(data.sample(n));
        for a in 0..f {
            for b in 0..f {
                gram[a * f + b] += x[a] * x[b];
            }
        }
    }
    let inv = 1.0 / data.len().max(1) as f64;
    gram.iter_mut().for_each(|v| *v *= inv);
    linalg::symmetric_spectral_norm(&gram, f) + mu
}
