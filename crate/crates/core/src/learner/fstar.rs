use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::data::Dataset;
use super::model::{lipschitz_constant, loss_and_gradient, Model};
use crate::linalg;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FStarConfig {
    pub mu: f64,
    pub max_iter: usize,
    /// Stop once `‖∇F‖ ≤ tol`.
    pub tol: f64,
}

impl Default for FStarConfig {
    fn default() -> Self {
        Self { mu: 0.002, max_iter: 20_000, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FStar {
    pub value: f64,
    pub theta: Vec<f64>,
    pub iterations: usize,
}

fn global_gradient(theta: &[f64], shards: &[Dataset], mu: f64) -> Result<(f64, Vec<f64>)> {
    let mut loss = 0.0;
    let mut grad = vec![0.0; theta.len()];
    let inv = 1.0 / shards.len() as f64;
    for s in shards {
        let all: Vec<usize> = (0..s.len()).collect();
        let (l, g) = loss_and_gradient(theta, s, &all, mu)?;
        loss += inv * l;
        linalg::axpy(inv, &g, &mut grad);
    }
    Ok((loss, grad))
}

/// Minimizes `F = (1/K) Σ_i f_i` with accelerated full-gradient descent.
///
/// The objective is `μ`-strongly convex and smooth with constant at most
/// the largest per-shard Gramian bound, so the constant-momentum Nesterov
/// scheme converges linearly to the unique minimizer.
pub fn estimate_fstar(shards: &[Dataset], cfg: &FStarConfig) -> Result<FStar> {
    let first = shards.first().ok_or_else(|| Error::DatasetTooSmall("no shards".into()))?;
    let d = Model::for_dataset(first).dim();
    let l = shards.iter().map(|s| lipschitz_constant(s, cfg.mu)).fold(0.0, f64::max);
    let step = 1.0 / l;
    let q = libm::sqrt(cfg.mu / l);
    let beta = (1.0 - q) / (1.0 + q);
    let mut x = vec![0.0; d];
    let mut y = x.clone();
    for it in 0..cfg.max_iter {
        let (_, g) = global_gradient(&y, shards, cfg.mu)?;
        let x_next: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - step * gi).collect();
        for ((yi, xn), xo) in y.iter_mut().zip(&x_next).zip(&x) {
            *yi = xn + beta * (xn - xo);
        }
        x = x_next;
        if it % 10 == 9 {
            let (value, gx) = global_gradient(&x, shards, cfg.mu)?;
            if libm::sqrt(linalg::norm_sq(&gx)) <= cfg.tol {
                return Ok(FStar { value, theta: x, iterations: it + 1 });
            }
        }
    }
    let (_, gx) = global_gradient(&x, shards, cfg.mu)?;
    Err(Error::NotConverged(format!(
        "gradient norm {:.3e} after {} iterations",
        libm::sqrt(linalg::norm_sq(&gx)),
        cfg.max_iter
    )))
}
