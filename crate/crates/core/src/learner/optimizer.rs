use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Step-size schedule `η(t) = b / (t + c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningRate {
    pub b: f64,
    pub c: f64,
}

impl LearningRate {
    /// `η(t) = 3.25 / (μ (t + a))`, the schedule of the convergence analysis.
    pub fn strongly_convex(mu: f64, a: f64) -> Self {
        Self { b: 3.25 / mu, c: a }
    }

    pub fn at(&self, t: u64) -> f64 {
        self.b / (t as f64 + self.c)
    }
}

/// Heavy-ball buffer: `v <- βv + g`, `θ <- θ - ηv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Momentum {
    factor: f64,
    buffer: Vec<f64>,
}

impl Momentum {
    pub fn new(dim: usize, factor: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&factor) {
            return Err(Error::InvalidParameter(alloc::format!(
                "momentum factor must lie in [0, 1), got {factor}"
            )));
        }
        Ok(Self { factor, buffer: vec![0.0; dim] })
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn buffer(&self) -> &[f64] {
        &self.buffer
    }

    /// Applies one step to `theta` in place.
    pub fn step(&mut self, theta: &mut [f64], grad: &[f64], eta: f64) {
        for ((v, g), th) in self.buffer.iter_mut().zip(grad).zip(theta.iter_mut()) {
            *v = self.factor * *v + g;
            *th -= eta * *v;
        }
    }
}
