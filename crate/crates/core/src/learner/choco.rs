use alloc::vec::Vec;

use super::optimizer::Momentum;
use crate::linalg;
use crate::rlc::{Quantizer, RlcCodec};
use crate::topology::MixingMatrix;
use crate::{Error, Result};

/// What a device holds between rounds: its iterate, its public estimate
/// `θ̂` (identical at every neighbor when exchanges are exact), its
/// momentum buffer, and, for analog links, the running aggregate `ŷ` of its
/// neighbors' weighted estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceState {
    pub theta: Vec<f64>,
    pub hat: Vec<f64>,
    pub agg: Vec<f64>,
    pub momentum: Momentum,
}

impl DeviceState {
    pub fn new(theta: Vec<f64>, momentum: f64) -> Result<Self> {
        let d = theta.len();
        Ok(Self {
            hat: alloc::vec![0.0; d],
            agg: alloc::vec![0.0; d],
            momentum: Momentum::new(d, momentum)?,
            theta,
        })
    }

    /// `θ <- θ - η ĝ` (through the momentum buffer).
    pub fn local_step(&mut self, grad: &[f64], eta: f64) -> Result<()> {
        if grad.len() != self.theta.len() {
            return Err(Error::DimensionMismatch { expected: self.theta.len(), got: grad.len() });
        }
        self.momentum.step(&mut self.theta, grad, eta);
        Ok(())
    }
}

/// Compression used on the noiseless link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Compressor {
    Identity,
    /// Shared projection with a fixed row count.
    Rlc { codec: RlcCodec, rows: usize, quantizer: Quantizer },
}

impl Compressor {
    /// `D(C(u))`
    pub fn roundtrip(&self, u: &[f64], t: u64) -> Result<Vec<f64>> {
        match self {
            Self::Identity => Ok(u.to_vec()),
            Self::Rlc { codec, rows, quantizer } => {
                let a = codec.projection(t, 0, *rows)?;
                let mut v = a.encode(u)?;
                quantizer.quantize(&mut v)?;
                a.decode(&v)
            }
        }
    }
}

/// `θ_i <- θ_i + ζ Σ_j w_ij (θ̂_j - θ̂_i)` for every device.
pub fn consensus_step(states: &mut [DeviceState], w: &MixingMatrix, zeta: f64) {
    let k = states.len();
    let d = states.first().map_or(0, |s| s.theta.len());
    let mut corr = alloc::vec![0.0; d];
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        corr.iter_mut().for_each(|c| *c = 0.0);
        for j in 0..k {
            let wij = w.weight(i, j);
            if j != i && wij != 0.0 {
                for ((c, hj), hi) in corr.iter_mut().zip(&states[j].hat).zip(&states[i].hat) {
                    *c += wij * (hj - hi);
                }
            }
        }
        out.push(corr.clone());
    }
    for (s, c) in states.iter_mut().zip(&out) {
        linalg::axpy(zeta, c, &mut s.theta);
    }
}

/// `Σ_i ‖θ̂_i - θ_i‖²`, read between the estimate update and the consensus step.
pub fn compression_error(states: &[DeviceState]) -> f64 {
    states.iter().map(|s| linalg::dist_sq(&s.hat, &s.theta)).sum()
}

/// One round over perfect links: local step, compressed estimate update,
/// consensus step. Returns the compression error.
pub fn choco_round_ideal(
    states: &mut [DeviceState],
    grads: &[Vec<f64>],
    eta: f64,
    w: &MixingMatrix,
    zeta: f64,
    compressor: &Compressor,
    t: u64,
) -> Result<f64> {
    if states.len() != w.node_count() || grads.len() != states.len() {
        return Err(Error::DimensionMismatch { expected: w.node_count(), got: states.len() });
    }
    for (s, g) in states.iter_mut().zip(grads) {
        s.local_step(g, eta)?;
    }
    for s in states.iter_mut() {
        let u: Vec<f64> = s.theta.iter().zip(&s.hat).map(|(a, b)| a - b).collect();
        let q = compressor.roundtrip(&u, t)?;
        linalg::axpy(1.0, &q, &mut s.hat);
    }
    let err = compression_error(states);
    consensus_step(states, w, zeta);
    Ok(err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_topology, default_alpha, mixing_matrix, TopologyKind};
    use approx::assert_relative_eq;

    fn states(k: usize, d: usize) -> Vec<DeviceState> {
        (0..k)
            .map(|i| DeviceState::new((0..d).map(|c| (i * d + c) as f64 * 0.1).collect(), 0.0).unwrap())
            .collect()
    }

    #[test]
    fn complete_graph_agrees_after_one_round() {
        let t = build_topology(&TopologyKind::Complete, 5, 0).unwrap();
        let w = mixing_matrix(&t, 0.2).unwrap();
        let mut s = states(5, 3);
        let grads = alloc::vec![alloc::vec![0.0; 3]; 5];
        choco_round_ideal(&mut s, &grads, 0.1, &w, 1.0, &Compressor::Identity, 0).unwrap();
        for st in &s[1..] {
            for (a, b) in st.theta.iter().zip(&s[0].theta) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_zeta_does_not_mix() {
        let t = build_topology(&TopologyKind::Chain, 4, 0).unwrap();
        let w = mixing_matrix(&t, default_alpha(&t)).unwrap();
        let mut s = states(4, 2);
        let before = s.clone();
        let grads: Vec<Vec<f64>> = (0..4).map(|i| alloc::vec![i as f64, 1.0]).collect();
        choco_round_ideal(&mut s, &grads, 0.5, &w, 0.0, &Compressor::Identity, 0).unwrap();
        for i in 0..4 {
            assert_relative_eq!(s[i].theta[0], before[i].theta[0] - 0.5 * i as f64, epsilon = 1e-12);
        }
    }
}
