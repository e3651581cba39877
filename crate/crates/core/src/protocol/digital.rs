//! Digital broadcast: each device sends as many quantized RLC rows as the
//! worst link of its slot can carry.

use alloc::format;
use alloc::vec::Vec;

use crate::channel::{ChannelConfig, ChannelRealization};
use crate::learner::{compression_error, consensus_step, DeviceState};
use crate::linalg;
use crate::rlc::{Quantizer, RlcCodec};
use crate::scheduling::DigitalSchedule;
use crate::topology::{MixingMatrix, Topology};
use crate::{Error, Result};

/// `B = (N/M) log2(1 + (P/N0) M g_min)` for a slot of `N/M` uses.
///
/// The whole block budget is spent in the device's single slot, hence the
/// `M` inside the logarithm.
pub fn bit_budget(cfg: &ChannelConfig, slots: usize, min_gain: f64) -> f64 {
    let uses = (cfg.block_len / slots) as f64;
    let snr = cfg.power / cfg.noise_power * slots as f64 * min_gain;
    uses * libm::log2(1.0 + snr)
}

/// `clamp(⌊B / b⌋, 1, D)`
pub fn rows_from_budget(budget: f64, bits: u32, padded: usize) -> usize {
    let m = libm::floor(budget / bits as f64);
    if !(m >= 1.0) {
        1
    } else if m >= padded as f64 {
        padded
    } else {
        m as usize
    }
}

/// How many RLC rows each device sends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowPolicy {
    /// From the realized bit budget.
    #[default]
    Budget,
    /// Same count for everyone, ignoring the channel.
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DigitalRoundReport {
    pub budgets: Vec<f64>,
    pub rows: Vec<usize>,
    /// `Σ_i ‖θ̂_i - θ_i^{t+1/2}‖²`
    pub compression_err: f64,
}

pub struct DigitalLink<'a> {
    pub topology: &'a Topology,
    pub schedule: &'a DigitalSchedule,
    pub channel: &'a ChannelConfig,
    pub codec: &'a RlcCodec,
    pub quantizer: Quantizer,
    pub rows: RowPolicy,
}

/// Local steps, budget-limited broadcast of the compressed differences,
/// estimate updates and the consensus step.
///
/// Device `i` projects with its own sign sequence (lane `i + 1`), shared with
/// its neighbors, so every copy of `θ̂_i` stays bit-identical.
#[allow(clippy::too_many_arguments)]
pub fn digital_round(
    states: &mut [DeviceState],
    grads: &[Vec<f64>],
    eta: f64,
    w: &MixingMatrix,
    zeta: f64,
    link: &DigitalLink<'_>,
    block: &ChannelRealization,
    t: u64,
) -> Result<DigitalRoundReport> {
    let k = link.topology.node_count();
    if link.schedule.node_count() != k || states.len() != k || w.node_count() != k {
        return Err(Error::ScheduleMismatch(format!(
            "{} devices, {k}-node topology, {}-node schedule",
            states.len(),
            link.schedule.node_count()
        )));
    }
    if grads.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: grads.len() });
    }
    for (s, g) in states.iter_mut().zip(grads) {
        s.local_step(g, eta)?;
    }
    let slots = link.schedule.slot_count();
    let padded = link.codec.padded_dim();
    let mut budgets = Vec::with_capacity(k);
    let mut rows = Vec::with_capacity(k);
    for (i, s) in states.iter_mut().enumerate() {
        let min_gain = link
            .topology
            .neighbors(i)
            .iter()
            .map(|&j| block.power_gain(i, j))
            .fold(f64::INFINITY, f64::min);
        let b = bit_budget(link.channel, slots, min_gain);
        let m = match link.rows {
            RowPolicy::Budget => rows_from_budget(b, link.quantizer.bits(), padded),
            RowPolicy::Fixed(m) => m,
        };
        let a = link.codec.projection(t, i as u64 + 1, m)?;
        let u: Vec<f64> = s.theta.iter().zip(&s.hat).map(|(x, h)| x - h).collect();
        let mut v = a.encode(&u)?;
        link.quantizer.quantize(&mut v)?;
        linalg::axpy(1.0, &a.decode(&v)?, &mut s.hat);
        budgets.push(b);
        rows.push(m);
    }
    let compression_err = compression_error(states);
    consensus_step(states, w, zeta);
    Ok(DigitalRoundReport { budgets, rows, compression_err })
}
