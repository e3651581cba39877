//! Analog transmission: uncoded RLC symbols over AirComp and broadcast
//! slot pairs, with channel-inverting power control.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::channel::{complex_normal, ChannelConfig, ChannelRealization};
use crate::learner::{compression_error, DeviceState};
use crate::linalg;
use crate::rlc::RlcCodec;
use crate::rng::{self, Purpose};
use crate::scheduling::AnalogSchedule;
use crate::topology::{MixingMatrix, Topology};
use crate::{Error, Result};

/// `m = min(⌊N/M⌋, D)`: one real symbol per channel use of a slot.
pub fn analog_rows(cfg: &ChannelConfig, slots: usize, padded: usize) -> Result<usize> {
    let m = (cfg.block_len / slots.max(1)).min(padded);
    if m == 0 {
        return Err(Error::RowsOutOfRange { m, max: padded });
    }
    Ok(m)
}

/// One AirComp contributor: per-slot energy cap, `|h'|²`, mixing weight and
/// `‖Au‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contributor {
    pub cap: f64,
    pub gain: f64,
    pub weight: f64,
    pub norm_sq: f64,
}

/// Largest alignment factor `γ` that keeps every contributor within its
/// cap: `min_i cap_i |h'_i|² / (w_i² ‖Au_i‖²)`. Silent contributors are
/// ignored; `None` when nobody transmits.
pub fn aircomp_alignment(contributors: &[Contributor]) -> Option<f64> {
    contributors
        .iter()
        .filter(|c| c.norm_sq > 0.0 && c.weight != 0.0)
        .map(|c| c.cap * c.gain / (c.weight * c.weight * c.norm_sq))
        .reduce(f64::min)
}

/// Broadcast scaling `α = cap / ‖Au‖²`, `None` for a silent transmitter.
pub fn broadcast_scale(cap: f64, norm_sq: f64) -> Option<f64> {
    (norm_sq > 0.0).then(|| cap / norm_sq)
}

pub struct AnalogLink<'a> {
    pub topology: &'a Topology,
    pub schedule: &'a AnalogSchedule,
    pub channel: &'a ChannelConfig,
    pub codec: &'a RlcCodec,
    /// Seed of the receiver noise streams.
    pub noise_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogRoundReport {
    pub rows: usize,
    /// Effective noise power `Ñ_0i` of each device's aggregate.
    pub noise: Vec<f64>,
    /// Energy spent by each device over the block, relative to `N P`.
    pub energy_ratio: Vec<f64>,
    /// `Σ_i ‖θ̂_i - θ_i^{t+1/2}‖²`
    pub compression_err: f64,
}

impl AnalogRoundReport {
    pub fn sum_noise(&self) -> f64 {
        self.noise.iter().sum()
    }

    pub fn max_energy_ratio(&self) -> f64 {
        self.energy_ratio.iter().copied().fold(0.0, f64::max)
    }
}

fn receiver_noise(seed: u64, t: u64, slot: usize, rx: usize, m: usize, n0: f64) -> Vec<Complex64> {
    let mut rng = rng::stream(seed, Purpose::Noise, t, ((slot as u64) << 32) | rx as u64);
    let s = libm::sqrt(n0);
    (0..m).map(|_| complex_normal(&mut rng) * s).collect()
}

fn scheduled_gain(block: &ChannelRealization, i: usize, j: usize) -> Result<f64> {
    let g = block.power_gain(i, j);
    if !(g > f64::MIN_POSITIVE) {
        return Err(Error::ScheduleMismatch(format!("link ({i}, {j}) has no usable gain")));
    }
    Ok(g)
}

/// Local steps, one block of AirComp/broadcast slot pairs, estimate and
/// aggregate updates, and the noisy consensus step
/// `θ_j = θ_j^{t+1/2} + ζ (w_jj θ̂_j + ŷ_j - θ̂_j)`.
#[allow(clippy::too_many_arguments)]
pub fn analog_round(
    states: &mut [DeviceState],
    grads: &[Vec<f64>],
    eta: f64,
    w: &MixingMatrix,
    zeta: f64,
    link: &AnalogLink<'_>,
    block: &ChannelRealization,
    t: u64,
) -> Result<AnalogRoundReport> {
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

    let cfg = link.channel;
    let budget = cfg.block_len as f64 * cfg.power;
    let m = analog_rows(cfg, link.schedule.slot_count(), link.codec.padded_dim())?;
    let a = link.codec.projection(t, 0, m)?;
    let mut enc = Vec::with_capacity(k);
    for s in states.iter() {
        let u: Vec<f64> = s.theta.iter().zip(&s.hat).map(|(x, h)| x - h).collect();
        enc.push(a.encode(&u)?);
    }
    let norm_sq: Vec<f64> = enc.iter().map(|v| linalg::norm_sq(v)).collect();
    let tx_slots: Vec<usize> = (0..k).map(|i| link.schedule.tx_slot_count(i)).collect();
    let cap: Vec<f64> = tx_slots.iter().map(|&n| budget / n.max(1) as f64).collect();
    let noise_scale = 0.5 * cfg.noise_power / budget;

    let mut noise = vec![0.0; k];
    let mut energy = vec![0.0; k];
    for (r, stars) in link.schedule.rounds().iter().enumerate() {
        let (odd, even) = (2 * r + 1, 2 * r + 2);
        for star in stars {
            let j = star.center;

            // AirComp: the leaves pre-equalize so their signals add up at j.
            let mut contributors = Vec::with_capacity(star.leaves.len());
            for &i in &star.leaves {
                contributors.push(Contributor {
                    cap: cap[i],
                    gain: scheduled_gain(block, i, j)?,
                    weight: w.weight(j, i),
                    norm_sq: norm_sq[i],
                });
            }
            if let Some(gamma) = aircomp_alignment(&contributors) {
                let sg = libm::sqrt(gamma);
                let mut y = receiver_noise(link.noise_seed, t, odd, j, m, cfg.noise_power);
                let mut worst: f64 = 0.0;
                for (&i, c) in star.leaves.iter().zip(&contributors) {
                    if c.norm_sq == 0.0 || c.weight == 0.0 {
                        continue;
                    }
                    let h = block.coefficient(i, j);
                    let pre = Complex64::new(sg * c.weight, 0.0) / h;
                    for (yr, &v) in y.iter_mut().zip(&enc[i]) {
                        let x = pre * v;
                        energy[i] += x.norm_sqr();
                        *yr += h * x;
                    }
                    worst = worst.max(tx_slots[i] as f64 * c.weight * c.weight * c.norm_sq / c.gain);
                }
                let re: Vec<f64> = y.iter().map(|v| v.re / sg).collect();
                linalg::axpy(1.0, &a.decode(&re)?, &mut states[j].agg);
                noise[j] += noise_scale * worst;
            }

            // Broadcast: j answers every leaf at once.
            if let Some(alpha) = broadcast_scale(cap[j], norm_sq[j]) {
                let sa = libm::sqrt(alpha);
                energy[j] += alpha * norm_sq[j];
                for &i in &star.leaves {
                    let gain = scheduled_gain(block, j, i)?;
                    let h = block.coefficient(j, i);
                    let mut y = receiver_noise(link.noise_seed, t, even, i, m, cfg.noise_power);
                    for (yr, &v) in y.iter_mut().zip(&enc[j]) {
                        *yr += h * (sa * v);
                    }
                    let inv = Complex64::new(1.0, 0.0) / (h * sa);
                    let re: Vec<f64> = y.iter().map(|v| (v * inv).re).collect();
                    let wij = w.weight(i, j);
                    linalg::axpy(wij, &a.decode(&re)?, &mut states[i].agg);
                    noise[i] += noise_scale * tx_slots[j] as f64 * wij * wij * norm_sq[j] / gain;
                }
            }
        }
    }

    for (s, v) in states.iter_mut().zip(&enc) {
        linalg::axpy(1.0, &a.decode(v)?, &mut s.hat);
    }
    let compression_err = compression_error(states);
    for (j, s) in states.iter_mut().enumerate() {
        let wjj = w.weight(j, j);
        for ((th, h), y) in s.theta.iter_mut().zip(&s.hat).zip(&s.agg) {
            *th += zeta * (wjj * h + y - h);
        }
    }
    Ok(AnalogRoundReport {
        rows: m,
        noise,
        energy_ratio: energy.iter().map(|e| e / budget).collect(),
        compression_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_contributor_meets_cap() {
        let c = Contributor { cap: 50.0, gain: 1.0, weight: 1.0, norm_sq: 4.0 };
        assert_relative_eq!(aircomp_alignment(&[c]).unwrap(), 12.5, epsilon = 1e-15);
    }

    #[test]
    fn weaker_link_sets_alignment() {
        let strong = Contributor { cap: 1.0, gain: 2.0, weight: 0.5, norm_sq: 1.0 };
        let weak = Contributor { gain: 1.0, ..strong };
        let gamma = aircomp_alignment(&[strong, weak]).unwrap();
        assert_relative_eq!(gamma, 4.0, epsilon = 1e-15);
        // the strong transmitter spends γ w² ‖Au‖² / |h'|² = half its cap
        assert_relative_eq!(gamma * 0.25 / strong.gain, 0.5 * strong.cap, epsilon = 1e-15);
    }

    #[test]
    fn silence_is_ignored() {
        let quiet = Contributor { cap: 1.0, gain: 1.0, weight: 0.5, norm_sq: 0.0 };
        assert_eq!(aircomp_alignment(&[quiet]), None);
        assert_eq!(broadcast_scale(1.0, 0.0), None);
        assert_eq!(broadcast_scale(6.0, 2.0), Some(3.0));
    }
}
