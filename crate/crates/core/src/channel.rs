//! Wireless medium: pathloss, block Rayleigh fading and SNR calibration.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::rng::{self, Purpose, StreamRng};
use crate::topology::Topology;
use crate::{Error, Result};

/// Distance at which the received SNR is calibrated, in meters.
pub const SNR_REFERENCE_DISTANCE: f64 = 125.0;

/// `dBm -> W`
pub fn dbm_to_watts(dbm: f64) -> f64 {
    libm::pow(10.0, (dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

/// Average power gain of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainMode {
    /// `A0 (d / d0)^-γ` from the device positions.
    Pathloss,
    /// Same gain on every link, ignoring geometry.
    Equal(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub a0: f64,
    pub d0: f64,
    pub gamma: f64,
    /// Noise power per channel use, W.
    pub noise_power: f64,
    /// Transmit energy per channel use.
    pub power: f64,
    /// Channel uses per block.
    pub block_len: usize,
    pub gain: GainMode,
}

impl ChannelConfig {
    /// Pathloss parameters used throughout the evaluation, with power
    /// calibrated to `snr_db` at the reference distance.
    pub fn standard(snr_db: f64, block_len: usize) -> Self {
        let mut cfg = Self {
            a0: libm::pow(10.0, -3.35),
            d0: 1.0,
            gamma: 3.76,
            noise_power: dbm_to_watts(-169.0),
            power: 1.0,
            block_len,
            gain: GainMode::Pathloss,
        };
        cfg.power = calibrate_power(&cfg, snr_db, SNR_REFERENCE_DISTANCE);
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("A0", self.a0),
            ("d0", self.d0),
            ("gamma", self.gamma),
            ("N0", self.noise_power),
            ("P", self.power),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.block_len == 0 {
            return Err(Error::InvalidParameter("block length must be at least 1".into()));
        }
        if let GainMode::Equal(g) = self.gain {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter(format!("equal gain must be positive, got {g}")));
            }
        }
        Ok(())
    }

    /// Pathloss power gain at distance `d`.
    pub fn pathloss(&self, d: f64) -> f64 {
        self.a0 * libm::pow(d / self.d0, -self.gamma)
    }

    /// Average received SNR `P g / N0` for a link of power gain `g`.
    pub fn snr(&self, gain: f64) -> f64 {
        self.power * gain / self.noise_power
    }
}

/// Transmit power giving `target_snr_db` average received SNR at `distance`.
pub fn calibrate_power(cfg: &ChannelConfig, target_snr_db: f64, distance: f64) -> f64 {
    db_to_linear(target_snr_db) * cfg.noise_power / cfg.pathloss(distance)
}

/// Replaces every link's slow gain by the reference-distance pathloss, with
/// power calibrated so that every link sees `target_snr_db` on average.
pub fn equal_snr_override(cfg: &ChannelConfig, target_snr_db: f64) -> ChannelConfig {
    let g = cfg.pathloss(SNR_REFERENCE_DISTANCE);
    ChannelConfig {
        power: db_to_linear(target_snr_db) * cfg.noise_power / g,
        gain: GainMode::Equal(g),
        ..cfg.clone()
    }
}

/// Average power gains `g_ij` of all device pairs (0 on the diagonal).
pub fn slow_gains(cfg: &ChannelConfig, topology: &Topology) -> Result<Vec<f64>> {
    let k = topology.node_count();
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            g[i * k + j] = match cfg.gain {
                GainMode::Equal(v) => v,
                GainMode::Pathloss => {
                    let d = topology.distance(i, j).ok_or_else(|| {
                        Error::InvalidParameter("pathloss needs device positions".into())
                    })?;
                    cfg.pathloss(d)
                }
            };
        }
    }
    Ok(g)
}

/// Unit-variance circular Gaussian sample.
pub fn complex_normal(rng: &mut StreamRng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// Small-scale fading `h_ij` of one block; symmetric in `(i, j)`.
pub fn fading(seed: u64, t: u64, i: usize, j: usize) -> Complex64 {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    let key = ((a as u64) << 32) | b as u64;
    complex_normal(&mut rng::stream(seed, Purpose::Fading, t, key))
}

/// Full coefficients `h'_ij = sqrt(g_ij) h_ij` of the unblocked links in one block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    t: u64,
    k: usize,
    h: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn block(&self) -> u64 {
        self.t
    }

    /// Zero for blocked pairs.
    pub fn coefficient(&self, i: usize, j: usize) -> Complex64 {
        self.h[i * self.k + j]
    }

    pub fn power_gain(&self, i: usize, j: usize) -> f64 {
        self.coefficient(i, j).norm_sqr()
    }
}

/// Draws the fading of block `t` on every edge of `topology`.
pub fn draw_block(
    slow: &[f64],
    topology: &Topology,
    seed: u64,
    t: u64,
) -> ChannelRealization {
    let k = topology.node_count();
    let mut h = vec![Complex64::new(0.0, 0.0); k * k];
    for (i, j) in topology.graph().edges() {
        let c = fading(seed, t, i, j) * libm::sqrt(slow[i * k + j]);
        h[i * k + j] = c;
        h[j * k + i] = c;
    }
    ChannelRealization { t, k, h }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_topology, Blockage, TopologyKind};
    use approx::assert_relative_eq;

    #[test]
    fn reference_distance_gain() {
        let cfg = ChannelConfig::standard(30.0, 100);
        assert_relative_eq!(cfg.pathloss(cfg.d0), cfg.a0, max_relative = 1e-15);
    }

    #[test]
    fn identity_calibration() {
        let cfg = ChannelConfig {
            a0: 1.0,
            d0: 1.0,
            gamma: 2.0,
            noise_power: 1.0,
            power: 7.0,
            block_len: 1,
            gain: GainMode::Pathloss,
        };
        assert_relative_eq!(calibrate_power(&cfg, 0.0, 1.0), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn calibration_round_trips() {
        let cfg = ChannelConfig::standard(30.0, 100);
        let snr = cfg.snr(cfg.pathloss(125.0));
        assert_relative_eq!(10.0 * libm::log10(snr), 30.0, epsilon = 1e-9);
        let p3 = calibrate_power(&cfg, 33.0, 125.0);
        assert_relative_eq!(p3 / cfg.power, libm::pow(10.0, 0.3), max_relative = 1e-12);
    }

    #[test]
    fn equal_override_is_idempotent() {
        let cfg = ChannelConfig::standard(20.0, 100);
        let once = equal_snr_override(&cfg, 30.0);
        let twice = equal_snr_override(&once, 30.0);
        assert_eq!(once, twice);
        let GainMode::Equal(g) = once.gain else { panic!("expected equal gains") };
        assert_relative_eq!(once.snr(g), 1000.0, max_relative = 1e-12);
    }

    #[test]
    fn block_is_reciprocal_and_reproducible() {
        let kind = TopologyKind::Geometric(Blockage::Unblocked);
        let topo = build_topology(&kind, 6, 4).unwrap();
        let cfg = ChannelConfig::standard(30.0, 100);
        let slow = slow_gains(&cfg, &topo).unwrap();
        let a = draw_block(&slow, &topo, 11, 3);
        assert_eq!(a, draw_block(&slow, &topo, 11, 3));
        assert_ne!(a, draw_block(&slow, &topo, 11, 4));
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(a.coefficient(i, j), a.coefficient(j, i));
            }
        }
    }

    #[test]
    fn pathloss_needs_positions() {
        let topo = build_topology(&TopologyKind::Chain, 3, 0).unwrap();
        let cfg = ChannelConfig::standard(30.0, 100);
        assert!(slow_gains(&cfg, &topo).is_err());
        assert!(slow_gains(&equal_snr_override(&cfg, 30.0), &topo).is_ok());
    }
}
