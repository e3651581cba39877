//! Closed-form reconstruction quality and optimality-gap bounds.

use alloc::format;
use alloc::vec::Vec;

use crate::channel::ChannelConfig;
use crate::linalg;
use crate::topology::Topology;
use crate::{Error, Result};

/// `P(m ≥ n)` for the digital row count of a device, `n ≥ 2`.
///
/// The worst of the device's links has exponentially distributed power gain
/// with rate `Σ_j 1/g_ij`, and `m ≥ n` exactly when that gain supports
/// `n b` bits in `⌊N/M⌋` channel uses.
pub fn rows_tail(cfg: &ChannelConfig, slots: usize, bits: u32, inv_gain_sum: f64, n: usize) -> f64 {
    let uses = (cfg.block_len / slots) as f64;
    let threshold = libm::exp2(n as f64 * bits as f64 / uses) - 1.0;
    libm::exp(-cfg.noise_power / (cfg.power * slots as f64) * threshold * inv_gain_sum)
}

/// `ω_i = (1/D) (1 + Σ_{n=2}^{D} P(m_i ≥ n))`, i.e. `E[m_i] / D`.
pub fn omega_device(cfg: &ChannelConfig, slots: usize, bits: u32, padded: usize, inv_gain_sum: f64) -> f64 {
    let mut sum = 1.0;
    for n in 2..=padded {
        let g = rows_tail(cfg, slots, bits, inv_gain_sum, n);
        sum += g;
        if g < 1e-300 {
            break;
        }
    }
    sum / padded as f64
}

/// Distribution of `m_i` on `1..=D` (index 0 holds `P(m = 1)`).
pub fn rows_pmf(cfg: &ChannelConfig, slots: usize, bits: u32, padded: usize, inv_gain_sum: f64) -> Vec<f64> {
    let tail = |n: usize| {
        if n <= 1 {
            1.0
        } else if n > padded {
            0.0
        } else {
            rows_tail(cfg, slots, bits, inv_gain_sum, n)
        }
    };
    (1..=padded).map(|n| tail(n) - tail(n + 1)).collect()
}

/// `Σ_{j ∈ N_i} 1/g_ij` for every device, from a row-major slow-gain matrix.
pub fn inverse_gain_sums(slow: &[f64], topology: &Topology) -> Vec<f64> {
    let k = topology.node_count();
    (0..k)
        .map(|i| topology.neighbors(i).iter().map(|&j| 1.0 / slow[i * k + j]).sum())
        .collect()
}

/// Per-device `ω_i` and their minimum.
pub fn omega_digital(
    cfg: &ChannelConfig,
    slots: usize,
    bits: u32,
    padded: usize,
    inv_gain_sums: &[f64],
) -> (f64, Vec<f64>) {
    let per: Vec<f64> = inv_gain_sums
        .iter()
        .map(|&s| omega_device(cfg, slots, bits, padded, s))
        .collect();
    (per.iter().copied().fold(1.0, f64::min), per)
}

/// `p(δ, ω) = δ²ω / (2(16δ + δ² + 4β² + 2δβ² - 8δω))`
pub fn p_fn(delta: f64, omega: f64, beta: f64) -> Result<f64> {
    let den = 2.0 * (16.0 * delta + delta * delta + 4.0 * beta * beta + 2.0 * delta * beta * beta
        - 8.0 * delta * omega);
    if !(den > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "p denominator {den} is not positive (δ={delta}, ω={omega}, β={beta})"
        )));
    }
    Ok(delta * delta * omega / den)
}

/// `ζ0 = 2p/δ`
pub fn zeta0(delta: f64, omega: f64, beta: f64) -> Result<f64> {
    Ok(2.0 * p_fn(delta, omega, beta)? / delta)
}

/// `S_T = Σ_{t<T} (a + t)²`
pub fn weight_sum(a: f64, horizon: u64) -> f64 {
    let t = horizon as f64;
    t * a * a + a * t * (t - 1.0) + (t - 1.0) * t * (2.0 * t - 1.0) / 6.0
}

/// Constants shared by both bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub mu: f64,
    pub l: f64,
    /// `G²`, bound on the expected squared stochastic gradient norm.
    pub g2: f64,
    /// `σ̄²`, average mini-batch gradient variance.
    pub sigma2: f64,
    /// `‖θ̄(0) - θ*‖²`
    pub v0: f64,
    pub a: f64,
    pub a_prime: f64,
    pub k: usize,
    pub delta: f64,
    pub beta: f64,
    pub omega: f64,
    /// `Ñ_{0,T}`
    pub noise: f64,
    /// Model dimension `d` (the padded one).
    pub dim: usize,
    /// Reject parameters that violate the theorems' hypotheses on `a`, `a'`.
    pub check_hypotheses: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DigitalBound {
    pub centralized: f64,
    pub consensus: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalogBound {
    pub centralized: f64,
    pub consensus: f64,
    pub awgn: f64,
    pub total: f64,
}

fn centralized(b: &BoundParams, horizon: u64) -> f64 {
    let (a, t) = (b.a, horizon as f64);
    let s = weight_sum(a, horizon);
    b.mu / 3.25 * (a * a * a - 3.25 * a * a) / s * b.v0
        + 1.625 * (2.0 * a + t) * t / (b.mu * s) * b.sigma2 / b.k as f64
}

fn consensus(b: &BoundParams, p: f64, horizon: u64) -> f64 {
    let t = horizon as f64;
    158.45 * 24.0 * b.l * t * b.g2 / (b.mu * b.mu * p * p * weight_sum(b.a, horizon))
}

fn check_a(b: &BoundParams, p: f64) -> Result<()> {
    if !b.check_hypotheses {
        return Ok(());
    }
    let (from_p, from_l) = (5.0 / p, 13.0 * b.l / b.mu);
    if b.a < from_p {
        return Err(Error::Hypothesis(format!("a = {} is below 5/p = {from_p}", b.a)));
    }
    if b.a < from_l {
        return Err(Error::Hypothesis(format!("a = {} is below 13L/μ = {from_l}", b.a)));
    }
    Ok(())
}

fn check_horizon(horizon: u64) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least one iteration".into()));
    }
    Ok(())
}

/// Centralized and consensus terms of the digital bound at horizon `T`.
pub fn digital_gap_bound(b: &BoundParams, horizon: u64) -> Result<DigitalBound> {
    check_horizon(horizon)?;
    let p = p_fn(b.delta, b.omega, b.beta)?;
    check_a(b, p)?;
    let centralized = centralized(b, horizon);
    let consensus = consensus(b, p, horizon);
    Ok(DigitalBound { centralized, consensus, total: centralized + consensus })
}

/// `p̃(t) = δζ0/x - (δ²/4 + 2β²/ω) ζ0²/x²`, `x = Ñ^{1/4} t / a' + 1`
pub fn p_tilde(b: &BoundParams, t: u64) -> Result<f64> {
    let z = zeta0(b.delta, b.omega, b.beta)?;
    let x = libm::pow(b.noise, 0.25) * t as f64 / b.a_prime + 1.0;
    Ok(b.delta * z / x - (b.delta * b.delta / 4.0 + 2.0 * b.beta * b.beta / b.omega) * z * z / (x * x))
}

/// `p(t) = min(p̃(t), p)`
pub fn p_t(b: &BoundParams, t: u64) -> Result<f64> {
    Ok(p_tilde(b, t)?.min(p_fn(b.delta, b.omega, b.beta)?))
}

/// Centralized, noiseless-consensus and AWGN terms of the analog bound.
pub fn analog_gap_bound(b: &BoundParams, horizon: u64) -> Result<AnalogBound> {
    check_horizon(horizon)?;
    let pt = p_t(b, horizon)?;
    if !(pt > 0.0) {
        return Err(Error::Hypothesis(format!("p(T) = {pt} is not positive at T = {horizon}")));
    }
    check_a(b, pt)?;
    let root4 = libm::pow(b.noise, 0.25);
    if b.check_hypotheses && !(b.a_prime > b.a * root4) {
        return Err(Error::Hypothesis(format!(
            "a' = {} does not exceed a Ñ^(1/4) = {}",
            b.a_prime,
            b.a * root4
        )));
    }
    let z = zeta0(b.delta, b.omega, b.beta)?;
    let za = z * b.a_prime;
    let d = b.dim as f64;
    let k = b.k as f64;
    let w2 = b.omega * b.omega;
    let m = b.mu / 3.25;
    let a_fn = b.delta * za * za * za * (2.0 - b.omega) * w2 * d * m * m;
    let d_fn = w2 * d * m * za * za;
    let t = horizon as f64;
    let centralized = centralized(b, horizon);
    let consensus = consensus(b, pt, horizon);
    let awgn = 158.45 * (a_fn / k) * root4 * b.l * t
        / (b.mu * b.mu * pt * pt * weight_sum(b.a, horizon))
        + d_fn * libm::sqrt(b.noise) / (k * k);
    Ok(AnalogBound { centralized, consensus, awgn, total: centralized + consensus + awgn })
}

/// `(G², σ̄²)` from stochastic gradients sampled at a common point:
/// `samples[i]` holds device `i`'s draws. `G²` is the largest per-device
/// mean squared norm, `σ̄²` the average per-device variance.
pub fn gradient_constants(samples: &[Vec<Vec<f64>>]) -> (f64, f64) {
    let mut g2: f64 = 0.0;
    let mut var = 0.0;
    for draws in samples.iter().filter(|d| !d.is_empty()) {
        let n = draws.len() as f64;
        g2 = g2.max(draws.iter().map(|g| linalg::norm_sq(g)).sum::<f64>() / n);
        let mean = linalg::mean_vector(draws);
        var += draws.iter().map(|g| linalg::dist_sq(g, &mean)).sum::<f64>() / n;
    }
    (g2, var / samples.len().max(1) as f64)
}
