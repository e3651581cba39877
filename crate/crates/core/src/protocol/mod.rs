//! Wireless realizations of the compressed exchange.

pub mod analog;
pub mod digital;

/// Consensus step size `ζ(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZetaSchedule {
    Constant(f64),
    /// `ζ0 / (Ñ^{1/4} t / a' + 1)`
    Adaptive { zeta0: f64, noise: f64, a_prime: f64 },
    /// `ζ0 / (t / d + 1)`
    Decay { zeta0: f64, d: f64 },
}

impl ZetaSchedule {
    pub fn at(&self, t: u64) -> f64 {
        let t = t as f64;
        match *self {
            Self::Constant(z) => z,
            Self::Adaptive { zeta0, noise, a_prime } => {
                zeta0 / (libm::pow(noise, 0.25) * t / a_prime + 1.0)
            }
            Self::Decay { zeta0, d } => zeta0 / (t / d + 1.0),
        }
    }
}
