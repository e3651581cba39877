//! Random linear coding with partial Hadamard projections.
//!
//! The projection of iteration `t` is `A = H[0:m] R / sqrt(m)`, where `H` is
//! the `D x D` Sylvester Hadamard matrix (entries ±1), `R` a random sign
//! diagonal and `D` the model dimension rounded up to a power of two.
//! Encoding and decoding both run in `O(D log D)` with the fast
//! Walsh-Hadamard transform; no matrix is ever stored.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::rng::{self, Purpose};
use crate::{Error, Result};

/// In-place unnormalized fast Walsh-Hadamard transform.
///
/// Computes `H x` for the Sylvester-ordered Hadamard matrix. Panics if the
/// length is not a power of two.
pub fn fwht(x: &mut [f64]) {
    let n = x.len();
    assert!(n.is_power_of_two(), "fwht length {n} is not a power of two");
    let mut h = 1;
    while h < n {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*a + *b, *a - *b);
                *a = s;
                *b = d;
            }
        }
        h *= 2;
    }
}

/// Shared-randomness codec for one model dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RlcCodec {
    dim: usize,
    padded: usize,
    seed: u64,
}

impl RlcCodec {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("model dimension must be positive".into()));
        }
        Ok(Self { dim, padded: dim.next_power_of_two(), seed })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `D`, the padded dimension.
    pub fn padded_dim(&self) -> usize {
        self.padded
    }

    /// The projection with `m` rows used at iteration `t`.
    ///
    /// `lane` selects an independent sign sequence; devices that must agree
    /// on `A` use the same lane.
    pub fn projection(&self, t: u64, lane: u64, m: usize) -> Result<Projection> {
        if m == 0 || m > self.padded {
            return Err(Error::RowsOutOfRange { m, max: self.padded });
        }
        let mut rng = rng::stream(self.seed, Purpose::RlcSigns, t, lane);
        let signs = (0..self.padded)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        Ok(Projection { dim: self.dim, m, signs })
    }
}

/// One realized `A` with `m` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    dim: usize,
    m: usize,
    signs: Vec<f64>,
}

impl Projection {
    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn padded_dim(&self) -> usize {
        self.signs.len()
    }

    /// `m / D`
    pub fn ratio(&self) -> f64 {
        self.m as f64 / self.signs.len() as f64
    }

    /// `A u`
    pub fn encode(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: u.len() });
        }
        let mut x = vec![0.0; self.signs.len()];
        for ((xi, ui), s) in x.iter_mut().zip(u).zip(&self.signs) {
            *xi = ui * s;
        }
        fwht(&mut x);
        x.truncate(self.m);
        let scale = 1.0 / libm::sqrt(self.m as f64);
        x.iter_mut().for_each(|v| *v *= scale);
        Ok(x)
    }

    /// `A^T v`, truncated to the model dimension.
    pub fn transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: v.len() });
        }
        let mut x = vec![0.0; self.signs.len()];
        x[..self.m].copy_from_slice(v);
        fwht(&mut x);
        let scale = 1.0 / libm::sqrt(self.m as f64);
        x.truncate(self.dim);
        for (xi, s) in x.iter_mut().zip(&self.signs) {
            *xi *= s * scale;
        }
        Ok(x)
    }

    /// `(m / D) A^T v`
    pub fn decode(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.transpose(v)?;
        let r = self.ratio();
        x.iter_mut().for_each(|xi| *xi *= r);
        Ok(x)
    }

    /// `(m / D) A^T A u`
    pub fn reconstruct(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.decode(&self.encode(u)?)
    }

    /// Dense `m x D` matrix, row-major. Intended for tests and small `D`.
    pub fn dense(&self) -> Vec<f64> {
        let d = self.signs.len();
        let scale = 1.0 / libm::sqrt(self.m as f64);
        let mut a = vec![0.0; self.m * d];
        for r in 0..self.m {
            for c in 0..d {
                let h = if (r & c).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                a[r * d + c] = scale * h * self.signs[c];
            }
        }
        a
    }
}

/// Per-element quantizer with `b` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quantizer {
    /// Round to the nearest IEEE binary32 value.
    F32,
    /// Native precision; the identity.
    #[default]
    F64,
}

impl Quantizer {
    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            32 => Ok(Self::F32),
            64 => Ok(Self::F64),
            b => Err(Error::InvalidParameter(alloc::format!("unsupported quantizer width {b}"))),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Self::F32 => 32,
            Self::F64 => 64,
        }
    }

    pub fn quantize(self, v: &mut [f64]) -> Result<()> {
        if self == Self::F64 {
            return Ok(());
        }
        for (index, x) in v.iter_mut().enumerate() {
            let q = *x as f32;
            if q.is_infinite() && x.is_finite() {
                return Err(Error::QuantizerOverflow { index, value: *x });
            }
            *x = q as f64;
        }
        Ok(())
    }
}
