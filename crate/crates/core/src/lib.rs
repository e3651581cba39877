//! Simulation and analysis core for compressed decentralized SGD over
//! wireless device-to-device networks.
//!
//! Devices run CHOCO-style gossip SGD: a local SGD step, a compressed
//! exchange of the difference between the iterate and its public estimate,
//! and a consensus correction through a doubly stochastic mixing matrix.
//! The exchange runs either over digital broadcast links with a
//! fading-dependent bit budget, or over analog links mixing over-the-air
//! computation (AirComp) with uncoded broadcast.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! experiment orchestration live in the `d2dsgd` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod channel;
mod error;
pub mod learner;
pub mod linalg;
pub mod protocol;
pub mod rlc;
pub mod rng;
pub mod scheduling;
pub mod sim;
pub mod topology;

pub use error::{Error, Result};
