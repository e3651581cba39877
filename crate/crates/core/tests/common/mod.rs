#![allow(dead_code)]

use d2dsgd_core::learner::DeviceState;
use d2dsgd_core::topology::{place_nodes, Graph, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seven devices: two triangles joined through a square, with node 6 hanging
/// off the far side.
pub const SEVEN_EDGES: [(usize, usize); 9] =
    [(0, 1), (0, 2), (1, 2), (1, 3), (2, 4), (3, 4), (3, 5), (4, 6), (5, 6)];

pub fn seven_nodes() -> Topology {
    let g = Graph::from_edges(7, &SEVEN_EDGES).unwrap();
    Topology::new(g, Some(place_nodes(7, 1))).unwrap()
}

pub fn random_states(k: usize, d: usize, momentum: f64, seed: u64) -> Vec<DeviceState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .map(|_| DeviceState::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect(), momentum).unwrap())
        .collect()
}

pub fn random_grads(k: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

pub fn max_abs_diff(a: &[DeviceState], b: &[DeviceState]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.theta.iter().zip(&y.theta).chain(x.hat.iter().zip(&y.hat)))
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}
