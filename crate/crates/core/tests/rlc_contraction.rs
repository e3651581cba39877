use d2dsgd_core::rlc::RlcCodec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mean_contraction(d: usize, m: usize, trials: u64, seed: u64) -> f64 {
    let codec = RlcCodec::new(d, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for t in 0..trials {
        let u: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = codec.projection(t, 0, m).unwrap().reconstruct(&u).unwrap();
        let err: f64 = u.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum();
        acc += err / u.iter().map(|v| v * v).sum::<f64>();
    }
    acc / trials as f64
}

// (m/D) AᵀA is an orthogonal projection onto a random m-dimensional
// subspace, so the relative error is exactly 1 - m/D on average.
#[test]
fn contraction_matches_row_ratio() {
    for (d, m, trials) in [(64, 16, 20_000), (256, 64, 20_000), (1024, 256, 4_000)] {
        let got = mean_contraction(d, m, trials, 3);
        let want = 1.0 - m as f64 / d as f64;
        assert!((got - want).abs() < 0.015, "D={d} m={m}: {got} vs {want}");
    }
}

#[test]
fn reconstruction_is_idempotent() {
    let codec = RlcCodec::new(128, 9).unwrap();
    let a = codec.projection(4, 2, 40).unwrap();
    let u: Vec<f64> = (0..128).map(|i| (i as f64 * 0.37).sin()).collect();
    let once = a.reconstruct(&u).unwrap();
    let twice = a.reconstruct(&once).unwrap();
    for (x, y) in once.iter().zip(&twice) {
        assert!((x - y).abs() < 1e-12);
    }
}

// E[(m/D) AᵀA u] = (m/D) u over the sign draw: the diagonal of H_mᵀH_m / D
// is m/D and the off-diagonal terms average out with the random signs.
#[test]
fn mean_reconstruction_is_scaled_input() {
    let (d, m, trials) = (32, 8, 40_000u64);
    let codec = RlcCodec::new(d, 21).unwrap();
    let u: Vec<f64> = (0..d).map(|i| 1.0 + i as f64 / d as f64).collect();
    let mut mean = vec![0.0; d];
    for t in 0..trials {
        let r = codec.projection(t, 0, m).unwrap().reconstruct(&u).unwrap();
        mean.iter_mut().zip(&r).for_each(|(s, v)| *s += v / trials as f64);
    }
    let ratio = m as f64 / d as f64;
    for (got, x) in mean.iter().zip(&u) {
        assert!((got - ratio * x).abs() < 0.02, "{got} vs {}", ratio * x);
    }
}

#[test]
fn unpadded_dimension_still_contracts() {
    // d = 200 pads to 256. The part of the projection that lands on the
    // padding is dropped, which can only shrink the error below 1 - m/D.
    let got = mean_contraction(200, 64, 4_000, 5);
    assert!(got < 0.75 && got > 0.6, "{got}");
}
