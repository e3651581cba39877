mod common;

use common::{random_states, seven_nodes};
use d2dsgd_core::channel::{draw_block, slow_gains, ChannelConfig};
use d2dsgd_core::protocol::analog::{analog_round, analog_rows, AnalogLink};
use d2dsgd_core::rlc::RlcCodec;
use d2dsgd_core::scheduling::analog_schedule;
use d2dsgd_core::topology::{default_alpha, mixing_matrix};

const DIM: usize = 64;
const DRAWS: u64 = 10_000;
const T: u64 = 3;

// The effective noise of device i, rebuilt from the schedule:
// (1/2)(N0 / NP) [ Σ_AirComp max_j |S_j^Tx| w_ij² ‖Au_j‖² / g_ji
//                + Σ_broadcast |S_j^Tx| w_ij² ‖Au_j‖² / g_ji ].
#[test]
fn aggregation_noise_matches_effective_noise() {
    let topo = seven_nodes();
    let k = topo.node_count();
    let w = mixing_matrix(&topo, default_alpha(&topo)).unwrap();
    let schedule = analog_schedule(&topo);
    let cfg = ChannelConfig::standard(15.0, 160);
    let slow = slow_gains(&cfg, &topo).unwrap();
    let block = draw_block(&slow, &topo, 41, T);
    let codec = RlcCodec::new(DIM, 6).unwrap();
    let m = analog_rows(&cfg, schedule.slot_count(), DIM).unwrap();
    let a = codec.projection(T, 0, m).unwrap();

    let start = random_states(k, DIM, 0.0, 8);
    let grads = vec![vec![0.0; DIM]; k];
    let norm_sq: Vec<f64> = start
        .iter()
        .map(|s| {
            let u: Vec<f64> = s.theta.iter().zip(&s.hat).map(|(x, h)| x - h).collect();
            a.encode(&u).unwrap().iter().map(|v| v * v).sum()
        })
        .collect();
    let tx = |i: usize| schedule.tx_slot_count(i) as f64;
    let scale = 0.5 * cfg.noise_power / (cfg.block_len as f64 * cfg.power);
    let mut predicted = vec![0.0; k];
    for star in schedule.rounds().iter().flatten() {
        let c = star.center;
        let worst = star
            .leaves
            .iter()
            .map(|&i| tx(i) * w.weight(c, i).powi(2) * norm_sq[i] / block.power_gain(i, c))
            .fold(0.0, f64::max);
        predicted[c] += scale * worst;
        for &i in &star.leaves {
            predicted[i] += scale * tx(c) * w.weight(i, c).powi(2) * norm_sq[c] / block.power_gain(c, i);
        }
    }

    let mut quiet_cfg = cfg.clone();
    quiet_cfg.noise_power = 0.0;
    let mut clean = start.clone();
    let quiet = AnalogLink { topology: &topo, schedule: &schedule, channel: &quiet_cfg, codec: &codec, noise_seed: 0 };
    analog_round(&mut clean, &grads, 0.0, &w, 0.5, &quiet, &block, T).unwrap();

    let mut power = vec![0.0; k];
    for seed in 0..DRAWS {
        let link = AnalogLink { topology: &topo, schedule: &schedule, channel: &cfg, codec: &codec, noise_seed: seed };
        let mut noisy = start.clone();
        let rep = analog_round(&mut noisy, &grads, 0.0, &w, 0.5, &link, &block, T).unwrap();
        if seed == 0 {
            for (r, p) in rep.noise.iter().zip(&predicted) {
                assert!((r / p - 1.0).abs() < 1e-12, "reported {r}, rebuilt {p}");
            }
        }
        for i in 0..k {
            // (m/D) A Aᵀ = I on the m received coordinates, so A undoes the decoding
            let diff: Vec<f64> = noisy[i].agg.iter().zip(&clean[i].agg).map(|(x, y)| x - y).collect();
            power[i] += a.encode(&diff).unwrap().iter().map(|v| v * v).sum::<f64>();
        }
    }
    for i in 0..k {
        let empirical = power[i] / (DRAWS as f64 * m as f64);
        assert!((empirical / predicted[i] - 1.0).abs() < 0.05, "device {i}: {empirical} vs {}", predicted[i]);
    }
}
