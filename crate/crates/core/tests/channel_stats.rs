use d2dsgd_core::channel::{
    draw_block, equal_snr_override, fading, slow_gains, ChannelConfig, GainMode, SNR_REFERENCE_DISTANCE,
};
use d2dsgd_core::topology::{build_topology, Blockage, TopologyKind};

const DRAWS: u64 = 100_000;

#[test]
fn fading_has_unit_power_and_zero_mean() {
    let (mut p, mut re, mut im) = (0.0, 0.0, 0.0);
    for t in 0..DRAWS {
        let h = fading(17, t, 2, 5);
        p += h.norm_sqr();
        re += h.re;
        im += h.im;
    }
    let n = DRAWS as f64;
    assert!((p / n - 1.0).abs() < 0.01, "mean |h|² = {}", p / n);
    assert!((re / n).abs() < 0.01 && (im / n).abs() < 0.01);
}

#[test]
fn equal_snr_holds_on_average() {
    let cfg = equal_snr_override(&ChannelConfig::standard(20.0, 100), 25.0);
    let GainMode::Equal(g) = cfg.gain else { panic!("expected equal gains") };
    let topo = build_topology(&TopologyKind::Chain, 4, 0).unwrap();
    let slow = slow_gains(&cfg, &topo).unwrap();
    let mut acc = 0.0;
    for t in 0..DRAWS {
        acc += draw_block(&slow, &topo, 3, t).power_gain(1, 2);
    }
    let snr_db = 10.0 * (cfg.power / cfg.noise_power * acc / DRAWS as f64).log10();
    assert!((snr_db - 25.0).abs() < 0.1, "{snr_db} dB");
    assert!((cfg.pathloss(SNR_REFERENCE_DISTANCE) - g).abs() <= 1e-15 * g);
}

// Kolmogorov-Smirnov distance to the exponential law with rate Σ_j 1/g_j:
// the minimum of independent exponentials with means g_j.
#[test]
fn worst_link_gain_is_exponential() {
    let cfg = ChannelConfig::standard(20.0, 100);
    let topo = build_topology(&TopologyKind::Geometric(Blockage::Unblocked), 5, 8).unwrap();
    let slow = slow_gains(&cfg, &topo).unwrap();
    let i = 0;
    let rate: f64 = topo.neighbors(i).iter().map(|&j| 1.0 / slow[i * 5 + j]).sum();
    let mut mins: Vec<f64> = (0..DRAWS)
        .map(|t| {
            let b = draw_block(&slow, &topo, 23, t);
            topo.neighbors(i).iter().map(|&j| b.power_gain(i, j)).fold(f64::INFINITY, f64::min)
        })
        .collect();
    mins.sort_by(f64::total_cmp);
    let n = mins.len() as f64;
    let ks = mins
        .iter()
        .enumerate()
        .map(|(r, &x)| {
            let f = 1.0 - (-rate * x).exp();
            (f - r as f64 / n).abs().max((f - (r + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS = {ks}");
}
