//! Training-run driver shared by every transmission mode.

use alloc::format;
use alloc::vec::Vec;

use crate::channel::{self, ChannelConfig};
use crate::learner::{
    accuracy, choco_round_ideal, global_loss, loss_and_gradient, minibatch, Compressor, Dataset,
    DeviceState, LearningRate, Model,
};
use crate::linalg;
use crate::protocol::analog::{analog_round, AnalogLink};
use crate::protocol::digital::{digital_round, DigitalLink, RowPolicy};
use crate::protocol::ZetaSchedule;
use crate::rlc::{Quantizer, RlcCodec};
use crate::scheduling::{self, AnalogSchedule, DigitalSchedule};
use crate::topology::{MixingMatrix, Topology};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Perfect links.
    Ideal,
    Digital,
    Analog,
    /// Independent local training.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheduler {
    Coloring,
    Tdma,
    AnalogPairing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub scheduler: Scheduler,
    pub channel: ChannelConfig,
    pub quantizer: Quantizer,
    /// RLC rows on perfect links; `None` sends the full difference.
    pub ideal_rows: Option<usize>,
    pub digital_rows: RowPolicy,
    pub lr: LearningRate,
    pub zeta: ZetaSchedule,
    pub momentum: f64,
    pub mu: f64,
    pub batch: usize,
    pub iterations: u64,
    pub seed: u64,
    /// Record every this many iterations (the last one is always recorded).
    pub log_every: u64,
    /// Stop once the gap exceeds this multiple of its initial value.
    pub divergence_factor: f64,
}

/// What a run trains on.
pub struct Problem<'a> {
    pub topology: &'a Topology,
    pub mixing: &'a MixingMatrix,
    pub shards: &'a [Dataset],
    pub test: Option<&'a Dataset>,
    pub f_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: u64,
    /// `F(θ̄)`
    pub f_avg: f64,
    /// `F(θ̄) - F*`
    pub gap: f64,
    /// `Σ_i ‖θ̄ - θ_i‖²`
    pub consensus_err: f64,
    /// `Σ_i ‖θ̂_i - θ_i^{t+1/2}‖²` of the last round.
    pub compression_err: f64,
    /// Test accuracy of `θ̄` (NaN without a test set).
    pub accuracy: f64,
    pub zeta: f64,
    pub min_rows: usize,
    pub max_rows: usize,
    pub min_bits: f64,
    pub max_bits: f64,
    /// `Σ_i Ñ_0i` of the last analog round.
    pub sum_noise: f64,
    pub max_energy_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<Record>,
    pub diverged: bool,
    /// Largest `Σ_i Ñ_0i` over the rounds run.
    pub max_noise: f64,
    pub final_average: Vec<f64>,
}

enum Link {
    Ideal(Compressor),
    Digital(DigitalSchedule, RlcCodec),
    Analog(AnalogSchedule, RlcCodec),
    None,
}

fn average(states: &[DeviceState]) -> Vec<f64> {
    let mut avg = alloc::vec![0.0; states[0].theta.len()];
    for s in states {
        linalg::axpy(1.0, &s.theta, &mut avg);
    }
    let inv = 1.0 / states.len() as f64;
    avg.iter_mut().for_each(|v| *v *= inv);
    avg
}

/// Runs `cfg.iterations` rounds from the all-zero model.
pub fn run(cfg: &RunConfig, problem: &Problem<'_>) -> Result<RunTrace> {
    let topo = problem.topology;
    let k = topo.node_count();
    if problem.shards.len() != k || problem.mixing.node_count() != k {
        return Err(Error::DimensionMismatch { expected: k, got: problem.shards.len() });
    }
    if cfg.batch == 0 || cfg.log_every == 0 {
        return Err(Error::InvalidParameter("batch size and log interval must be positive".into()));
    }
    cfg.channel.validate()?;
    let model = Model::for_dataset(&problem.shards[0]);
    let dim = model.dim();
    let codec = RlcCodec::new(dim, cfg.seed)?;

    let link = match cfg.protocol {
        Protocol::None => Link::None,
        Protocol::Ideal => Link::Ideal(match cfg.ideal_rows {
            None => Compressor::Identity,
            Some(rows) => Compressor::Rlc { codec, rows, quantizer: cfg.quantizer },
        }),
        Protocol::Digital => {
            let schedule = match cfg.scheduler {
                Scheduler::Coloring => scheduling::digital_schedule(topo),
                Scheduler::Tdma => scheduling::tdma_schedule(topo),
                Scheduler::AnalogPairing => {
                    return Err(Error::ScheduleMismatch("digital links need a broadcast schedule".into()))
                }
            };
            Link::Digital(schedule, codec)
        }
        Protocol::Analog => {
            if cfg.scheduler != Scheduler::AnalogPairing {
                return Err(Error::ScheduleMismatch("analog links need the pairing schedule".into()));
            }
            Link::Analog(scheduling::analog_schedule(topo), codec)
        }
    };
    let slow = match cfg.protocol {
        Protocol::Digital | Protocol::Analog => channel::slow_gains(&cfg.channel, topo)?,
        _ => Vec::new(),
    };

    let mut states = Vec::with_capacity(k);
    for _ in 0..k {
        states.push(DeviceState::new(alloc::vec![0.0; dim], cfg.momentum)?);
    }
    let mut trace = RunTrace { records: Vec::new(), diverged: false, max_noise: 0.0, final_average: Vec::new() };
    let mut last = Record {
        t: 0,
        f_avg: 0.0,
        gap: 0.0,
        consensus_err: 0.0,
        compression_err: 0.0,
        accuracy: f64::NAN,
        zeta: cfg.zeta.at(0),
        min_rows: 0,
        max_rows: 0,
        min_bits: 0.0,
        max_bits: 0.0,
        sum_noise: 0.0,
        max_energy_ratio: 0.0,
    };
    let observe = |states: &[DeviceState], rec: &mut Record| -> Result<()> {
        let avg = average(states);
        rec.f_avg = global_loss(&avg, problem.shards, cfg.mu)?;
        rec.gap = rec.f_avg - problem.f_star;
        rec.consensus_err = states.iter().map(|s| linalg::dist_sq(&avg, &s.theta)).sum();
        rec.accuracy = problem.test.map_or(f64::NAN, |d| accuracy(&avg, d));
        Ok(())
    };
    observe(&states, &mut last)?;
    let initial_gap = last.gap;
    trace.records.push(last);

    let mut grads = Vec::with_capacity(k);
    for t in 0..cfg.iterations {
        grads.clear();
        for (i, (s, shard)) in states.iter().zip(problem.shards).enumerate() {
            let batch = minibatch(shard.len(), cfg.batch, cfg.seed, i, t);
            grads.push(loss_and_gradient(&s.theta, shard, &batch, cfg.mu)?.1);
        }
        let eta = cfg.lr.at(t);
        let zeta = cfg.zeta.at(t);
        last.t = t + 1;
        last.zeta = zeta;
        match &link {
            Link::None => {
                for (s, g) in states.iter_mut().zip(&grads) {
                    s.local_step(g, eta)?;
                }
            }
            Link::Ideal(comp) => {
                last.compression_err =
                    choco_round_ideal(&mut states, &grads, eta, problem.mixing, zeta, comp, t)?;
            }
            Link::Digital(schedule, codec) => {
                let block = channel::draw_block(&slow, topo, cfg.seed, t);
                let link = DigitalLink {
                    topology: topo,
                    schedule,
                    channel: &cfg.channel,
                    codec,
                    quantizer: cfg.quantizer,
                    rows: cfg.digital_rows,
                };
                let rep = digital_round(&mut states, &grads, eta, problem.mixing, zeta, &link, &block, t)?;
                last.compression_err = rep.compression_err;
                last.min_rows = rep.rows.iter().copied().min().unwrap_or(0);
                last.max_rows = rep.rows.iter().copied().max().unwrap_or(0);
                last.min_bits = rep.budgets.iter().copied().fold(f64::INFINITY, f64::min);
                last.max_bits = rep.budgets.iter().copied().fold(0.0, f64::max);
            }
            Link::Analog(schedule, codec) => {
                let block = channel::draw_block(&slow, topo, cfg.seed, t);
                let link = AnalogLink {
                    topology: topo,
                    schedule,
                    channel: &cfg.channel,
                    codec,
                    noise_seed: cfg.seed,
                };
                let rep = analog_round(&mut states, &grads, eta, problem.mixing, zeta, &link, &block, t)?;
                last.compression_err = rep.compression_err;
                last.min_rows = rep.rows;
                last.max_rows = rep.rows;
                last.sum_noise = rep.sum_noise();
                last.max_energy_ratio = rep.max_energy_ratio();
                trace.max_noise = trace.max_noise.max(last.sum_noise);
            }
        }
        let finite = states.iter().all(|s| s.theta.iter().all(|v| v.is_finite()));
        if !finite {
            trace.diverged = true;
            last.f_avg = f64::INFINITY;
            last.gap = f64::INFINITY;
            trace.records.push(last);
            break;
        }
        if (t + 1) % cfg.log_every == 0 || t + 1 == cfg.iterations {
            observe(&states, &mut last)?;
            trace.records.push(last);
            if !last.gap.is_finite() || last.gap > cfg.divergence_factor * initial_gap.abs() {
                trace.diverged = true;
                break;
            }
        }
    }
    trace.final_average = average(&states);
    Ok(trace)
}

impl RunTrace {
    /// Mean gap of the records with `t` in `[from, to]`.
    pub fn windowed_gap(&self, from: u64, to: u64) -> Result<f64> {
        let gaps: Vec<f64> = self
            .records
            .iter()
            .filter(|r| (from..=to).contains(&r.t))
            .map(|r| r.gap)
            .collect();
        if gaps.is_empty() {
            return Err(Error::InvalidParameter(format!("no records in [{from}, {to}]")));
        }
        Ok(gaps.iter().sum::<f64>() / gaps.len() as f64)
    }

    pub fn initial_gap(&self) -> f64 {
        self.records.first().map_or(f64::NAN, |r| r.gap)
    }
}
