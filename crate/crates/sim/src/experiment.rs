//! From a configuration to a finished run with its trace files.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use d2dsgd_core::channel::{equal_snr_override, ChannelConfig};
use d2dsgd_core::learner::{
    estimate_fstar, partition_noniid, synthetic_blobs, Dataset, FStarConfig, LearningRate, Model,
};
use d2dsgd_core::protocol::digital::RowPolicy;
use d2dsgd_core::rlc::Quantizer;
use d2dsgd_core::scheduling;
use d2dsgd_core::sim::{self, Problem, RunConfig, RunTrace};
use d2dsgd_core::topology::{default_alpha, mixing_matrix_with, DiagonalPolicy, MixingMatrix, Topology};

use crate::cache::{dataset_hash, CacheKey, FStarCache};
use crate::config::{DatasetSection, ExperimentConfig, Mode, SchedulerName};
use crate::formats::{self, RunMetadata};

/// Training and (optional) test data.
pub fn load_dataset(section: &DatasetSection, base: &Path) -> Result<(Dataset, Option<Dataset>)> {
    match section {
        &DatasetSection::Synthetic {
            classes,
            feature_dim,
            train_per_class,
            test_per_class,
            separation,
            scale,
            seed,
        } => {
            let train = synthetic_blobs(classes, feature_dim, train_per_class, separation, scale, seed, 0)?;
            let test = (test_per_class > 0)
                .then(|| synthetic_blobs(classes, feature_dim, test_per_class, separation, scale, seed, 1))
                .transpose()?;
            Ok((train, test))
        }
        DatasetSection::Idx { train_images, train_labels, test_images, test_labels, classes } => {
            let p = |q: &Path| if q.is_absolute() { q.to_path_buf() } else { base.join(q) };
            let train = formats::load_idx_dataset(&p(train_images), &p(train_labels), *classes)?;
            let test = match (test_images, test_labels) {
                (Some(i), Some(l)) => Some(formats::load_idx_dataset(&p(i), &p(l), *classes)?),
                (None, None) => None,
                _ => anyhow::bail!("test_images and test_labels go together"),
            };
            Ok((train, test))
        }
    }
}

/// Everything a run trains on, shared by runs that differ only in the link.
pub struct Prepared {
    pub topology: Topology,
    pub mixing: MixingMatrix,
    pub shards: Vec<Dataset>,
    pub test: Option<Dataset>,
    pub f_star: f64,
    pub f_star_cached: bool,
    pub dataset_hash: String,
}

impl Prepared {
    pub fn problem(&self) -> Problem<'_> {
        Problem {
            topology: &self.topology,
            mixing: &self.mixing,
            shards: &self.shards,
            test: self.test.as_ref(),
            f_star: self.f_star,
        }
    }

    pub fn model_dim(&self) -> usize {
        Model::for_dataset(&self.shards[0]).dim()
    }
}

pub fn build_mixing(topology: &Topology, alpha: Option<f64>, allow_negative: bool) -> Result<MixingMatrix> {
    let alpha = alpha.unwrap_or_else(|| default_alpha(topology));
    let policy = if allow_negative { DiagonalPolicy::Allow } else { DiagonalPolicy::Reject };
    Ok(mixing_matrix_with(topology, alpha, policy)?)
}

/// Builds the graph, loads and partitions the data and finds F*, through
/// the cache when one is configured.
pub fn prepare(cfg: &ExperimentConfig, base: &Path) -> Result<Prepared> {
    let t = &cfg.topology;
    let topology = cfg.topology_spec()?.build(t.nodes, t.placement_seed, base)?;
    let mixing = build_mixing(&topology, t.alpha, t.allow_negative_diagonal)?;
    let (train, test) = load_dataset(&cfg.learner.dataset, base)?;
    let part = partition_noniid(&train, topology.node_count(), cfg.learner.max_missing, cfg.learner.partition_seed)?;
    let hash = dataset_hash(&train);
    let fs_cfg = FStarConfig { mu: cfg.learner.mu, ..FStarConfig::default() };
    let solve = || estimate_fstar(&part.shards, &fs_cfg).context("estimating F*");
    let (f_star, f_star_cached) = match &cfg.learner.fstar_cache {
        Some(dir) => {
            let dir = if dir.is_absolute() { dir.clone() } else { base.join(dir) };
            let key = CacheKey::new(hash.clone(), cfg.learner.partition_seed, cfg.learner.mu);
            FStarCache::new(dir).get_or_compute(&key, solve)?
        }
        None => (solve()?.value, false),
    };
    Ok(Prepared { topology, mixing, shards: part.shards, test, f_star, f_star_cached, dataset_hash: hash })
}

pub fn channel_config(cfg: &ExperimentConfig) -> ChannelConfig {
    let c = ChannelConfig::standard(cfg.channel.snr_db, cfg.channel.block_len);
    if cfg.channel.equal_snr {
        equal_snr_override(&c, cfg.channel.snr_db)
    } else {
        c
    }
}

pub fn run_config(cfg: &ExperimentConfig) -> Result<RunConfig> {
    let mu = cfg.learner.mu;
    Ok(RunConfig {
        protocol: cfg.protocol.mode.into(),
        scheduler: cfg.protocol.scheduler().into(),
        channel: channel_config(cfg),
        quantizer: Quantizer::from_bits(cfg.channel.bits)?,
        ideal_rows: cfg.protocol.rows,
        digital_rows: cfg.protocol.rows.map_or(RowPolicy::Budget, RowPolicy::Fixed),
        lr: LearningRate { b: cfg.learner.lr_b.unwrap_or(3.25 / mu), c: cfg.learner.lr_c },
        zeta: cfg.consensus.into(),
        momentum: cfg.learner.momentum,
        mu,
        batch: cfg.learner.batch,
        iterations: cfg.iterations,
        seed: cfg.seed,
        log_every: cfg.log_every,
        divergence_factor: cfg.divergence_factor,
    })
}

pub fn run_prepared(cfg: &ExperimentConfig, prepared: &Prepared) -> Result<RunTrace> {
    Ok(sim::run(&run_config(cfg)?, &prepared.problem())?)
}

pub fn slot_count(cfg: &ExperimentConfig, topology: &Topology) -> usize {
    match (cfg.protocol.mode, cfg.protocol.scheduler()) {
        (Mode::Digital, SchedulerName::Tdma) => scheduling::tdma_schedule(topology).slot_count(),
        (Mode::Digital, _) => scheduling::digital_schedule(topology).slot_count(),
        (Mode::Analog, _) => scheduling::analog_schedule(topology).slot_count(),
        _ => 0,
    }
}

pub fn metadata(cfg: &ExperimentConfig, prepared: &Prepared, trace: &RunTrace) -> RunMetadata {
    RunMetadata {
        version: crate::version(),
        config_hash: cfg.hash(),
        dataset_hash: prepared.dataset_hash.clone(),
        seed: cfg.seed,
        protocol: format!("{:?}", cfg.protocol.mode).to_lowercase(),
        topology: cfg.topology.kind.clone(),
        nodes: prepared.topology.node_count(),
        model_dim: prepared.model_dim(),
        alpha: prepared.mixing.alpha(),
        delta: prepared.mixing.spectral_gap(),
        beta: prepared.mixing.beta(),
        slots: slot_count(cfg, &prepared.topology),
        f_star: prepared.f_star,
        f_star_cached: prepared.f_star_cached,
        diverged: trace.diverged,
        last_iteration: trace.records.last().map_or(0, |r| r.t),
        max_noise: trace.max_noise,
    }
}

/// Writes `trace.csv` and `run.json` into `out`.
pub fn write_outputs(out: &Path, cfg: &ExperimentConfig, prepared: &Prepared, trace: &RunTrace) -> Result<RunMetadata> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    formats::write_trace(trace, BufWriter::new(File::create(out.join("trace.csv"))?))?;
    let meta = metadata(cfg, prepared, trace);
    std::fs::write(out.join("run.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(meta)
}
