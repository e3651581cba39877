//! TOML experiment configuration. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use d2dsgd_core::protocol::ZetaSchedule;
use d2dsgd_core::sim::{Protocol, Scheduler};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::spec::TopologySpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub iterations: u64,
    #[serde(default = "default_log_every")]
    pub log_every: u64,
    /// Halt once the gap exceeds this multiple of its initial value.
    #[serde(default = "default_divergence")]
    pub divergence_factor: f64,
    pub topology: TopologySection,
    #[serde(default)]
    pub channel: ChannelSection,
    pub protocol: ProtocolSection,
    pub consensus: ConsensusSection,
    pub learner: LearnerSection,
}

fn default_log_every() -> u64 {
    50
}

fn default_divergence() -> f64 {
    1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    /// See [`TopologySpec`].
    pub kind: String,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default)]
    pub placement_seed: u64,
    /// Defaults to `2 / (λ_1 + λ_{K-1})` of the Laplacian.
    pub alpha: Option<f64>,
    /// Keep mixing matrices whose diagonal comes out negative.
    #[serde(default)]
    pub allow_negative_diagonal: bool,
}

fn default_nodes() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// Average received SNR at the reference distance.
    pub snr_db: f64,
    /// Channel uses per communication block `N`.
    pub block_len: usize,
    /// Give every link the reference-distance gain instead of its pathloss.
    #[serde(default)]
    pub equal_snr: bool,
    /// Bits per transmitted real number (32 or 64).
    #[serde(default = "default_bits")]
    pub bits: u32,
}

fn default_bits() -> u32 {
    32
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self { snr_db: 30.0, block_len: 10_000, equal_snr: false, bits: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Ideal,
    Digital,
    Analog,
    None,
}

impl From<Mode> for Protocol {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Ideal => Protocol::Ideal,
            Mode::Digital => Protocol::Digital,
            Mode::Analog => Protocol::Analog,
            Mode::None => Protocol::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerName {
    Coloring,
    Tdma,
    AnalogPairing,
}

impl From<SchedulerName> for Scheduler {
    fn from(s: SchedulerName) -> Self {
        match s {
            SchedulerName::Coloring => Scheduler::Coloring,
            SchedulerName::Tdma => Scheduler::Tdma,
            SchedulerName::AnalogPairing => Scheduler::AnalogPairing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub mode: Mode,
    /// Defaults to pairing for analog links and coloring otherwise.
    pub scheduler: Option<SchedulerName>,
    /// Fixed RLC row count: overrides the bit budget on digital links and
    /// compresses perfect links (which otherwise send everything).
    pub rows: Option<usize>,
}

impl ProtocolSection {
    pub fn scheduler(&self) -> SchedulerName {
        self.scheduler.unwrap_or(match self.mode {
            Mode::Analog => SchedulerName::AnalogPairing,
            _ => SchedulerName::Coloring,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schedule", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConsensusSection {
    Constant { zeta0: f64 },
    /// `ζ0 / (t / d + 1)`
    Decay { zeta0: f64, d: f64 },
    /// `ζ0 / (Ñ^{1/4} t / a' + 1)`
    Adaptive { zeta0: f64, noise: f64, a_prime: f64 },
}

impl From<ConsensusSection> for ZetaSchedule {
    fn from(c: ConsensusSection) -> Self {
        match c {
            ConsensusSection::Constant { zeta0 } => ZetaSchedule::Constant(zeta0),
            ConsensusSection::Decay { zeta0, d } => ZetaSchedule::Decay { zeta0, d },
            ConsensusSection::Adaptive { zeta0, noise, a_prime } => {
                ZetaSchedule::Adaptive { zeta0, noise, a_prime }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSection {
    pub dataset: DatasetSection,
    #[serde(default)]
    pub partition_seed: u64,
    /// Each device lacks up to this many classes.
    #[serde(default = "default_max_missing")]
    pub max_missing: usize,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// `η(t) = lr_b / (t + lr_c)`; `lr_b` defaults to `3.25 / μ`.
    pub lr_b: Option<f64>,
    #[serde(default = "default_lr_c")]
    pub lr_c: f64,
    /// Directory for cached F* values; no caching when absent.
    pub fstar_cache: Option<PathBuf>,
}

fn default_max_missing() -> usize {
    4
}
fn default_batch() -> usize {
    64
}
fn default_momentum() -> f64 {
    0.9
}
fn default_mu() -> f64 {
    0.002
}
fn default_lr_c() -> f64 {
    200.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSection {
    /// Gaussian blobs, a stand-in for image data.
    Synthetic {
        #[serde(default = "default_classes")]
        classes: usize,
        #[serde(default = "default_feature_dim")]
        feature_dim: usize,
        #[serde(default = "default_train_per_class")]
        train_per_class: usize,
        #[serde(default = "default_test_per_class")]
        test_per_class: usize,
        #[serde(default = "default_separation")]
        separation: f64,
        #[serde(default = "default_scale")]
        scale: f64,
        #[serde(default = "default_data_seed")]
        seed: u64,
    },
    /// Unsigned-byte IDX files such as Fashion-MNIST.
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: Option<PathBuf>,
        test_labels: Option<PathBuf>,
        #[serde(default = "default_classes")]
        classes: usize,
    },
}

fn default_classes() -> usize {
    10
}
fn default_feature_dim() -> usize {
    20
}
fn default_train_per_class() -> usize {
    600
}
fn default_test_per_class() -> usize {
    100
}
fn default_separation() -> f64 {
    5.0
}
fn default_scale() -> f64 {
    0.2
}
fn default_data_seed() -> u64 {
    1
}

impl DatasetSection {
    pub fn synthetic(feature_dim: usize) -> Self {
        Self::Synthetic {
            classes: default_classes(),
            feature_dim,
            train_per_class: default_train_per_class(),
            test_per_class: default_test_per_class(),
            separation: default_separation(),
            scale: default_scale(),
            seed: default_data_seed(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn topology_spec(&self) -> Result<TopologySpec> {
        self.topology.kind.parse()
    }

    pub fn validate(&self) -> Result<()> {
        self.topology_spec()?;
        let sched = self.protocol.scheduler();
        match (self.protocol.mode, sched) {
            (Mode::Analog, SchedulerName::AnalogPairing) => {}
            (Mode::Analog, s) => bail!("analog links need the analog_pairing scheduler, not {s:?}"),
            (_, SchedulerName::AnalogPairing) => bail!("analog_pairing only applies to analog links"),
            _ => {}
        }
        if !matches!(self.channel.bits, 32 | 64) {
            bail!("channel.bits must be 32 or 64, got {}", self.channel.bits);
        }
        if self.iterations == 0 || self.log_every == 0 {
            bail!("iterations and log_every must be positive");
        }
        if !(self.learner.mu > 0.0) {
            bail!("learner.mu must be positive");
        }
        Ok(())
    }

    /// sha256 of the canonical TOML rendering, so formatting and comments in
    /// the source file do not change the hash.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        hex(&Sha256::digest(canonical.as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
iterations = 100
[topology]
kind = "chain"
[protocol]
mode = "analog"
[consensus]
schedule = "decay"
zeta0 = 1.0
d = 1000
[learner.dataset]
kind = "synthetic"
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.topology.nodes, 20);
        assert_eq!(c.protocol.scheduler(), SchedulerName::AnalogPairing);
        assert_eq!(c.learner.batch, 64);
        assert_eq!(c.learner.dataset, DatasetSection::synthetic(20));
        assert_eq!(c.consensus, ConsensusSection::Decay { zeta0: 1.0, d: 1000.0 });
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for (from, to) in [
            ("iterations = 100", "iterations = 100\nfoo = 1"),
            ("kind = \"chain\"", "kind = \"chain\"\nrows = 4"),
            ("d = 1000", "d = 1000\na_prime = 3"),
            ("kind = \"synthetic\"", "kind = \"synthetic\"\nsamples = 3"),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(ExperimentConfig::from_toml(&text).is_err(), "{to}");
        }
    }

    #[test]
    fn incompatible_scheduler_is_rejected() {
        let text = MINIMAL.replace("mode = \"analog\"", "mode = \"analog\"\nscheduler = \"tdma\"");
        assert!(ExperimentConfig::from_toml(&text).is_err());
        let text = MINIMAL.replace("mode = \"analog\"", "mode = \"digital\"\nscheduler = \"analog_pairing\"");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn hash_ignores_formatting_but_not_values() {
        let a = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let b = ExperimentConfig::from_toml(&format!("# comment\n{MINIMAL}")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.seed = 1;
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
