//! On-disk formats: edge lists, IDX image files, schedule dumps, CSV traces
//! and the JSON metadata sidecar.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use d2dsgd_core::learner::Dataset;
use d2dsgd_core::scheduling::{AnalogSchedule, DigitalSchedule};
use d2dsgd_core::sim::{Record, RunTrace};
use d2dsgd_core::topology::Topology;
use serde::{Deserialize, Serialize};

/// Parses `i j` lines. `#` starts a comment; an optional `nodes K` line
/// fixes the node count (otherwise the caller decides).
pub fn parse_edge_list(text: &str) -> Result<(Option<usize>, Vec<(usize, usize)>)> {
    let mut nodes = None;
    let mut edges = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["nodes", k] => nodes = Some(k.parse().with_context(|| format!("line {}: bad node count", n + 1))?),
            [i, j] => {
                let e = (i.parse(), j.parse());
                match e {
                    (Ok(i), Ok(j)) => edges.push((i, j)),
                    _ => bail!("line {}: expected two node indices, got {line:?}", n + 1),
                }
            }
            _ => bail!("line {}: expected `i j` or `nodes K`, got {line:?}", n + 1),
        }
    }
    if let Some(k) = nodes {
        if let Some(&(i, j)) = edges.iter().find(|&&(i, j)| i >= k || j >= k) {
            bail!("edge ({i}, {j}) is out of range for {k} nodes");
        }
    }
    Ok((nodes, edges))
}

pub fn write_edge_list(topology: &Topology) -> String {
    let mut out = format!("nodes {}\n", topology.node_count());
    for (i, j) in topology.graph().edges() {
        let _ = writeln!(out, "{i} {j}");
    }
    out
}

fn set(nodes: &[usize]) -> String {
    let items: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

/// One line per slot (1-based), e.g. `slot 2: TX={0,3} mode=BC`.
pub fn dump_digital(schedule: &DigitalSchedule) -> String {
    let mut out = String::new();
    for s in 0..schedule.slot_count() {
        let _ = writeln!(out, "slot {}: TX={} mode=BC", s + 1, set(schedule.transmitters(s)));
    }
    out
}

/// One line per star and slot: the AirComp slot lists the leaves sending
/// to the center, the following broadcast slot lists the center.
pub fn dump_analog(schedule: &AnalogSchedule) -> String {
    let mut out = String::new();
    for (r, stars) in schedule.rounds().iter().enumerate() {
        for s in stars {
            let _ = writeln!(out, "slot {}: TX={} mode=AC center={}", 2 * r + 1, set(&s.leaves), s.center);
        }
        for s in stars {
            let _ = writeln!(out, "slot {}: TX={} mode=BC center={}", 2 * r + 2, set(&[s.center]), s.center);
        }
    }
    out
}

/// An IDX array of unsigned bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxArray> {
    ensure!(bytes.len() >= 4, "IDX header truncated");
    ensure!(bytes[0] == 0 && bytes[1] == 0, "bad IDX magic");
    ensure!(bytes[2] == 0x08, "only unsigned-byte IDX files are supported (type 0x{:02x})", bytes[2]);
    let ndims = bytes[3] as usize;
    let header = 4 + 4 * ndims;
    ensure!(bytes.len() >= header, "IDX header truncated");
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let len: usize = dims.iter().product();
    ensure!(bytes.len() == header + len, "IDX payload has {} bytes, dims need {len}", bytes.len() - header);
    Ok(IdxArray { dims, data: bytes[header..].to_vec() })
}

/// Images scaled to `[0, 1]` with their labels.
pub fn idx_dataset(images: &IdxArray, labels: &IdxArray, classes: usize) -> Result<Dataset> {
    ensure!(labels.dims.len() == 1, "labels must be one-dimensional");
    ensure!(!images.dims.is_empty() && images.dims[0] == labels.dims[0], "image and label counts differ");
    let feature_dim: usize = images.dims[1..].iter().product();
    let features = images.data.iter().map(|&p| p as f64 / 255.0).collect();
    let labels = labels.data.iter().map(|&y| y as usize).collect();
    Ok(Dataset::new(features, labels, feature_dim, classes)?)
}

pub fn load_idx_dataset(images: &Path, labels: &Path, classes: usize) -> Result<Dataset> {
    let read = |p: &Path| -> Result<IdxArray> {
        parse_idx(&std::fs::read(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))
    };
    idx_dataset(&read(images)?, &read(labels)?, classes)
}

#[derive(Debug, Serialize)]
struct TraceRow {
    t: u64,
    f_avg: f64,
    gap: f64,
    consensus_err: f64,
    compression_err: f64,
    accuracy: f64,
    zeta: f64,
    min_rows: usize,
    max_rows: usize,
    min_bits: f64,
    max_bits: f64,
    sum_noise: f64,
    max_energy_ratio: f64,
}

impl From<&Record> for TraceRow {
    fn from(r: &Record) -> Self {
        Self {
            t: r.t,
            f_avg: r.f_avg,
            gap: r.gap,
            consensus_err: r.consensus_err,
            compression_err: r.compression_err,
            accuracy: r.accuracy,
            zeta: r.zeta,
            min_rows: r.min_rows,
            max_rows: r.max_rows,
            min_bits: r.min_bits,
            max_bits: r.max_bits,
            sum_noise: r.sum_noise,
            max_energy_ratio: r.max_energy_ratio,
        }
    }
}

pub fn write_trace<W: Write>(trace: &RunTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &trace.records {
        w.serialize(TraceRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar written next to every trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub version: String,
    /// sha256 of the canonical configuration (after CLI overrides).
    pub config_hash: String,
    pub dataset_hash: String,
    pub seed: u64,
    pub protocol: String,
    pub topology: String,
    pub nodes: usize,
    pub model_dim: usize,
    pub alpha: f64,
    pub delta: f64,
    pub beta: f64,
    pub slots: usize,
    pub f_star: f64,
    pub f_star_cached: bool,
    pub diverged: bool,
    pub last_iteration: u64,
    pub max_noise: f64,
}
