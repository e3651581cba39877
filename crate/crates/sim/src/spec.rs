//! Small textual specs shared by the config file and the command line.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use d2dsgd_core::topology::{build_topology, place_nodes, Blockage, Topology, TopologyKind};

use crate::formats;

/// `complete`, `star`, `chain`, `grid:RxC`, `torus:RxC`, `geometric`,
/// `geometric:<meters>` or `edges:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologySpec {
    Builtin(TopologyKind),
    EdgeFile(PathBuf),
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let (r, c) = s.split_once('x').ok_or_else(|| anyhow!("expected RxC, got {s:?}"))?;
    Ok((r.trim().parse()?, c.trim().parse()?))
}

impl FromStr for TopologySpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let kind = match (name, arg) {
            ("complete", None) => TopologyKind::Complete,
            ("star", None) => TopologyKind::Star,
            ("chain", None) => TopologyKind::Chain,
            ("grid", Some(d)) => {
                let (rows, cols) = parse_dims(d)?;
                TopologyKind::Grid { rows, cols }
            }
            ("torus", Some(d)) => {
                let (rows, cols) = parse_dims(d)?;
                TopologyKind::GridTorus { rows, cols }
            }
            ("geometric", None) => TopologyKind::Geometric(Blockage::Unblocked),
            ("geometric", Some(m)) => TopologyKind::Geometric(Blockage::DistanceThreshold(
                m.parse().with_context(|| format!("bad distance threshold {m:?}"))?,
            )),
            ("edges", Some(p)) => return Ok(Self::EdgeFile(PathBuf::from(p))),
            _ => bail!("unknown topology {s:?}"),
        };
        Ok(Self::Builtin(kind))
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Builtin(TopologyKind::Complete) => write!(f, "complete"),
            Self::Builtin(TopologyKind::Star) => write!(f, "star"),
            Self::Builtin(TopologyKind::Chain) => write!(f, "chain"),
            Self::Builtin(TopologyKind::Grid { rows, cols }) => write!(f, "grid:{rows}x{cols}"),
            Self::Builtin(TopologyKind::GridTorus { rows, cols }) => write!(f, "torus:{rows}x{cols}"),
            Self::Builtin(TopologyKind::Geometric(Blockage::DistanceThreshold(m))) => {
                write!(f, "geometric:{m}")
            }
            Self::Builtin(TopologyKind::Geometric(_)) => write!(f, "geometric"),
            Self::EdgeFile(p) => write!(f, "edges:{}", p.display()),
        }
    }
}

impl TopologySpec {
    /// Builds the graph on `nodes` devices and, when the graph carries no
    /// geometry of its own, places the devices at random with
    /// `placement_seed` so that pathloss is defined. Relative edge-file
    /// paths resolve against `base`.
    pub fn build(&self, nodes: usize, placement_seed: u64, base: &Path) -> Result<Topology> {
        let topo = match self {
            Self::Builtin(kind) => build_topology(kind, nodes, placement_seed)?,
            Self::EdgeFile(p) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading edge list {}", path.display()))?;
                let (k, edges) = formats::parse_edge_list(&text)?;
                let k = k.unwrap_or(nodes);
                if k != nodes {
                    bail!("edge list declares {k} nodes but {nodes} were requested");
                }
                build_topology(&TopologyKind::Geometric(Blockage::Edges(edges)), k, placement_seed)?
            }
        };
        if topo.positions().is_some() {
            return Ok(topo);
        }
        let k = topo.node_count();
        Ok(topo.with_positions(place_nodes(k, placement_seed))?)
    }
}

/// `start:step:stop` (inclusive) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let (start, step, stop): (f64, f64, f64) = (parts[0].parse()?, parts[1].parse()?, parts[2].parse()?);
        if !(step > 0.0) || stop < start {
            bail!("grid {s:?} needs a positive step and stop >= start");
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + i as f64 * step).collect());
    }
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad grid value {x:?}")))
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        bail!("empty grid");
    }
    Ok(v)
}

/// Like [`parse_grid`] but for positive integer horizons.
pub fn parse_horizons(s: &str) -> Result<Vec<u64>> {
    parse_grid(s)?
        .into_iter()
        .map(|t| {
            if t >= 1.0 && t.fract() == 0.0 {
                Ok(t as u64)
            } else {
                Err(anyhow!("horizon {t} is not a positive integer"))
            }
        })
        .collect()
}
