//! Connectivity graphs, node placement and mixing matrices.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::linalg;
use crate::rng::{self, Purpose};
use crate::{Error, Result};

/// Undirected simple graph stored as sorted adjacency lists.
///
/// No connectivity requirement; residual graphs built by the schedulers
/// are usually disconnected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn empty(nodes: usize) -> Self {
        Self { adj: vec![Vec::new(); nodes] }
    }

    pub fn from_edges(nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(nodes);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    /// Adds `(i, j)`; duplicates are ignored, self-loops rejected.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        let n = self.adj.len();
        if i >= n || j >= n {
            return Err(Error::InvalidTopology(format!(
                "edge ({i}, {j}) out of range for {n} nodes"
            )));
        }
        if i == j {
            return Err(Error::InvalidTopology(format!("self-loop at node {i}")));
        }
        if let Err(pos) = self.adj[i].binary_search(&j) {
            self.adj[i].insert(pos, j);
        }
        if let Err(pos) = self.adj[j].binary_search(&i) {
            self.adj[j].insert(pos, i);
        }
        Ok(())
    }

    pub fn remove_node_edges(&mut self, i: usize) {
        for j in core::mem::take(&mut self.adj[i]) {
            if let Ok(pos) = self.adj[j].binary_search(&i) {
                self.adj[j].remove(pos);
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&j).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Number of nodes reachable from node 0.
    pub fn reachable_from_first(&self) -> usize {
        let n = self.adj.len();
        if n == 0 {
            return 0;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &j in &self.adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.reachable_from_first() == self.adj.len()
    }

    /// Combinatorial Laplacian `D - A`, row-major.
    pub fn laplacian(&self) -> Vec<f64> {
        let n = self.adj.len();
        let mut l = vec![0.0; n * n];
        for (i, nb) in self.adj.iter().enumerate() {
            l[i * n + i] = nb.len() as f64;
            for &j in nb {
                l[i * n + j] = -1.0;
            }
        }
        l
    }
}

/// How links of a geometric placement are declared unblocked.
#[derive(Debug, Clone, PartialEq)]
pub enum Blockage {
    /// Every pair of devices can communicate.
    Unblocked,
    /// Pairs closer than the threshold (meters) are unblocked.
    DistanceThreshold(f64),
    /// Only the listed pairs are unblocked.
    Edges(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopologyKind {
    Complete,
    Grid { rows: usize, cols: usize },
    GridTorus { rows: usize, cols: usize },
    Star,
    Chain,
    Geometric(Blockage),
}

/// Connected graph of devices, optionally with planar positions in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    graph: Graph,
    positions: Option<Vec<[f64; 2]>>,
}

impl Topology {
    pub fn new(graph: Graph, positions: Option<Vec<[f64; 2]>>) -> Result<Self> {
        let n = graph.node_count();
        if n < 2 {
            return Err(Error::InvalidTopology(format!("need at least 2 nodes, got {n}")));
        }
        if let Some(p) = &positions {
            if p.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.len() });
            }
        }
        let reached = graph.reachable_from_first();
        if reached != n {
            return Err(Error::Disconnected { reached, nodes: n });
        }
        Ok(Self { graph, positions })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        self.graph.neighbors(i)
    }

    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        self.positions.as_deref()
    }

    /// Attaches (or replaces) node positions.
    pub fn with_positions(mut self, positions: Vec<[f64; 2]>) -> Result<Self> {
        if positions.len() != self.node_count() {
            return Err(Error::DimensionMismatch { expected: self.node_count(), got: positions.len() });
        }
        self.positions = Some(positions);
        Ok(self)
    }

    pub fn distance(&self, i: usize, j: usize) -> Option<f64> {
        self.positions.as_ref().map(|p| {
            let dx = p[i][0] - p[j][0];
            let dy = p[i][1] - p[j][1];
            libm::sqrt(dx * dx + dy * dy)
        })
    }
}

/// Random placement around the origin: radius uniform in [50, 200] m,
/// angle uniform in [0, 2π).
pub fn place_nodes(k: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = rng::stream(seed, Purpose::Placement, k as u64, 0);
    (0..k)
        .map(|_| {
            let r: f64 = rng.random_range(50.0..=200.0);
            let a: f64 = rng.random_range(0.0..2.0 * PI);
            [r * libm::cos(a), r * libm::sin(a)]
        })
        .collect()
}

fn grid_graph(rows: usize, cols: usize, k: usize, wrap: bool) -> Result<Graph> {
    if rows == 0 || cols == 0 || rows * cols != k {
        return Err(Error::InvalidTopology(format!(
            "grid {rows}x{cols} does not have {k} nodes"
        )));
    }
    let mut g = Graph::empty(k);
    let id = |r: usize, c: usize| r * cols + c;
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                g.add_edge(id(r, c), id(r, c + 1))?;
            } else if wrap && cols > 2 {
                g.add_edge(id(r, c), id(r, 0))?;
            }
            if r + 1 < rows {
                g.add_edge(id(r, c), id(r + 1, c))?;
            } else if wrap && rows > 2 {
                g.add_edge(id(r, c), id(0, c))?;
            }
        }
    }
    Ok(g)
}

/// Builds one of the standard topologies on `k` nodes.
///
/// Only the geometric kind consumes `seed` (for the placement).
pub fn build_topology(kind: &TopologyKind, k: usize, seed: u64) -> Result<Topology> {
    if k < 2 {
        return Err(Error::InvalidTopology(format!("need at least 2 nodes, got {k}")));
    }
    match kind {
        TopologyKind::Complete => {
            let mut g = Graph::empty(k);
            for i in 0..k {
                for j in (i + 1)..k {
                    g.add_edge(i, j)?;
                }
            }
            Topology::new(g, None)
        }
        TopologyKind::Grid { rows, cols } => Topology::new(grid_graph(*rows, *cols, k, false)?, None),
        TopologyKind::GridTorus { rows, cols } => {
            Topology::new(grid_graph(*rows, *cols, k, true)?, None)
        }
        TopologyKind::Star => {
            let mut g = Graph::empty(k);
            for j in 1..k {
                g.add_edge(0, j)?;
            }
            Topology::new(g, None)
        }
        TopologyKind::Chain => {
            let mut g = Graph::empty(k);
            for i in 1..k {
                g.add_edge(i - 1, i)?;
            }
            Topology::new(g, None)
        }
        TopologyKind::Geometric(blockage) => {
            let pos = place_nodes(k, seed);
            let mut g = Graph::empty(k);
            match blockage {
                Blockage::Unblocked => {
                    for i in 0..k {
                        for j in (i + 1)..k {
                            g.add_edge(i, j)?;
                        }
                    }
                }
                Blockage::DistanceThreshold(max) => {
                    for i in 0..k {
                        for j in (i + 1)..k {
                            let dx = pos[i][0] - pos[j][0];
                            let dy = pos[i][1] - pos[j][1];
                            if libm::sqrt(dx * dx + dy * dy) <= *max {
                                g.add_edge(i, j)?;
                            }
                        }
                    }
                }
                Blockage::Edges(edges) => {
                    for &(i, j) in edges {
                        g.add_edge(i, j)?;
                    }
                }
            }
            Topology::new(g, Some(pos))
        }
    }
}

/// Laplacian eigenvalue choice `2 / (λ_1(L) + λ_{K-1}(L))`.
///
/// `λ_1` is the largest Laplacian eigenvalue and `λ_{K-1}` the smallest
/// nonzero one for a connected graph.
pub fn default_alpha(topology: &Topology) -> f64 {
    let k = topology.node_count();
    let eig = linalg::symmetric_eigenvalues(&topology.graph().laplacian(), k);
    2.0 / (eig[0] + eig[k - 2])
}

/// What to do when `1 - |N_i| α` comes out negative.
///
/// The Laplacian choice of α overshoots on irregular graphs such as the
/// planar grid (corner nodes have degree 2, interior ones 4). The weights
/// still form a symmetric, doubly stochastic matrix with a positive
/// spectral gap, so some analyses keep it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalPolicy {
    #[default]
    Reject,
    Allow,
}

/// Symmetric doubly stochastic mixing matrix with its spectral metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    k: usize,
    w: Vec<f64>,
    alpha: f64,
    delta: f64,
    beta: f64,
}

impl MixingMatrix {
    /// Validates an arbitrary symmetric doubly stochastic matrix.
    pub fn from_weights(w: Vec<f64>, k: usize, alpha: f64) -> Result<Self> {
        Self::validated(w, k, alpha, DiagonalPolicy::Reject)
    }

    fn validated(w: Vec<f64>, k: usize, alpha: f64, policy: DiagonalPolicy) -> Result<Self> {
        if w.len() != k * k {
            return Err(Error::DimensionMismatch { expected: k * k, got: w.len() });
        }
        let (asym, row, col) = linalg::asymmetry(&w, k);
        if asym > 1e-12 {
            return Err(Error::NotSymmetric { row, col });
        }
        for i in 0..k {
            let row = &w[i * k..(i + 1) * k];
            for (j, &v) in row.iter().enumerate() {
                if v >= 0.0 {
                    continue;
                }
                if i != j {
                    return Err(Error::InvalidParameter(format!("negative weight at ({i}, {j})")));
                }
                if policy == DiagonalPolicy::Reject {
                    return Err(Error::NegativeDiagonal { node: i, value: v });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::NotStochastic { row: i, sum });
            }
        }
        let delta = spectral_gap(&w, k)?;
        if delta <= 0.0 {
            return Err(Error::NoSpectralGap(delta));
        }
        let beta = beta_norm(&w, k)?;
        Ok(Self { k, w, alpha, delta, beta })
    }

    pub fn node_count(&self) -> usize {
        self.k
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.k..(i + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `δ = 1 - ‖11ᵀ/K - W‖₂`
    pub fn spectral_gap(&self) -> f64 {
        self.delta
    }

    /// `β = ‖I - W‖₂`
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// `w_ij = α` on edges, `w_ii = 1 - |N_i| α`; negative diagonals are rejected.
pub fn mixing_matrix(topology: &Topology, alpha: f64) -> Result<MixingMatrix> {
    mixing_matrix_with(topology, alpha, DiagonalPolicy::Reject)
}

pub fn mixing_matrix_with(
    topology: &Topology,
    alpha: f64,
    policy: DiagonalPolicy,
) -> Result<MixingMatrix> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let k = topology.node_count();
    let mut w = vec![0.0; k * k];
    for i in 0..k {
        let nb = topology.neighbors(i);
        let mut diag = 1.0 - nb.len() as f64 * alpha;
        if diag < 0.0 && diag > -1e-12 {
            diag = 0.0;
        }
        w[i * k + i] = diag;
        for &j in nb {
            w[i * k + j] = alpha;
        }
    }
    MixingMatrix::validated(w, k, alpha, policy)
}

fn require_symmetric(w: &[f64], k: usize) -> Result<()> {
    if w.len() != k * k {
        return Err(Error::DimensionMismatch { expected: k * k, got: w.len() });
    }
    let (asym, row, col) = linalg::asymmetry(w, k);
    if asym > 1e-12 {
        return Err(Error::NotSymmetric { row, col });
    }
    Ok(())
}

/// `1 - ‖11ᵀ/K - W‖₂` for a symmetric `W`.
pub fn spectral_gap(w: &[f64], k: usize) -> Result<f64> {
    require_symmetric(w, k)?;
    let inv = 1.0 / k as f64;
    let diff: Vec<f64> = w.iter().map(|v| inv - v).collect();
    Ok(1.0 - linalg::symmetric_spectral_norm(&diff, k))
}

/// `‖I - W‖₂` for a symmetric `W`.
pub fn beta_norm(w: &[f64], k: usize) -> Result<f64> {
    require_symmetric(w, k)?;
    let mut diff: Vec<f64> = w.iter().map(|v| -v).collect();
    for i in 0..k {
        diff[i * k + i] += 1.0;
    }
    Ok(linalg::symmetric_spectral_norm(&diff, k))
}
