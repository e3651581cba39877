//! Interference-free slot assignment.
//!
//! Digital broadcast colors the auxiliary graph (edges plus common-neighbor
//! pairs) so that no receiver hears two transmitters at once. Analog
//! transmission repeatedly picks non-interfering star sub-networks of the
//! residual graph: one AirComp slot where the leaves transmit to their
//! center, then one broadcast slot where the center answers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::topology::{Graph, Topology};
use crate::{Error, Result};

/// Adds an edge between every pair of nodes sharing a neighbor.
pub fn auxiliary_graph(graph: &Graph) -> Graph {
    let n = graph.node_count();
    let mut aux = graph.clone();
    for c in 0..n {
        let nb = graph.neighbors(c);
        for (x, &i) in nb.iter().enumerate() {
            for &j in &nb[x + 1..] {
                aux.add_edge(i, j).expect("neighbors are distinct and in range");
            }
        }
    }
    aux
}

/// First-fit coloring, visiting nodes by descending degree then index.
pub fn greedy_color(graph: &Graph) -> Vec<usize> {
    let n = graph.node_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (core::cmp::Reverse(graph.degree(i)), i));
    let mut color = vec![usize::MAX; n];
    let mut used = Vec::new();
    for i in order {
        used.clear();
        used.extend(graph.neighbors(i).iter().map(|&j| color[j]).filter(|&c| c != usize::MAX));
        used.sort_unstable();
        used.dedup();
        let c = used.iter().enumerate().find(|&(k, &c)| k != c).map_or(used.len(), |(k, _)| k);
        color[i] = c;
    }
    color
}

/// One broadcast slot per color class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitalSchedule {
    slot_of: Vec<usize>,
    slots: Vec<Vec<usize>>,
}

impl DigitalSchedule {
    /// Builds a schedule from a per-node slot index.
    pub fn from_slots(slot_of: Vec<usize>) -> Self {
        let m = slot_of.iter().map(|s| s + 1).max().unwrap_or(0);
        let mut slots = vec![Vec::new(); m];
        for (i, &s) in slot_of.iter().enumerate() {
            slots[s].push(i);
        }
        Self { slot_of, slots }
    }

    /// `M`
    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn node_count(&self) -> usize {
        self.slot_of.len()
    }

    /// 0-based slot in which node `i` broadcasts.
    pub fn slot_of(&self, i: usize) -> usize {
        self.slot_of[i]
    }

    pub fn transmitters(&self, slot: usize) -> &[usize] {
        &self.slots[slot]
    }
}

/// Coloring of the auxiliary graph.
pub fn digital_schedule(topology: &Topology) -> DigitalSchedule {
    DigitalSchedule::from_slots(greedy_color(&auxiliary_graph(topology.graph())))
}

/// Node `i` alone in slot `i`.
pub fn tdma_schedule(topology: &Topology) -> DigitalSchedule {
    DigitalSchedule::from_slots((0..topology.node_count()).collect())
}

/// Checks that every slot's transmitters are independent in the auxiliary graph.
pub fn check_digital(topology: &Topology, schedule: &DigitalSchedule) -> Result<()> {
    let k = topology.node_count();
    if schedule.node_count() != k {
        return Err(Error::ScheduleMismatch(format!(
            "schedule covers {} nodes, topology has {k}",
            schedule.node_count()
        )));
    }
    if schedule.slots.iter().any(Vec::is_empty) {
        return Err(Error::ScheduleMismatch("empty slot".into()));
    }
    let aux = auxiliary_graph(topology.graph());
    for (i, j) in aux.edges() {
        if schedule.slot_of(i) == schedule.slot_of(j) {
            return Err(Error::ScheduleMismatch(format!(
                "nodes {i} and {j} conflict in slot {}",
                schedule.slot_of(i)
            )));
        }
    }
    Ok(())
}

/// A center and the leaves it serves in one pair of slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Star {
    pub center: usize,
    pub leaves: Vec<usize>,
}

/// Pairs of slots; pair `r` (0-based) occupies slots `2r + 1` (AirComp)
/// and `2r + 2` (broadcast) in 1-based numbering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalogSchedule {
    k: usize,
    rounds: Vec<Vec<Star>>,
}

/// Role of a node in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    AirCompTx,
    AirCompRx,
    BroadcastTx,
    BroadcastRx,
}

impl AnalogSchedule {
    pub fn new(k: usize, rounds: Vec<Vec<Star>>) -> Self {
        Self { k, rounds }
    }

    pub fn node_count(&self) -> usize {
        self.k
    }

    /// `M = 2n`
    pub fn slot_count(&self) -> usize {
        2 * self.rounds.len()
    }

    pub fn rounds(&self) -> &[Vec<Star>] {
        &self.rounds
    }

    /// 1-based slots in which node `i` plays `role`.
    pub fn slots(&self, i: usize, role: Role) -> Vec<usize> {
        let mut out = Vec::new();
        for (r, stars) in self.rounds.iter().enumerate() {
            let (odd, even) = (2 * r + 1, 2 * r + 2);
            for s in stars {
                let slot = match role {
                    Role::AirCompRx if s.center == i => Some(odd),
                    Role::BroadcastTx if s.center == i => Some(even),
                    Role::AirCompTx if s.leaves.contains(&i) => Some(odd),
                    Role::BroadcastRx if s.leaves.contains(&i) => Some(even),
                    _ => None,
                };
                out.extend(slot);
            }
        }
        out
    }

    /// `|S_i^Tx|`: slots in which node `i` transmits anything.
    pub fn tx_slot_count(&self, i: usize) -> usize {
        self.slots(i, Role::AirCompTx).len() + self.slots(i, Role::BroadcastTx).len()
    }
}

/// Star-pairing schedule.
///
/// Each round colors the residual graph greedily and takes the color class
/// with the largest degree sum (smallest color on ties). Centers of that
/// class whose neighborhoods would overlap an already accepted center are
/// deferred to a later round, so a leaf never serves two centers in the
/// same slot. A residual component that is a single edge is oriented so
/// the lower index transmits first.
pub fn analog_schedule(topology: &Topology) -> AnalogSchedule {
    let k = topology.node_count();
    let mut residual = topology.graph().clone();
    let mut rounds = Vec::new();
    while residual.edge_count() > 0 {
        let color = greedy_color(&residual);
        let ncolors = color.iter().copied().max().map_or(0, |c| c + 1);
        let mut degree_sum = vec![0usize; ncolors];
        for i in 0..k {
            degree_sum[color[i]] += residual.degree(i);
        }
        let best = (0..ncolors)
            .max_by_key(|&c| (degree_sum[c], core::cmp::Reverse(c)))
            .expect("a graph with edges has a color");

        let mut busy = vec![false; k];
        let mut stars = Vec::new();
        for c in (0..k).filter(|&i| color[i] == best && residual.degree(i) > 0) {
            let nb = residual.neighbors(c);
            if busy[c] || nb.iter().any(|&j| busy[j]) {
                continue;
            }
            busy[c] = true;
            nb.iter().for_each(|&j| busy[j] = true);
            let mut star = Star { center: c, leaves: nb.to_vec() };
            if let [leaf] = star.leaves[..] {
                if residual.degree(leaf) == 1 && leaf > c {
                    star = Star { center: leaf, leaves: vec![c] };
                }
            }
            stars.push(star);
        }
        for s in &stars {
            residual.remove_node_edges(s.center);
        }
        rounds.push(stars);
    }
    AnalogSchedule { k, rounds }
}

/// Verifies coverage, disjointness and interference freedom.
pub fn check_analog(topology: &Topology, schedule: &AnalogSchedule) -> Result<()> {
    let k = topology.node_count();
    if schedule.node_count() != k {
        return Err(Error::ScheduleMismatch(format!(
            "schedule covers {} nodes, topology has {k}",
            schedule.node_count()
        )));
    }
    let g = topology.graph();
    // served[i * k + j]: transmissions from i that reach j
    let mut served = vec![0usize; k * k];
    for (r, stars) in schedule.rounds.iter().enumerate() {
        let mut busy = vec![false; k];
        for s in stars {
            for &node in core::iter::once(&s.center).chain(&s.leaves) {
                if busy[node] {
                    return Err(Error::ScheduleMismatch(format!(
                        "node {node} appears in two stars of slot pair {}",
                        r + 1
                    )));
                }
                busy[node] = true;
            }
            for &leaf in &s.leaves {
                if !g.has_edge(s.center, leaf) {
                    return Err(Error::ScheduleMismatch(format!(
                        "star edge ({}, {leaf}) is not a link",
                        s.center
                    )));
                }
                served[leaf * k + s.center] += 1;
                served[s.center * k + leaf] += 1;
            }
        }
        // A blocked pair cannot interfere; a linked pair of active nodes
        // must belong to the same star or be two leaves (both transmit or
        // both receive in each slot).
        for a in stars {
            for b in stars {
                if a.center != b.center && g.has_edge(a.center, b.center) {
                    return Err(Error::ScheduleMismatch(format!(
                        "centers {} and {} are linked",
                        a.center, b.center
                    )));
                }
                if let Some(&leaf) = b.leaves.iter().find(|&&l| a.center != b.center && g.has_edge(a.center, l)) {
                    return Err(Error::ScheduleMismatch(format!(
                        "center {} hears leaf {leaf} of center {}",
                        a.center, b.center
                    )));
                }
            }
        }
    }
    for (i, j) in g.edges() {
        for (a, b) in [(i, j), (j, i)] {
            if served[a * k + b] != 1 {
                return Err(Error::ScheduleMismatch(format!(
                    "link {a} -> {b} served {} times",
                    served[a * k + b]
                )));
            }
        }
    }
    for i in 0..k {
        if schedule.slots(i, Role::AirCompRx).len() > 1 {
            return Err(Error::ScheduleMismatch(format!("node {i} is a center twice")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_topology, TopologyKind};

    fn topo(kind: TopologyKind, k: usize) -> Topology {
        build_topology(&kind, k, 0).unwrap()
    }

    #[test]
    fn auxiliary_examples() {
        let chain = topo(TopologyKind::Chain, 3);
        let aux = auxiliary_graph(chain.graph());
        assert_eq!(aux.edge_count(), 3);
        let star = topo(TopologyKind::Star, 20);
        assert_eq!(auxiliary_graph(star.graph()).edge_count(), 190);
        let complete = topo(TopologyKind::Complete, 6);
        assert_eq!(&auxiliary_graph(complete.graph()), complete.graph());
    }

    #[test]
    fn coloring_examples() {
        let complete = topo(TopologyKind::Complete, 20);
        assert_eq!(digital_schedule(&complete).slot_count(), 20);
        assert_eq!(digital_schedule(&topo(TopologyKind::Chain, 3)).slot_count(), 3);
        assert_eq!(digital_schedule(&topo(TopologyKind::Star, 20)).slot_count(), 20);
        let tdma = tdma_schedule(&complete);
        assert_eq!(tdma.slot_count(), 20);
        assert!((0..20).all(|i| tdma.slot_of(i) == i && tdma.transmitters(i) == [i]));
    }

    #[test]
    fn digital_checker_rejects_conflict() {
        let chain = topo(TopologyKind::Chain, 3);
        let bad = DigitalSchedule::from_slots(vec![0, 1, 0]);
        assert!(matches!(check_digital(&chain, &bad), Err(Error::ScheduleMismatch(_))));
        assert!(check_digital(&chain, &digital_schedule(&chain)).is_ok());
    }

    #[test]
    fn star_analog_is_one_pair() {
        let star = topo(TopologyKind::Star, 20);
        let s = analog_schedule(&star);
        assert_eq!(s.slot_count(), 2);
        assert_eq!(s.rounds()[0][0].center, 0);
        for leaf in 1..20 {
            assert_eq!(s.slots(leaf, Role::AirCompTx), [1]);
            assert_eq!(s.slots(leaf, Role::BroadcastRx), [2]);
        }
        check_analog(&star, &s).unwrap();
    }

    #[test]
    fn chain3_center_is_middle() {
        let chain = topo(TopologyKind::Chain, 3);
        let s = analog_schedule(&chain);
        assert_eq!(s.rounds(), [vec![Star { center: 1, leaves: vec![0, 2] }]]);
    }

    #[test]
    fn isolated_pair_lower_index_transmits_first() {
        let t = topo(TopologyKind::Chain, 2);
        let s = analog_schedule(&t);
        assert_eq!(s.slots(0, Role::AirCompTx), [1]);
        assert_eq!(s.slots(1, Role::BroadcastTx), [2]);
        check_analog(&t, &s).unwrap();
    }

    #[test]
    fn analog_checker_rejects_double_cover() {
        let chain = topo(TopologyKind::Chain, 3);
        let twice = AnalogSchedule::new(
            3,
            vec![
                vec![Star { center: 1, leaves: vec![0, 2] }],
                vec![Star { center: 0, leaves: vec![1] }],
            ],
        );
        assert!(check_analog(&chain, &twice).is_err());
    }
}
