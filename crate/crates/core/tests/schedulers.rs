use d2dsgd_core::scheduling::{
    analog_schedule, auxiliary_graph, check_analog, check_digital, digital_schedule, tdma_schedule, AnalogSchedule,
    Role,
};
use d2dsgd_core::topology::{Graph, Topology};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Connected graph on 2..=30 nodes: a random spanning tree plus random extra edges.
fn random_graph(rng: &mut ChaCha8Rng) -> Topology {
    let k = rng.random_range(2..=30);
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(rng);
    let mut g = Graph::empty(k);
    for n in 1..k {
        let parent = order[rng.random_range(0..n)];
        g.add_edge(parent, order[n]).unwrap();
    }
    let p: f64 = rng.random_range(0.0..0.4);
    for i in 0..k {
        for j in (i + 1)..k {
            if !g.has_edge(i, j) && rng.random_bool(p) {
                g.add_edge(i, j).unwrap();
            }
        }
    }
    Topology::new(g, None).unwrap()
}

/// Two transmitters in the same slot never share a neighbor and are never
/// neighbors themselves.
fn independent_digital(topo: &Topology, slot_of: impl Fn(usize) -> usize) -> bool {
    let k = topo.node_count();
    for i in 0..k {
        for j in (i + 1)..k {
            if slot_of(i) != slot_of(j) {
                continue;
            }
            let near = topo.graph().has_edge(i, j) || topo.neighbors(i).iter().any(|n| topo.neighbors(j).contains(n));
            if near {
                return false;
            }
        }
    }
    true
}

fn valid_analog(topo: &Topology, s: &AnalogSchedule) -> Result<(), String> {
    let k = topo.node_count();
    let g = topo.graph();
    let mut served = vec![0; k * k];
    for (r, stars) in s.rounds().iter().enumerate() {
        let mut seen = vec![false; k];
        let centers: Vec<usize> = stars.iter().map(|s| s.center).collect();
        for st in stars {
            for &n in std::iter::once(&st.center).chain(&st.leaves) {
                if std::mem::replace(&mut seen[n], true) {
                    return Err(format!("pair {r}: node {n} used twice"));
                }
            }
            for &l in &st.leaves {
                if !g.has_edge(st.center, l) {
                    return Err(format!("pair {r}: {l} is not a neighbor of {}", st.center));
                }
                // AirComp reaches only the own center; broadcast reaches only own leaves
                if centers.iter().any(|&c| c != st.center && g.has_edge(c, l)) {
                    return Err(format!("pair {r}: leaf {l} hears another center"));
                }
                served[l * k + st.center] += 1;
                served[st.center * k + l] += 1;
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            let want = usize::from(g.has_edge(i, j));
            if served[i * k + j] != want {
                return Err(format!("link {i}->{j} served {} times", served[i * k + j]));
            }
        }
        // AirComp slots are odd, broadcast slots even
        if s.slots(i, Role::AirCompRx).iter().any(|x| x % 2 == 0) || s.slots(i, Role::BroadcastTx).iter().any(|x| x % 2 == 1) {
            return Err(format!("node {i}: slot parity"));
        }
        if s.slots(i, Role::AirCompRx).len() > 1 {
            return Err(format!("node {i} is an AirComp receiver twice"));
        }
    }
    Ok(())
}

#[test]
fn random_graphs_get_valid_schedules() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let topo = random_graph(&mut rng);
        let d = digital_schedule(&topo);
        check_digital(&topo, &d).unwrap();
        assert!(independent_digital(&topo, |i| d.slot_of(i)), "case {case}");
        let bound = auxiliary_graph(topo.graph()).max_degree() + 1;
        assert!(d.slot_count() <= bound, "case {case}: {} slots, bound {bound}", d.slot_count());

        let tdma = tdma_schedule(&topo);
        check_digital(&topo, &tdma).unwrap();
        assert_eq!(tdma.slot_count(), topo.node_count());

        let a = analog_schedule(&topo);
        check_analog(&topo, &a).unwrap();
        if let Err(e) = valid_analog(&topo, &a) {
            panic!("case {case}: {e}");
        }
    }
}
