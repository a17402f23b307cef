//! Topological ordering of the combinational subgraph.

use super::{GateId, NetId, Netlist};
use thiserror::Error;

/// A combinational cycle, reported as the nets along one loop.
#[derive(Debug, Clone, Error)]
#[error("combinational cycle through {} nets", nets.len())]
pub struct CycleError {
    pub nets: Vec<NetId>,
}

/// Order gates so every gate follows its combinational fan-in drivers.
/// DFF outputs and primary inputs are sources.
pub fn topo_order(netlist: &Netlist) -> Result<Vec<GateId>, CycleError> {
    let n_gates = netlist.gates.len();
    // net -> driving gate (combinational only)
    let mut net_driver: Vec<Option<GateId>> = vec![None; netlist.net_count()];
    for (i, g) in netlist.gates.iter().enumerate() {
        if g.output.index() < net_driver.len() {
            net_driver[g.output.index()] = Some(GateId(i as u32));
        }
    }

    let mut indegree = vec![0usize; n_gates];
    let mut succs: Vec<Vec<GateId>> = vec![Vec::new(); n_gates];
    for (i, g) in netlist.gates.iter().enumerate() {
        for &inp in &g.inputs {
            if let Some(src) = net_driver.get(inp.index()).copied().flatten() {
                indegree[i] += 1;
                succs[src.index()].push(GateId(i as u32));
            }
        }
    }

    let mut ready: Vec<GateId> = (0..n_gates)
        .filter(|&i| indegree[i] == 0)
        .map(|i| GateId(i as u32))
        .collect();
    let mut order = Vec::with_capacity(n_gates);
    while let Some(g) = ready.pop() {
        order.push(g);
        for &s in &succs[g.index()] {
            indegree[s.index()] -= 1;
            if indegree[s.index()] == 0 {
                ready.push(s);
            }
        }
    }

    if order.len() == n_gates {
        return Ok(order);
    }

    // Walk the residual graph to exhibit one loop.
    let stuck = (0..n_gates).find(|&i| indegree[i] > 0).expect("cycle exists");
    let mut seen = vec![false; n_gates];
    let mut path: Vec<GateId> = Vec::new();
    let mut cur = GateId(stuck as u32);
    loop {
        if seen[cur.index()] {
            let start = path.iter().position(|&g| g == cur).unwrap_or(0);
            let nets = path[start..]
                .iter()
                .map(|&g| netlist.gates[g.index()].output)
                .collect();
            return Err(CycleError { nets });
        }
        seen[cur.index()] = true;
        path.push(cur);
        // follow some unresolved fan-in
        let g = &netlist.gates[cur.index()];
        let next = g
            .inputs
            .iter()
            .filter_map(|&inp| net_driver.get(inp.index()).copied().flatten())
            .find(|d| indegree[d.index()] > 0 || seen[d.index()]);
        match next {
            Some(d) => cur = d,
            None => unreachable!("gate stuck in cycle must have unresolved fan-in"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{GateKind, PortRole};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chain_respects_order() {
        let mut n = Netlist::new();
        let a = n.add_input("a", PortRole::Operational, 0);
        let b = n.add_gate(GateKind::Buf, vec![a]);
        let c = n.add_gate(GateKind::Not, vec![b]);
        let d = n.add_gate(GateKind::Xor, vec![c, a]);
        n.outputs.push(d);
        let order = topo_order(&n).unwrap();
        let pos: Vec<usize> = (0..3)
            .map(|g| order.iter().position(|x| x.0 == g).unwrap())
            .collect();
        assert!(pos[0] < pos[1] && pos[1] < pos[2]);
    }

    #[test]
    fn self_feeding_mux_is_a_cycle() {
        let mut n = Netlist::new();
        let a = n.add_input("a", PortRole::Operational, 0);
        let s = n.add_input("s", PortRole::Operational, 1);
        let out = n.fresh_net();
        n.add_gate_onto(GateKind::Mux2, vec![s, a, out], out);
        n.outputs.push(out);
        let err = topo_order(&n).unwrap_err();
        assert!(err.nets.contains(&out));
    }

    #[test]
    fn random_dags_pass_edge_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let mut n = Netlist::new();
            let mut nets = vec![n.add_input("a", PortRole::Operational, 0)];
            nets.push(n.add_input("b", PortRole::Operational, 1));
            for _ in 0..rng.gen_range(1..20) {
                let x = *nets.choose(&mut rng).unwrap();
                let y = *nets.choose(&mut rng).unwrap();
                nets.push(n.add_gate(GateKind::Nand, vec![x, y]));
            }
            n.outputs.push(*nets.last().unwrap());
            let order = topo_order(&n).unwrap();
            // edge check: every gate's combinational fan-in appears earlier
            let mut pos = vec![usize::MAX; n.gates.len()];
            for (i, g) in order.iter().enumerate() {
                pos[g.index()] = i;
            }
            let (drivers, _) = n.driver_map();
            for (i, g) in n.gates.iter().enumerate() {
                for &inp in &g.inputs {
                    if let Some(super::super::Driver::Gate(d)) = drivers[inp.index()] {
                        assert!(pos[d.index()] < pos[i]);
                    }
                }
            }
        }
    }
}
