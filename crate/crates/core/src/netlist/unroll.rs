//! Time-frame expansion of sequential netlists.

use super::{DffInit, GateKind, NetId, Netlist, PortRole};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum UnrollError {
    #[error("frame count must be at least 1")]
    ZeroFrames,
    #[error("netlist invalid: {0}")]
    Invalid(String),
}

/// Expand `netlist` into `k` combinational time frames.
///
/// Secret and locking-key inputs are shared across frames (held constant);
/// operational inputs are replicated per frame with an `@f<i>` suffix.
/// Frame-0 flip-flop outputs are tied to their init value; an `X` init
/// becomes a fresh operational input. Outputs of every frame are exposed,
/// suffixed with their frame index.
pub fn unroll(netlist: &Netlist, k: usize) -> Result<Netlist, UnrollError> {
    if k == 0 {
        return Err(UnrollError::ZeroFrames);
    }
    let violations = netlist.validate();
    if !violations.is_empty() {
        return Err(UnrollError::Invalid(violations[0].to_string()));
    }
    if netlist.is_combinational() && k == 1 {
        return Ok(netlist.clone());
    }

    let mut out = Netlist::new();
    let next_bit = |role: PortRole, out: &Netlist| {
        out.inputs.iter().filter(|p| p.role == role).map(|p| p.bit + 1).max().unwrap_or(0)
    };

    // Shared inputs get created once, keyed by original input index.
    let mut shared: Vec<Option<NetId>> = vec![None; netlist.inputs.len()];
    for (i, p) in netlist.inputs.iter().enumerate() {
        if p.role != PortRole::Operational {
            shared[i] = Some(out.add_input(p.name.clone(), p.role, p.bit));
        }
    }

    // State fed into the current frame, one net per DFF.
    let mut state: Vec<NetId> = Vec::with_capacity(netlist.dffs.len());
    for (i, dff) in netlist.dffs.iter().enumerate() {
        let net = match dff.init {
            DffInit::Zero => out.add_gate(GateKind::Const0, vec![]),
            DffInit::One => out.add_gate(GateKind::Const1, vec![]),
            DffInit::X => {
                let bit = next_bit(PortRole::Operational, &out);
                out.add_input(format!("{}@init", netlist.net_label(netlist.dffs[i].q)), PortRole::Operational, bit)
            }
        };
        state.push(net);
    }

    for frame in 0..k {
        // map original net id -> net id in this frame
        let mut map: Vec<Option<NetId>> = vec![None; netlist.net_count()];
        for (i, p) in netlist.inputs.iter().enumerate() {
            let net = match shared[i] {
                Some(n) => n,
                None => {
                    let bit = next_bit(PortRole::Operational, &out);
                    out.add_input(format!("{}@f{}", p.name, frame), PortRole::Operational, bit)
                }
            };
            map[p.net.index()] = Some(net);
        }
        for (i, dff) in netlist.dffs.iter().enumerate() {
            map[dff.q.index()] = Some(state[i]);
        }
        let order = super::topo_order(netlist).expect("validated above");
        for g in order {
            let gate = &netlist.gates[g.index()];
            let ins: Vec<NetId> = gate
                .inputs
                .iter()
                .map(|&n| map[n.index()].expect("topological order resolves fan-in"))
                .collect();
            let o = out.add_gate(gate.kind, ins);
            map[gate.output.index()] = Some(o);
        }
        for &po in &netlist.outputs {
            let net = map[po.index()].expect("outputs driven");
            // expose with a frame tag; reuse the net via a named BUF
            let tagged = out.add_gate(GateKind::Buf, vec![net]);
            out.net_names[tagged.index()] =
                Some(format!("{}@f{}", netlist.net_label(po), frame));
            out.outputs.push(tagged);
        }
        // next-state values
        state = netlist
            .dffs
            .iter()
            .map(|dff| map[dff.d.index()].expect("dff data driven"))
            .collect();
    }
    Ok(out)
}

/// Reference sequential simulator: steps the netlist cycle by cycle with
/// two-valued logic. `inputs[frame]` assigns every primary input by index.
pub fn simulate_sequential(
    netlist: &Netlist,
    input_frames: &[Vec<bool>],
    x_init_values: &[bool],
) -> Vec<Vec<bool>> {
    let order = super::topo_order(netlist).expect("valid netlist");
    let mut state: Vec<bool> = Vec::new();
    let mut x_iter = x_init_values.iter().copied();
    for dff in &netlist.dffs {
        state.push(match dff.init {
            DffInit::Zero => false,
            DffInit::One => true,
            DffInit::X => x_iter.next().expect("x init value supplied"),
        });
    }

    let mut result = Vec::new();
    for frame_inputs in input_frames {
        let mut values: Vec<Option<bool>> = vec![None; netlist.net_count()];
        for (i, p) in netlist.inputs.iter().enumerate() {
            values[p.net.index()] = Some(frame_inputs[i]);
        }
        for (i, dff) in netlist.dffs.iter().enumerate() {
            values[dff.q.index()] = Some(state[i]);
        }
        for g in &order {
            let gate = &netlist.gates[g.index()];
            let v = crate::sim::eval_gate_bool(gate.kind, &gate.inputs, &values);
            values[gate.output.index()] = Some(v);
        }
        result.push(netlist.outputs.iter().map(|&o| values[o.index()].unwrap()).collect());
        state = netlist.dffs.iter().map(|d| values[d.d.index()].unwrap()).collect();
    }
    result
}
