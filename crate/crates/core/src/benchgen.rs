//! Built-in benchmark designs with labeled secret inputs, plus parsing of
//! `name(args)` references like `toy_spn(4,2)`.

use thiserror::Error;

use crate::gatelock::{KeyBitProvenance, LockedNetlist, Scheme};
use crate::netlist::{DffInit, GateKind, Netlist, PortRole};
use crate::word::{lower_to_gates, BinOp, CmpOp, WordDesign};

/// A generated design; word designs keep their word-level form so they
/// can be obfuscated before lowering.
#[derive(Debug, Clone, PartialEq)]
pub enum GenDesign {
    Gate(Netlist),
    Word(WordDesign),
    Locked(LockedNetlist),
}

impl GenDesign {
    /// The design as a gate-level netlist, lowering if necessary.
    pub fn to_netlist(&self) -> Netlist {
        match self {
            GenDesign::Gate(n) => n.clone(),
            GenDesign::Word(w) => lower_to_gates(w).expect("built-in designs are valid"),
            GenDesign::Locked(l) => l.netlist.clone(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("unknown benchmark {0:?}")]
    UnknownName(String),
    #[error("malformed parameter list in {0:?}")]
    BadParams(String),
    #[error("{name}: parameter {param} out of range (got {got})")]
    ParamRange { name: &'static str, param: &'static str, got: u64 },
}

/// Parse a benchmark reference and build it. Recognized names:
/// `fig5_example`, `toy_spn(width,rounds)`, `toy_xtea(width,rounds)`,
/// `fsm_datapath(rounds)`, `passthrough`. Parameters may be omitted for
/// the defaults `toy_spn(4,2)`, `toy_xtea(4,2)`, `fsm_datapath(2)`.
pub fn gen_benchmark(name: &str) -> Result<GenDesign, GenError> {
    let (base, args) = split_ref(name)?;
    let arg = |i: usize, default: u64| -> u64 { args.get(i).copied().unwrap_or(default) };
    match base {
        "fig5_example" => Ok(GenDesign::Locked(fig5_example())),
        "passthrough" => Ok(GenDesign::Gate(passthrough())),
        "toy_spn" => {
            let (w, r) = (arg(0, 4), arg(1, 2));
            check_width("toy_spn", w)?;
            Ok(GenDesign::Word(toy_spn(w as u32, r as u32)))
        }
        "toy_xtea" => {
            let (w, r) = (arg(0, 4), arg(1, 2));
            check_width("toy_xtea", w)?;
            Ok(GenDesign::Word(toy_xtea(w as u32, r as u32)))
        }
        "fsm_datapath" => {
            let r = arg(0, 2);
            if r == 0 || r > 64 {
                return Err(GenError::ParamRange {
                    name: "fsm_datapath",
                    param: "rounds",
                    got: r,
                });
            }
            Ok(GenDesign::Gate(fsm_datapath(r as u32)))
        }
        other => Err(GenError::UnknownName(other.to_string())),
    }
}

fn check_width(name: &'static str, w: u64) -> Result<(), GenError> {
    if w == 0 || w > 16 {
        return Err(GenError::ParamRange { name, param: "width", got: w });
    }
    Ok(())
}

fn split_ref(s: &str) -> Result<(&str, Vec<u64>), GenError> {
    match s.find('(') {
        None => Ok((s.trim(), Vec::new())),
        Some(p) => {
            let rest = &s[p + 1..];
            let close = rest.find(')').ok_or_else(|| GenError::BadParams(s.to_string()))?;
            if rest[close + 1..].trim() != "" {
                return Err(GenError::BadParams(s.to_string()));
            }
            let args = rest[..close]
                .split(',')
                .map(|a| a.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| GenError::BadParams(s.to_string()))?;
            Ok((s[..p].trim(), args))
        }
    }
}

/// The worked two-output example: `output1 = op1 AND (s0 XOR s1)` is the
/// original logic; a key-controlled mux (selector `lolo_key0 AND
/// lolo_key1`) lets the secret `s0` bypass the masking XOR on `output2 =
/// op2 XOR (s0 AND s1)`. The correct key "00" keeps the mux on the
/// genuine path.
pub fn fig5_example() -> LockedNetlist {
    let mut n = Netlist::new();
    let s0 = n.add_input("enc_key0", PortRole::Secret, 0);
    let s1 = n.add_input("enc_key1", PortRole::Secret, 1);
    let op1 = n.add_input("op1", PortRole::Operational, 0);
    let op2 = n.add_input("op2", PortRole::Operational, 1);
    let k0 = n.add_input("lolo_key0", PortRole::LockingKey, 0);
    let k1 = n.add_input("lolo_key1", PortRole::LockingKey, 1);

    let mix = n.add_gate(GateKind::Xor, vec![s0, s1]);
    let out1 = n.fresh_named_net("output1");
    n.add_gate_onto(GateKind::And, vec![op1, mix], out1);

    let mask = n.add_gate(GateKind::And, vec![s0, s1]);
    let orig2 = n.add_gate(GateKind::Xor, vec![op2, mask]);
    let sel = n.add_gate(GateKind::And, vec![k0, k1]);
    let out2 = n.fresh_named_net("output2");
    n.add_gate_onto(GateKind::Mux2, vec![sel, orig2, s0], out2);

    n.outputs.push(out1);
    n.outputs.push(out2);
    debug_assert!(n.validate().is_empty());
    let mux_gate = (n.gates.len() - 1) as u32;
    let provenance = vec![
        KeyBitProvenance {
            scheme: Scheme::Dmux,
            gate_kind: GateKind::And,
            gate: mux_gate - 1, // the selector AND
            host_net: orig2.0,
            decoy_net: Some(s0.0),
        },
        KeyBitProvenance {
            scheme: Scheme::Dmux,
            gate_kind: GateKind::Mux2,
            gate: mux_gate,
            host_net: orig2.0,
            decoy_net: Some(s0.0),
        },
    ];
    LockedNetlist {
        netlist: n,
        key: vec![false, false],
        key_inputs: vec![k0, k1],
        provenance,
    }
}

/// A 2-bit wire from operational input to output; a 2-bit secret is
/// declared but unused, so nothing can leak.
pub fn passthrough() -> Netlist {
    let mut n = Netlist::new();
    let _s0 = n.add_input("s0", PortRole::Secret, 0);
    let _s1 = n.add_input("s1", PortRole::Secret, 1);
    for i in 0..2u32 {
        let x = n.add_input(format!("x{i}"), PortRole::Operational, i);
        let out = n.fresh_named_net(format!("y{i}"));
        n.add_gate_onto(GateKind::Buf, vec![x], out);
        n.outputs.push(out);
    }
    debug_assert!(n.validate().is_empty());
    n
}

/// Round constant stream shared by the toy ciphers.
fn round_const(w: u32, i: u32) -> u64 {
    (0x9E37_79B9u64.wrapping_mul(i as u64 + 1)) & super::word::mask(w)
}

/// A toy substitution/permutation-style cipher over two secret words.
/// Each round adds a key-derived word; the final whitening masks every
/// ciphertext bit with both `k0` and `k1` (via `+ (k0 & k1)` then
/// `^ k0 ^ k1`), so no single secret bit determines an output bit.
pub fn toy_spn(width: u32, rounds: u32) -> WordDesign {
    let mut d = WordDesign::new();
    let k0 = d.add_input("k0", width, PortRole::Secret);
    let k1 = d.add_input("k1", width, PortRole::Secret);
    let pt = d.add_input("pt", width, PortRole::Operational);
    let mut state = pt;
    for i in 0..rounds {
        let c = d.constant(width, round_const(width, 2 * i));
        let t = d.bin(BinOp::BitXor, state, c);
        let dmask = d.constant(width, round_const(width, 2 * i + 1));
        let km = d.bin(BinOp::BitXor, k1, dmask);
        let ka = d.bin(BinOp::BitAnd, k0, km);
        state = d.bin(BinOp::Add, t, ka);
    }
    let pair = d.bin(BinOp::BitAnd, k0, k1);
    let sum = d.bin(BinOp::Add, state, pair);
    let m0 = d.bin(BinOp::BitXor, sum, k0);
    let ct = d.bin(BinOp::BitXor, m0, k1);
    d.output("ct", ct);
    let kchk = masked_check(&mut d, width, [k0, k1, pt]);
    d.output("kchk", kchk);
    d
}

/// XOR of the given words, each gated by its own redundantly computed
/// all-ones enable (`v | !v`). In the plain design this is exactly
/// `a ^ b ^ c`; the enables model the redundant logic of synthesized
/// datapaths, which key-gate insertion can corrupt into a real gate-off.
fn masked_check(d: &mut WordDesign, width: u32, words: [crate::word::ExprId; 3]) -> crate::word::ExprId {
    let ones = d.constant(width, crate::word::mask(width));
    let mut acc = None;
    for v in words {
        let nv = d.bin(BinOp::BitXor, v, ones);
        let en = d.bin(BinOp::BitOr, v, nv);
        let gated = d.bin(BinOp::BitAnd, v, en);
        acc = Some(match acc {
            None => gated,
            Some(a) => d.bin(BinOp::BitXor, a, gated),
        });
    }
    acc.expect("three words")
}

/// A Feistel network in the XTEA mold, shift-free: each half is updated
/// by an add/xor mix of the other half and one key word. Both output
/// halves get the same two-key whitening as [`toy_spn`].
pub fn toy_xtea(width: u32, rounds: u32) -> WordDesign {
    let mut d = WordDesign::new();
    let k0 = d.add_input("k0", width, PortRole::Secret);
    let k1 = d.add_input("k1", width, PortRole::Secret);
    let mut v0 = d.add_input("v0", width, PortRole::Operational);
    let mut v1 = d.add_input("v1", width, PortRole::Operational);
    for i in 0..rounds {
        let delta = d.constant(width, round_const(width, i));
        let a = d.bin(BinOp::Add, v1, delta);
        let b = d.bin(BinOp::Add, v1, k0);
        let f = d.bin(BinOp::BitXor, a, b);
        v0 = d.bin(BinOp::Add, v0, f);

        let a2 = d.bin(BinOp::Add, v0, delta);
        let b2 = d.bin(BinOp::Add, v0, k1);
        let f2 = d.bin(BinOp::BitXor, a2, b2);
        v1 = d.bin(BinOp::Add, v1, f2);
    }
    let pair = d.bin(BinOp::BitAnd, k0, k1);
    for (name, half) in [("c0", v0), ("c1", v1)] {
        let sum = d.bin(BinOp::Add, half, pair);
        let m0 = d.bin(BinOp::BitXor, sum, k0);
        let ct = d.bin(BinOp::BitXor, m0, k1);
        d.output(name, ct);
    }
    d
}

/// A sequential design that releases its result only after a round
/// counter completes: the output is forced to zero until the counter
/// reaches `rounds`, then shows the two-key-masked combination of the
/// operational input. Built as a word-level step plus a gate-level
/// counter register.
pub fn fsm_datapath(rounds: u32) -> Netlist {
    let cw = (32 - rounds.leading_zeros()).max(1); // counter width
    let mut d = WordDesign::new();
    let s0 = d.add_input("s0", 2, PortRole::Secret);
    let s1 = d.add_input("s1", 2, PortRole::Secret);
    let x = d.add_input("x", 2, PortRole::Operational);
    let cnt = d.add_input("cnt", cw, PortRole::Operational);
    let one = d.constant(cw, 1);
    let cnt_next = d.bin(BinOp::Add, cnt, one);
    let target = d.constant(cw, rounds as u64);
    let done = d.cmp(CmpOp::Eq, cnt, target);
    let pair = d.bin(BinOp::BitAnd, s0, s1);
    let sum = d.bin(BinOp::Add, x, pair);
    let m0 = d.bin(BinOp::BitXor, sum, s0);
    let value = d.bin(BinOp::BitXor, m0, s1);
    let zero = d.constant(2, 0);
    let gated = d.mux(done, value, zero);
    d.output("cnt_next", cnt_next);
    d.output("y", gated);
    let kchk = masked_check(&mut d, 2, [s0, s1, x]);
    d.output("kchk", kchk);
    let mut n = lower_to_gates(&d).expect("valid step design");

    // turn the counter into real state: each cnt bit becomes a DFF whose
    // next value is the matching cnt_next output bit
    let mut dffs = Vec::new();
    for j in 0..cw {
        let q_name = if cw == 1 { "cnt".to_string() } else { format!("cnt[{j}]") };
        let d_name = if cw == 1 { "cnt_next".to_string() } else { format!("cnt_next[{j}]") };
        let pos = n
            .inputs
            .iter()
            .position(|p| p.name == q_name)
            .expect("counter input present");
        let q = n.inputs.remove(pos).net;
        let d_net = n
            .outputs
            .iter()
            .copied()
            .find(|&o| n.net_name(o) == Some(d_name.as_str()))
            .expect("counter next-state output present");
        dffs.push((d_net, q));
    }
    // drop the cnt_next outputs; they exist only to wire the registers
    let names = n.net_names.clone();
    n.outputs.retain(|&o| {
        names[o.index()].as_deref().map_or(true, |name| !name.starts_with("cnt_next"))
    });
    for (d_net, q) in dffs {
        n.dffs.push(crate::netlist::Dff { d: d_net, q, init: DffInit::Zero });
    }
    // remaining operational inputs shift down to a dense bit numbering
    let mut next_op_bit = 0;
    for p in n.inputs.iter_mut() {
        if p.role == PortRole::Operational {
            p.bit = next_op_bit;
            next_op_bit += 1;
        }
    }
    debug_assert!(n.validate().is_empty());
    n
}
