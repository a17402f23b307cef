//! Key-based obfuscation of word-level designs: constants are swapped for
//! key inputs, operations are shadowed by a keyed dummy twin, and branch
//! conditions are XOR-masked by a key bit.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::PortRole;

use super::{BinOp, CmpOp, ExprId, WordDesign, WordError, WordExpr, WordInput};

/// Which classes of sites to obfuscate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssureMode {
    Const,
    Ops,
    Branch,
}

/// What a run of key bits encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    /// Extracted constant bits, most significant first.
    Constant,
    /// One random bit selecting the genuine operation over its dummy twin.
    Operation,
    /// One random bit masking a branch condition.
    Branch,
}

/// A contiguous run of key bits and the design site it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeySegment {
    pub kind: SegmentKind,
    /// Node index in the *original* design.
    pub site: usize,
    /// Name of the key input added for this segment.
    pub key_input: String,
    pub start: usize,
    pub len: usize,
}

/// The assembled key: a bit string plus the map back to design sites.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssureKey {
    pub bits: Vec<bool>,
    pub segments: Vec<KeySegment>,
}

impl AssureKey {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Key as a "0101..." string, bit 0 first.
    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Values for the key inputs of the locked design, suitable for
    /// merging into a `word_eval` assignment.
    pub fn assignment(&self) -> Vec<(String, u64)> {
        self.segments
            .iter()
            .map(|seg| {
                // constant segments are stored MSB-first
                let mut v = 0u64;
                for i in 0..seg.len {
                    v = (v << 1) | self.bits[seg.start + i] as u64;
                }
                (seg.key_input.clone(), v)
            })
            .collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LockError {
    #[error("no obfuscation modes requested")]
    EmptyModes,
    #[error("invalid design: {0}")]
    Invalid(#[from] WordError),
}

/// Obfuscate all lockable sites of the requested kinds. Returns the locked
/// design and the correct key. A mode with no sites contributes zero bits.
///
/// Site classes:
/// - `Const`: every constant node becomes a key input of the same width;
///   the constant's bits (MSB first) join the key.
/// - `Ops`: every arithmetic/bitwise node, plus comparators that do not
///   feed a mux condition, is wrapped as a keyed choice between itself and
///   a dummy twin (Add↔Sub, BitAnd↔BitOr, BitXor↔bitwise-XNOR, Gt↔Le,
///   Eq↔negated-Eq). The key bit's polarity is random.
/// - `Branch`: every comparator feeding a mux condition is XOR-masked by a
///   key bit, with the comparator itself complemented for half the keys.
pub fn assure_lock(
    design: &WordDesign,
    modes: &[AssureMode],
    seed: u64,
) -> Result<(WordDesign, AssureKey), LockError> {
    if modes.is_empty() {
        return Err(LockError::EmptyModes);
    }
    design.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let want = |m: AssureMode| modes.contains(&m);

    // comparators used as mux conditions in the original design
    let cond_cmps: HashSet<usize> = design
        .nodes
        .iter()
        .filter_map(|n| match n {
            WordExpr::Mux { cond, .. } => {
                matches!(design.nodes[cond.index()], WordExpr::Cmp { .. })
                    .then(|| cond.index())
            }
            _ => None,
        })
        .collect();

    let mut locked = WordDesign {
        inputs: design.inputs.clone(),
        nodes: Vec::new(),
        outputs: Vec::new(),
    };
    let mut key = AssureKey::default();
    // old node index -> id in the locked arena
    let mut remap: Vec<ExprId> = Vec::with_capacity(design.nodes.len());

    let next_key_input = |locked: &mut WordDesign, prefix: &str, width: u32| -> (usize, String) {
        // Counter names can collide with the design's own inputs; skip past.
        let mut n = locked.inputs.len() - design.inputs.len();
        let name = loop {
            let cand = format!("{prefix}{n}");
            if !locked.inputs.iter().any(|i| i.name == cand) {
                break cand;
            }
            n += 1;
        };
        locked.inputs.push(WordInput {
            name: name.clone(),
            width,
            role: PortRole::LockingKey,
        });
        (locked.inputs.len() - 1, name)
    };

    for (i, node) in design.nodes.iter().enumerate() {
        let new_id = match node {
            WordExpr::Const { width, value } if want(AssureMode::Const) => {
                let (input_idx, name) = next_key_input(&mut locked, "k", *width);
                let start = key.bits.len();
                for bit in (0..*width).rev() {
                    key.bits.push(value >> bit & 1 == 1);
                }
                key.segments.push(KeySegment {
                    kind: SegmentKind::Constant,
                    site: i,
                    key_input: name,
                    start,
                    len: *width as usize,
                });
                locked.push(WordExpr::Input(input_idx))
            }
            WordExpr::Bin { op, a, b } if want(AssureMode::Ops) => {
                let (a, b) = (remap[a.index()], remap[b.index()]);
                let genuine = locked.push(WordExpr::Bin { op: *op, a, b });
                let dummy = match op {
                    BinOp::Add => locked.bin(BinOp::Sub, a, b),
                    BinOp::Sub => locked.bin(BinOp::Add, a, b),
                    BinOp::BitAnd => locked.bin(BinOp::BitOr, a, b),
                    BinOp::BitOr => locked.bin(BinOp::BitAnd, a, b),
                    BinOp::BitXor => {
                        // bitwise XNOR, spelled as XOR with all-ones
                        let w = locked.width(a);
                        let ones = locked.constant(w, super::mask(w));
                        let x = locked.bin(BinOp::BitXor, a, b);
                        locked.bin(BinOp::BitXor, x, ones)
                    }
                };
                wrap_keyed_choice(&mut locked, &mut key, &mut rng, i, genuine, dummy, |w| {
                    next_key_input(w, "k", 1)
                })
            }
            WordExpr::Cmp { op, a, b } => {
                let (a, b) = (remap[a.index()], remap[b.index()]);
                if cond_cmps.contains(&i) && want(AssureMode::Branch) {
                    // condition masking: cond' = cmp_variant XOR key bit,
                    // where the variant is complemented iff the bit is 1
                    let complement: bool = rng.gen();
                    let variant = cmp_variant(&mut locked, *op, a, b, complement);
                    let (input_idx, name) = next_key_input(&mut locked, "k", 1);
                    let k = locked.push(WordExpr::Input(input_idx));
                    let start = key.bits.len();
                    key.bits.push(complement);
                    key.segments.push(KeySegment {
                        kind: SegmentKind::Branch,
                        site: i,
                        key_input: name,
                        start,
                        len: 1,
                    });
                    locked.bin(BinOp::BitXor, variant, k)
                } else if !cond_cmps.contains(&i) && want(AssureMode::Ops) {
                    let genuine = locked.cmp(*op, a, b);
                    let dummy = cmp_variant(&mut locked, *op, a, b, true);
                    wrap_keyed_choice(&mut locked, &mut key, &mut rng, i, genuine, dummy, |w| {
                        next_key_input(w, "k", 1)
                    })
                } else {
                    locked.cmp(*op, a, b)
                }
            }
            WordExpr::Const { width, value } => locked.constant(*width, *value),
            WordExpr::Input(idx) => locked.push(WordExpr::Input(*idx)),
            WordExpr::Bin { op, a, b } => {
                let (a, b) = (remap[a.index()], remap[b.index()]);
                locked.bin(*op, a, b)
            }
            WordExpr::Mux { cond, then_, else_ } => locked.mux(
                remap[cond.index()],
                remap[then_.index()],
                remap[else_.index()],
            ),
        };
        remap.push(new_id);
    }
    for (name, id) in &design.outputs {
        locked.output(name.clone(), remap[id.index()]);
    }
    debug_assert!(locked.validate().is_ok());
    Ok((locked, key))
}

/// The comparator, complemented or not. Gt and Le are each other's
/// complements; Eq is complemented by XOR with constant 1.
fn cmp_variant(d: &mut WordDesign, op: CmpOp, a: ExprId, b: ExprId, complement: bool) -> ExprId {
    if !complement {
        return d.cmp(op, a, b);
    }
    match op {
        CmpOp::Gt => d.cmp(CmpOp::Le, a, b),
        CmpOp::Le => d.cmp(CmpOp::Gt, a, b),
        CmpOp::Eq => {
            let e = d.cmp(CmpOp::Eq, a, b);
            let one = d.constant(1, 1);
            d.bin(BinOp::BitXor, e, one)
        }
    }
}

/// Wrap a (genuine, dummy) pair in a key-selected mux with random polarity
/// and record the key bit. Returns the mux node.
fn wrap_keyed_choice(
    locked: &mut WordDesign,
    key: &mut AssureKey,
    rng: &mut ChaCha8Rng,
    site: usize,
    genuine: ExprId,
    dummy: ExprId,
    mut fresh_key: impl FnMut(&mut WordDesign) -> (usize, String),
) -> ExprId {
    let bit: bool = rng.gen();
    let (input_idx, name) = fresh_key(locked);
    let k = locked.push(WordExpr::Input(input_idx));
    let start = key.bits.len();
    key.bits.push(bit);
    key.segments.push(KeySegment {
        kind: SegmentKind::Operation,
        site,
        key_input: name,
        start,
        len: 1,
    });
    if bit {
        locked.mux(k, genuine, dummy)
    } else {
        locked.mux(k, dummy, genuine)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use std::collections::HashMap;

    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::super::word_eval;
    use super::*;

    fn add_const_design() -> WordDesign {
        let mut d = WordDesign::new();
        let a = d.add_input("a", 4, PortRole::Operational);
        let c = d.constant(4, 0b1101);
        let b = d.bin(BinOp::Add, a, c);
        d.output("b", b);
        d
    }

    fn eval_with_key(
        d: &WordDesign,
        key: &AssureKey,
        base: &HashMap<String, u64>,
    ) -> Vec<(String, u64)> {
        let mut asg = base.clone();
        for (name, v) in key.assignment() {
            asg.insert(name, v);
        }
        word_eval(d, &asg).unwrap()
    }

    #[test]
    fn constant_extraction_yields_its_bits() {
        let d = add_const_design();
        let (locked, key) = assure_lock(&d, &[AssureMode::Const], 1).unwrap();
        assert_eq!(key.bit_string(), "1101");
        assert_eq!(key.segments.len(), 1);
        assert_eq!(key.segments[0].kind, SegmentKind::Constant);
        // the constant is gone; a locking-key input replaced it
        assert!(locked.nodes.iter().all(|n| !matches!(n, WordExpr::Const { .. })));
        assert_eq!(
            locked.inputs.iter().filter(|i| i.role == PortRole::LockingKey).count(),
            1
        );
    }

    #[test]
    fn design_without_constants_is_unchanged_under_const_mode() {
        let mut d = WordDesign::new();
        let a = d.add_input("a", 4, PortRole::Operational);
        let b = d.add_input("b", 4, PortRole::Operational);
        let r = d.bin(BinOp::BitXor, a, b);
        d.output("r", r);
        let (locked, key) = assure_lock(&d, &[AssureMode::Const], 7).unwrap();
        assert!(key.is_empty());
        assert_eq!(locked, d);
    }

    #[test]
    fn empty_mode_set_rejected() {
        let d = add_const_design();
        assert_eq!(assure_lock(&d, &[], 0).unwrap_err(), LockError::EmptyModes);
    }

    #[test]
    fn ops_mode_wraps_add_with_sub_twin() {
        let mut d = WordDesign::new();
        let a = d.add_input("a", 4, PortRole::Operational);
        let b = d.add_input("b", 4, PortRole::Operational);
        let c = d.bin(BinOp::Add, a, b);
        d.output("c", c);
        let (locked, key) = assure_lock(&d, &[AssureMode::Ops], 3).unwrap();
        assert_eq!(key.len(), 1);
        assert!(locked.nodes.iter().any(|n| matches!(n, WordExpr::Bin { op: BinOp::Sub, .. })));
        // correct key restores addition; flipped key computes the dummy
        let mut base = HashMap::new();
        base.insert("a".to_string(), 9);
        base.insert("b".to_string(), 5);
        assert_eq!(eval_with_key(&locked, &key, &base)[0].1, 14);
        let mut wrong = key.clone();
        wrong.bits[0] = !wrong.bits[0];
        assert_eq!(eval_with_key(&locked, &wrong, &base)[0].1, 4);
    }

    /// A random design over `2..=3` inputs of one width. Every generated
    /// node feeds the single output (an XOR fold of all word nodes), so
    /// obfuscating any site is observable in principle.
    pub(crate) fn random_design(rng: &mut ChaCha8Rng, min_width: u32, max_width: u32) -> WordDesign {
        let mut d = WordDesign::new();
        let w = rng.gen_range(min_width..=max_width);
        let n_inputs = rng.gen_range(2..=3);
        let mut words: Vec<ExprId> = (0..n_inputs)
            .map(|i| {
                let role = if i == 0 { PortRole::Secret } else { PortRole::Operational };
                d.add_input(format!("in{i}"), w, role)
            })
            .collect();
        for _ in 0..rng.gen_range(1..=5) {
            let pick = |rng: &mut ChaCha8Rng, v: &[ExprId]| v[rng.gen_range(0..v.len())];
            match rng.gen_range(0..4) {
                0 => words.push(d.constant(w, rng.gen_range(0..(1u64 << w)))),
                1 | 2 => {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::BitXor, BinOp::BitAnd, BinOp::BitOr]
                        [rng.gen_range(0..5)];
                    let (a, b) = (pick(rng, &words), pick(rng, &words));
                    let r = d.bin(op, a, b);
                    words.push(r);
                }
                _ => {
                    // a comparator immediately consumed as a mux condition
                    let op = [CmpOp::Gt, CmpOp::Le, CmpOp::Eq][rng.gen_range(0..3)];
                    let (a, b) = (pick(rng, &words), pick(rng, &words));
                    let c = d.cmp(op, a, b);
                    let t = rng.gen_range(0..words.len());
                    let mut e = rng.gen_range(0..words.len());
                    if words.len() > 1 && e == t {
                        e = (e + 1) % words.len();
                    }
                    let r = d.mux(c, words[t], words[e]);
                    words.push(r);
                }
            }
        }
        let folded = words[1..]
            .iter()
            .fold(words[0], |acc, &x| d.bin(BinOp::BitXor, acc, x));
        d.output("out", folded);
        d
    }

    #[test]
    fn correct_key_restores_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xA55);
        let all = [AssureMode::Const, AssureMode::Ops, AssureMode::Branch];
        for case in 0..60 {
            let d = random_design(&mut rng, 1, 6);
            let modes: &[AssureMode] = match case % 4 {
                0 => &all[..1],
                1 => &all[1..2],
                2 => &all[2..],
                _ => &all,
            };
            let (locked, key) = assure_lock(&d, modes, case).unwrap();
            let total_bits: u32 = d.inputs.iter().map(|i| i.width).sum();
            let check = |asg: &HashMap<String, u64>| {
                let want = word_eval(&d, asg).unwrap();
                let got = eval_with_key(&locked, &key, asg);
                assert_eq!(got, want, "case {case} modes {modes:?} asg {asg:?}");
            };
            if total_bits <= 16 {
                for v in 0u64..(1 << total_bits) {
                    let mut asg = HashMap::new();
                    let mut shift = 0;
                    for inp in &d.inputs {
                        asg.insert(inp.name.clone(), (v >> shift) & super::super::mask(inp.width));
                        shift += inp.width;
                    }
                    check(&asg);
                }
            } else {
                for _ in 0..200 {
                    let asg = d
                        .inputs
                        .iter()
                        .map(|inp| (inp.name.clone(), rng.gen::<u64>() & super::super::mask(inp.width)))
                        .collect();
                    check(&asg);
                }
            }
        }
    }

    #[test]
    fn key_length_matches_site_accounting() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xACC);
        for case in 0..40 {
            let d = random_design(&mut rng, 1, 5);
            let cond_cmps: std::collections::HashSet<usize> = d
                .nodes
                .iter()
                .filter_map(|n| match n {
                    WordExpr::Mux { cond, .. } => {
                        matches!(d.nodes[cond.index()], WordExpr::Cmp { .. }).then(|| cond.index())
                    }
                    _ => None,
                })
                .collect();
            let const_bits: usize = d
                .nodes
                .iter()
                .filter_map(|n| match n {
                    WordExpr::Const { width, .. } => Some(*width as usize),
                    _ => None,
                })
                .sum();
            let ops: usize = d
                .nodes
                .iter()
                .enumerate()
                .filter(|(i, n)| match n {
                    WordExpr::Bin { .. } => true,
                    WordExpr::Cmp { .. } => !cond_cmps.contains(i),
                    _ => false,
                })
                .count();
            let branches = cond_cmps.len();

            let modes = [AssureMode::Const, AssureMode::Ops, AssureMode::Branch];
            let (_, key) = assure_lock(&d, &modes, case).unwrap();
            assert_eq!(key.len(), const_bits + ops + branches, "case {case}");
            // modes compose additively: per-mode key lengths sum up
            let per_mode: usize = modes
                .iter()
                .map(|m| assure_lock(&d, &[*m], case).unwrap().1.len())
                .sum();
            assert_eq!(key.len(), per_mode);
        }
    }

    #[test]
    fn random_wrong_key_corrupts_some_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xBAD);
        let modes = [AssureMode::Const, AssureMode::Ops, AssureMode::Branch];
        for case in 0..25 {
            let d = random_design(&mut rng, 2, 6);
            let (locked, key) = assure_lock(&d, &modes, case).unwrap();
            if key.is_empty() {
                continue;
            }
            // a pair of wrong bits can cancel exactly (two complemented
            // XOR sites in series), so demand corruption from at least
            // one of several sampled wrong keys rather than from all
            let corrupted = (0..10).any(|_| {
                let mut wrong = key.clone();
                while wrong.bits == key.bits {
                    for b in wrong.bits.iter_mut() {
                        *b = rng.gen();
                    }
                }
                (0..1000).any(|_| {
                    let asg: HashMap<String, u64> = d
                        .inputs
                        .iter()
                        .map(|inp| {
                            (inp.name.clone(), rng.gen::<u64>() & super::super::mask(inp.width))
                        })
                        .collect();
                    eval_with_key(&locked, &wrong, &asg) != word_eval(&d, &asg).unwrap()
                })
            });
            assert!(corrupted, "case {case}: no sampled wrong key changed the output");
        }
    }
}
