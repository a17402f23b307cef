//! Logic-locking confidentiality audit toolkit.
//!
//! Applies three representative locking schemes (word-level constant /
//! operation / branch obfuscation, XOR-XNOR key gates, and key-controlled
//! multiplexer insertion) to circuit descriptions, then decides by SAT-based
//! path sensitization whether wrong locking keys open paths that forward
//! secret inputs to primary outputs. Per-bit verdicts (detected / secure /
//! not decided) aggregate into population statistics over seeded sets of
//! locked variants.

pub mod batch;
pub mod benchgen;
pub mod gatelock;
pub mod netlist;
pub mod sat;
pub mod sensitize;
pub mod sim;
pub mod word;

pub use netlist::{GateKind, Netlist, PortRole};
pub use sensitize::{AnalysisMode, LeakageVerdict, Scenario, VerdictClass, Witness};
