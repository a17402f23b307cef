//! CNF representation, Tseitin encoding of netlists, and a CDCL decision
//! procedure with conflict and wall-clock budgets.

mod dimacs;
mod solver;
mod tseitin;

pub use dimacs::{emit_dimacs, parse_dimacs, DimacsError};
pub use solver::{solve, Solver};
pub use tseitin::{encode_netlist, Encoder};

use std::fmt;

/// A literal: positive or negated variable. Variables are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(i32);

impl Lit {
    pub fn new(var: u32, positive: bool) -> Lit {
        debug_assert!(var >= 1);
        Lit(if positive { var as i32 } else { -(var as i32) })
    }

    pub fn var(self) -> u32 {
        self.0.unsigned_abs()
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn negated(self) -> Lit {
        Lit(-self.0)
    }

    pub fn to_dimacs(self) -> i32 {
        self.0
    }

    pub fn from_dimacs(v: i32) -> Option<Lit> {
        if v == 0 {
            None
        } else {
            Some(Lit(v))
        }
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        self.negated()
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// CNF formula with dense 1-based variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new() -> Cnf {
        Cnf::default()
    }

    pub fn fresh_var(&mut self) -> u32 {
        self.num_vars += 1;
        self.num_vars
    }

    pub fn fresh_lit(&mut self) -> Lit {
        Lit::new(self.fresh_var(), true)
    }

    pub fn add_clause(&mut self, lits: impl Into<Vec<Lit>>) {
        let lits = lits.into();
        for l in &lits {
            assert!(l.var() <= self.num_vars, "literal references unallocated variable");
        }
        self.clauses.push(lits);
    }

    /// Evaluate under a full assignment (index = var - 1). Used as the
    /// independent model self-check.
    pub fn eval(&self, model: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter().any(|l| {
                let v = model[(l.var() - 1) as usize];
                v == l.is_positive()
            })
        })
    }
}

/// Budgets applied to a single solver query. At least one bound should be set
/// for classification runs; conflict limits are deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveBudget {
    pub wall_ms: Option<u64>,
    pub conflicts: Option<u64>,
}

impl SolveBudget {
    pub const UNLIMITED: SolveBudget = SolveBudget { wall_ms: None, conflicts: None };

    /// Default classification budget: 10 s wall clock and 2e6 conflicts,
    /// whichever is hit first.
    pub fn classification_default() -> SolveBudget {
        SolveBudget { wall_ms: Some(10_000), conflicts: Some(2_000_000) }
    }
}

/// Which budget bound ran out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExhaustedBound {
    WallClock,
    Conflicts,
}

/// Outcome of a solver query.
#[derive(Debug, Clone, PartialEq)]
pub enum SolveResult {
    /// Satisfiable; model[var-1] gives each variable's value.
    Sat(Vec<bool>),
    Unsat,
    Unknown(ExhaustedBound),
}

/// Statistics from a single query.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub wall_ms: u64,
}
