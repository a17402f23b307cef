//! Conflict-driven clause learning solver: watched literals, first-UIP
//! learning, activity-guided decisions, Luby restarts, phase saving.

use super::{Cnf, ExhaustedBound, Lit, SolveBudget, SolveResult, SolveStats};
use std::time::Instant;

const VAR_DECAY: f64 = 0.95;
const RESTART_BASE: u64 = 100;
const WALL_CHECK_INTERVAL: u64 = 256;

type ClauseRef = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Value {
    True,
    False,
    Undef,
}

/// Internal literal: var*2 (positive) or var*2+1 (negated), vars 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ILit(u32);

impl ILit {
    fn from_lit(l: Lit) -> ILit {
        let v = l.var() - 1;
        ILit(v * 2 + if l.is_positive() { 0 } else { 1 })
    }
    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }
    fn positive(self) -> bool {
        self.0 & 1 == 0
    }
    fn neg(self) -> ILit {
        ILit(self.0 ^ 1)
    }
    fn idx(self) -> usize {
        self.0 as usize
    }
}

struct Clause {
    lits: Vec<ILit>,
    learned: bool,
    deleted: bool,
}

pub struct Solver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<ClauseRef>>, // indexed by ILit idx; clauses watching that literal
    assigns: Vec<Value>,
    phase: Vec<bool>,
    level: Vec<u32>,
    reason: Vec<Option<ClauseRef>>,
    activity: Vec<f64>,
    var_inc: f64,
    trail: Vec<ILit>,
    trail_lim: Vec<usize>,
    prop_head: usize,
    n_vars: usize,
    stats: SolveStats,
    learned_since_reduce: usize,
    root_unsat: bool,
}

impl Solver {
    pub fn new(num_vars: u32) -> Solver {
        let n = num_vars as usize;
        Solver {
            clauses: Vec::new(),
            watches: vec![Vec::new(); n * 2],
            assigns: vec![Value::Undef; n],
            phase: vec![false; n],
            level: vec![0; n],
            reason: vec![None; n],
            activity: vec![0.0; n],
            var_inc: 1.0,
            trail: Vec::new(),
            trail_lim: Vec::new(),
            prop_head: 0,
            n_vars: n,
            stats: SolveStats::default(),
            learned_since_reduce: 0,
            root_unsat: false,
        }
    }

    fn value(&self, l: ILit) -> Value {
        match self.assigns[l.var()] {
            Value::Undef => Value::Undef,
            Value::True => {
                if l.positive() {
                    Value::True
                } else {
                    Value::False
                }
            }
            Value::False => {
                if l.positive() {
                    Value::False
                } else {
                    Value::True
                }
            }
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: ILit, reason: Option<ClauseRef>) {
        debug_assert_eq!(self.value(l), Value::Undef);
        self.assigns[l.var()] = if l.positive() { Value::True } else { Value::False };
        self.level[l.var()] = self.decision_level();
        self.reason[l.var()] = reason;
        self.trail.push(l);
        self.stats.propagations += 1;
    }

    /// Add a clause; returns false if the formula became trivially UNSAT.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        debug_assert_eq!(self.decision_level(), 0);
        if self.root_unsat {
            return false;
        }
        let mut ls: Vec<ILit> = lits.iter().map(|&l| ILit::from_lit(l)).collect();
        ls.sort_by_key(|l| l.0);
        ls.dedup();
        if ls.windows(2).any(|w| w[0].var() == w[1].var()) {
            return true; // tautology: contains l and !l
        }
        // drop root-level false literals, detect satisfied clauses
        let mut filtered = Vec::with_capacity(ls.len());
        for &l in &ls {
            match self.value(l) {
                Value::True => return true,
                Value::False => {}
                Value::Undef => filtered.push(l),
            }
        }
        match filtered.len() {
            0 => {
                self.root_unsat = true;
                false
            }
            1 => {
                self.enqueue(filtered[0], None);
                if self.propagate().is_some() {
                    self.root_unsat = true;
                    false
                } else {
                    true
                }
            }
            _ => {
                self.attach(filtered, false);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<ILit>, learned: bool) -> ClauseRef {
        let cref = self.clauses.len();
        self.watches[lits[0].neg().idx()].push(cref);
        self.watches[lits[1].neg().idx()].push(cref);
        self.clauses.push(Clause { lits, learned, deleted: false });
        cref
    }

    /// Unit propagation over watched literals; returns a conflicting clause.
    fn propagate(&mut self) -> Option<ClauseRef> {
        while self.prop_head < self.trail.len() {
            let p = self.trail[self.prop_head];
            self.prop_head += 1;
            // clauses watching !p must be inspected
            let mut watch_list = std::mem::take(&mut self.watches[p.idx()]);
            let mut i = 0;
            while i < watch_list.len() {
                let cref = watch_list[i];
                if self.clauses[cref].deleted {
                    watch_list.swap_remove(i);
                    continue;
                }
                // make sure lits[1] is the false literal (!p ... p falsifies watcher of p.neg)
                let false_lit = p.neg();
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                if self.value(first) == Value::True {
                    i += 1;
                    continue;
                }
                // find a new watch
                let mut found = None;
                for k in 2..self.clauses[cref].lits.len() {
                    let l = self.clauses[cref].lits[k];
                    if self.value(l) != Value::False {
                        found = Some(k);
                        break;
                    }
                }
                if let Some(k) = found {
                    let l = self.clauses[cref].lits[k];
                    self.clauses[cref].lits.swap(1, k);
                    self.watches[l.neg().idx()].push(cref);
                    watch_list.swap_remove(i);
                    continue;
                }
                // unit or conflict
                if self.value(first) == Value::False {
                    self.watches[p.idx()] = watch_list;
                    return Some(cref);
                }
                self.enqueue(first, Some(cref));
                i += 1;
            }
            self.watches[p.idx()].extend(watch_list);
        }
        None
    }

    fn bump(&mut self, var: usize) {
        self.activity[var] += self.var_inc;
        if self.activity[var] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
    }

    fn decay(&mut self) {
        self.var_inc /= VAR_DECAY;
    }

    /// First-UIP conflict analysis; returns (learned clause, backtrack level).
    fn analyze(&mut self, conflict: ClauseRef) -> (Vec<ILit>, u32) {
        let mut learnt: Vec<ILit> = vec![ILit(0)]; // slot for the asserting literal
        let mut seen = vec![false; self.n_vars];
        let mut counter = 0usize;
        let mut p: Option<ILit> = None;
        let mut cref = conflict;
        let mut trail_idx = self.trail.len();

        loop {
            let start = if p.is_none() { 0 } else { 1 };
            let lits: Vec<ILit> = self.clauses[cref].lits[start..].to_vec();
            for q in lits {
                let v = q.var();
                if !seen[v] && self.level[v] > 0 {
                    seen[v] = true;
                    self.bump(v);
                    if self.level[v] == self.decision_level() {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            // pick next literal from the trail
            loop {
                trail_idx -= 1;
                if seen[self.trail[trail_idx].var()] {
                    break;
                }
            }
            let q = self.trail[trail_idx];
            seen[q.var()] = false;
            counter -= 1;
            if counter == 0 {
                learnt[0] = q.neg();
                break;
            }
            cref = self.reason[q.var()].expect("non-decision literal has a reason");
            p = Some(q);
        }

        let bt_level = if learnt.len() == 1 {
            0
        } else {
            // second-highest level; move it to slot 1 for watching
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var()] > self.level[learnt[max_i].var()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var()]
        };
        (learnt, bt_level)
    }

    fn backtrack(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for &l in &self.trail[lim..] {
            self.phase[l.var()] = l.positive();
            self.assigns[l.var()] = Value::Undef;
            self.reason[l.var()] = None;
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.prop_head = lim;
    }

    fn pick_branch_var(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for v in 0..self.n_vars {
            if self.assigns[v] == Value::Undef {
                match best {
                    None => best = Some(v),
                    Some(b) if self.activity[v] > self.activity[b] => best = Some(v),
                    _ => {}
                }
            }
        }
        best
    }

    fn reduce_db(&mut self) {
        // drop the longer half of non-reason learned clauses
        let mut lens: Vec<usize> = self
            .clauses
            .iter()
            .filter(|c| c.learned && !c.deleted && c.lits.len() > 2)
            .map(|c| c.lits.len())
            .collect();
        if lens.len() < 2 {
            return;
        }
        lens.sort_unstable();
        let median = lens[lens.len() / 2];
        let is_reason: Vec<bool> = {
            let mut r = vec![false; self.clauses.len()];
            for v in 0..self.n_vars {
                if let Some(cref) = self.reason[v] {
                    r[cref] = true;
                }
            }
            r
        };
        for (i, c) in self.clauses.iter_mut().enumerate() {
            if c.learned && !c.deleted && c.lits.len() > median.max(3) && !is_reason[i] {
                c.deleted = true;
                c.lits.clear();
                c.lits.shrink_to_fit();
            }
        }
    }

    fn luby(mut i: u64) -> u64 {
        // 1-based Luby sequence: 1,1,2,1,1,2,4,...
        debug_assert!(i >= 1);
        loop {
            let mut k = 1u64;
            while (1u64 << k) - 1 < i {
                k += 1;
            }
            if (1u64 << k) - 1 == i {
                return 1u64 << (k - 1);
            }
            i -= (1u64 << (k - 1)) - 1;
        }
    }

    /// CDCL search under assumptions.
    pub fn solve(
        &mut self,
        budget: SolveBudget,
        assumptions: &[Lit],
    ) -> (SolveResult, SolveStats) {
        let start = Instant::now();
        self.stats = SolveStats::default();
        if self.root_unsat {
            return (SolveResult::Unsat, self.stats);
        }
        let assumps: Vec<ILit> = assumptions.iter().map(|&l| ILit::from_lit(l)).collect();
        self.backtrack(0);
        if self.propagate().is_some() {
            self.root_unsat = true;
            return (SolveResult::Unsat, self.stats);
        }

        let mut restart_count = 0u64;
        let mut conflicts_until_restart = RESTART_BASE * Self::luby(restart_count + 1);
        let mut conflicts_since_restart = 0u64;

        loop {
            if let Some(conflict) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts_since_restart += 1;
                if self.decision_level() == 0 {
                    self.root_unsat = true;
                    self.stats.wall_ms = start.elapsed().as_millis() as u64;
                    return (SolveResult::Unsat, self.stats);
                }
                if self.decision_level() <= assumps.len() as u32 {
                    // conflict inside the assumption prefix
                    self.stats.wall_ms = start.elapsed().as_millis() as u64;
                    self.backtrack(0);
                    return (SolveResult::Unsat, self.stats);
                }
                let (learnt, bt) = self.analyze(conflict);
                self.backtrack(bt);
                let asserting = learnt[0];
                if learnt.len() == 1 {
                    match self.value(asserting) {
                        Value::Undef => self.enqueue(asserting, None),
                        Value::True => {}
                        Value::False => {
                            self.root_unsat = true;
                            self.stats.wall_ms = start.elapsed().as_millis() as u64;
                            return (SolveResult::Unsat, self.stats);
                        }
                    }
                } else {
                    let cref = self.attach(learnt, true);
                    self.learned_since_reduce += 1;
                    self.enqueue(asserting, Some(cref));
                }
                self.decay();

                if let Some(max_c) = budget.conflicts {
                    if self.stats.conflicts >= max_c {
                        self.backtrack(0);
                        self.stats.wall_ms = start.elapsed().as_millis() as u64;
                        return (SolveResult::Unknown(ExhaustedBound::Conflicts), self.stats);
                    }
                }
                if self.stats.conflicts % WALL_CHECK_INTERVAL == 0 {
                    if let Some(max_ms) = budget.wall_ms {
                        if start.elapsed().as_millis() as u64 >= max_ms {
                            self.backtrack(0);
                            self.stats.wall_ms = start.elapsed().as_millis() as u64;
                            return (SolveResult::Unknown(ExhaustedBound::WallClock), self.stats);
                        }
                    }
                }
                if self.learned_since_reduce >= 20_000 {
                    self.learned_since_reduce = 0;
                    self.reduce_db();
                }
                continue;
            }

            if conflicts_since_restart >= conflicts_until_restart {
                restart_count += 1;
                conflicts_since_restart = 0;
                conflicts_until_restart = RESTART_BASE * Self::luby(restart_count + 1);
                self.backtrack(0);
                continue;
            }

            // extend the assumption prefix first
            if (self.decision_level() as usize) < assumps.len() {
                let a = assumps[self.decision_level() as usize];
                match self.value(a) {
                    Value::True => {
                        self.trail_lim.push(self.trail.len());
                        continue;
                    }
                    Value::False => {
                        self.backtrack(0);
                        self.stats.wall_ms = start.elapsed().as_millis() as u64;
                        return (SolveResult::Unsat, self.stats);
                    }
                    Value::Undef => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(a, None);
                        self.stats.decisions += 1;
                        continue;
                    }
                }
            }

            match self.pick_branch_var() {
                None => {
                    // full model
                    let model: Vec<bool> =
                        self.assigns.iter().map(|v| matches!(v, Value::True)).collect();
                    self.stats.wall_ms = start.elapsed().as_millis() as u64;
                    self.backtrack(0);
                    return (SolveResult::Sat(model), self.stats);
                }
                Some(v) => {
                    self.stats.decisions += 1;
                    self.trail_lim.push(self.trail.len());
                    let lit = ILit((v as u32) * 2 + if self.phase[v] { 0 } else { 1 });
                    self.enqueue(lit, None);
                }
            }
        }
    }
}

/// Solve a CNF under assumptions with the given budget. Every SAT model is
/// re-checked against the clause list before it is returned.
pub fn solve(cnf: &Cnf, budget: SolveBudget, assumptions: &[Lit]) -> (SolveResult, SolveStats) {
    let mut solver = Solver::new(cnf.num_vars);
    for clause in &cnf.clauses {
        if clause.is_empty() {
            return (SolveResult::Unsat, SolveStats::default());
        }
        if !solver.add_clause(clause) {
            return (SolveResult::Unsat, SolveStats::default());
        }
    }
    let (result, stats) = solver.solve(budget, assumptions);
    if let SolveResult::Sat(ref model) = result {
        assert!(cnf.eval(model), "internal soundness: model fails clause re-check");
        for a in assumptions {
            assert!(
                model[(a.var() - 1) as usize] == a.is_positive(),
                "internal soundness: model violates assumption"
            );
        }
    }
    (result, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(v: i32) -> Lit {
        Lit::from_dimacs(v).unwrap()
    }

    fn cnf(num_vars: u32, clauses: &[&[i32]]) -> Cnf {
        let mut c = Cnf::new();
        c.num_vars = num_vars;
        for cl in clauses {
            c.clauses.push(cl.iter().map(|&v| lit(v)).collect());
        }
        c
    }

    #[test]
    fn unit_chain_sat() {
        let f = cnf(2, &[&[1, 2], &[-1]]);
        match solve(&f, SolveBudget::UNLIMITED, &[]).0 {
            SolveResult::Sat(m) => {
                assert!(!m[0]);
                assert!(m[1]);
            }
            other => panic!("expected SAT, got {other:?}"),
        }
    }

    #[test]
    fn contradiction_unsat() {
        let f = cnf(1, &[&[1], &[-1]]);
        assert_eq!(solve(&f, SolveBudget::UNLIMITED, &[]).0, SolveResult::Unsat);
    }

    fn pigeonhole(pigeons: u32, holes: u32) -> Cnf {
        let var = |p: u32, h: u32| Lit::new(p * holes + h + 1, true);
        let mut f = Cnf::new();
        f.num_vars = pigeons * holes;
        for p in 0..pigeons {
            f.clauses.push((0..holes).map(|h| var(p, h)).collect());
        }
        for h in 0..holes {
            for p1 in 0..pigeons {
                for p2 in (p1 + 1)..pigeons {
                    f.clauses.push(vec![!var(p1, h), !var(p2, h)]);
                }
            }
        }
        f
    }

    #[test]
    fn pigeonhole_4_into_3_unsat() {
        let f = pigeonhole(4, 3);
        assert_eq!(solve(&f, SolveBudget::UNLIMITED, &[]).0, SolveResult::Unsat);
    }

    #[test]
    fn assumptions_flip_result() {
        let f = cnf(2, &[&[1, 2]]);
        assert!(matches!(solve(&f, SolveBudget::UNLIMITED, &[lit(-1)]).0, SolveResult::Sat(_)));
        assert_eq!(
            solve(&f, SolveBudget::UNLIMITED, &[lit(-1), lit(-2)]).0,
            SolveResult::Unsat
        );
    }

    #[test]
    fn conflict_budget_gives_unknown() {
        let f = pigeonhole(7, 6);
        let budget = SolveBudget { wall_ms: None, conflicts: Some(1) };
        assert_eq!(
            solve(&f, budget, &[]).0,
            SolveResult::Unknown(ExhaustedBound::Conflicts)
        );
    }

    #[test]
    fn conflict_budget_is_deterministic() {
        let f = pigeonhole(8, 7);
        let budget = SolveBudget { wall_ms: None, conflicts: Some(200) };
        let a = solve(&f, budget, &[]);
        let b = solve(&f, budget, &[]);
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.conflicts, b.1.conflicts);
        assert_eq!(a.1.decisions, b.1.decisions);
    }

    /// Agreement with truth-table enumeration on random small formulas.
    #[test]
    fn agrees_with_enumeration() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let nv = rng.gen_range(1..8u32);
            let nc = rng.gen_range(1..20);
            let mut f = Cnf::new();
            f.num_vars = nv;
            for _ in 0..nc {
                let len = rng.gen_range(1..4);
                let clause: Vec<Lit> = (0..len)
                    .map(|_| Lit::new(rng.gen_range(1..=nv), rng.gen_bool(0.5)))
                    .collect();
                f.clauses.push(clause);
            }
            let brute_sat = (0..(1u32 << nv)).any(|m| {
                let model: Vec<bool> = (0..nv).map(|i| (m >> i) & 1 == 1).collect();
                f.eval(&model)
            });
            let result = solve(&f, SolveBudget::UNLIMITED, &[]).0;
            match result {
                SolveResult::Sat(_) => assert!(brute_sat),
                SolveResult::Unsat => assert!(!brute_sat),
                SolveResult::Unknown(_) => panic!("no budget set"),
            }
        }
    }
}
