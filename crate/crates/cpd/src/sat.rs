//! Self-contained CDCL satisfiability engine.
//!
//! Conflict-driven clause learning with two-watched-literal propagation,
//! activity-based branching, phase saving and Luby restarts. Clauses can be
//! added between solves (the all-solutions loop adds one blocking clause per
//! found assignment); learned state stays valid because additions only
//! strengthen the instance. Every satisfying assignment is re-verified
//! against all clauses before it is surfaced.

use std::fmt;

use crate::encode::Cnf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: usize, positive: bool) -> Lit {
        Lit(((var as u32) << 1) | (!positive as u32))
    }

    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn code(self) -> usize {
        self.0 as usize
    }

    /// From a DIMACS-style signed id (1-based, sign = polarity).
    pub fn from_dimacs(x: i32) -> Lit {
        Lit::new((x.unsigned_abs() - 1) as usize, x > 0)
    }

    pub fn to_dimacs(self) -> i32 {
        let v = (self.var() + 1) as i32;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// Outcome of one solve call. `Indeterminate` is returned only when a
/// conflict budget was set and exhausted; it is distinct from `Unsat`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    /// Total assignment indexed by `var - 1`.
    Sat(Vec<bool>),
    Unsat,
    Indeterminate,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum SatError {
    #[error("malformed clause: {0}")]
    MalformedClause(String),
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    activity: f64,
}

const INVALID: u32 = u32::MAX;

/// Indexed max-heap over variable activities, ties broken by variable index
/// for determinism.
struct VarOrder {
    heap: Vec<u32>,
    pos: Vec<u32>,
}

impl VarOrder {
    fn new(n: usize) -> Self {
        let mut vo = VarOrder {
            heap: Vec::with_capacity(n),
            pos: vec![INVALID; n],
        };
        for v in 0..n {
            vo.heap.push(v as u32);
            vo.pos[v] = v as u32;
        }
        vo
    }

    fn better(a: u32, b: u32, act: &[f64]) -> bool {
        let (aa, ab) = (act[a as usize], act[b as usize]);
        aa > ab || (aa == ab && a < b)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if Self::better(self.heap[i], self.heap[parent], act) {
                self.heap.swap(i, parent);
                self.pos[self.heap[i] as usize] = i as u32;
                self.pos[self.heap[parent] as usize] = parent as u32;
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let best = if r < self.heap.len() && Self::better(self.heap[r], self.heap[l], act) {
                r
            } else {
                l
            };
            if Self::better(self.heap[best], self.heap[i], act) {
                self.heap.swap(i, best);
                self.pos[self.heap[i] as usize] = i as u32;
                self.pos[self.heap[best] as usize] = best as u32;
                i = best;
            } else {
                break;
            }
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        self.pos[top as usize] = INVALID;
        let last = self.heap.pop().unwrap();
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.sift_down(0, act);
        }
        Some(top as usize)
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.pos[v] != INVALID {
            return;
        }
        self.pos[v] = self.heap.len() as u32;
        self.heap.push(v as u32);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn update(&mut self, v: usize, act: &[f64]) {
        let p = self.pos[v];
        if p != INVALID {
            self.sift_up(p as usize, act);
        }
    }
}

/// An incremental solver session over one CNF instance. Single-owner;
/// independent sessions may run in parallel.
pub struct Session {
    num_vars: usize,
    clauses: Vec<Clause>,
    watches: Vec<Vec<u32>>,
    assign: Vec<Option<bool>>,
    phase: Vec<bool>,
    level: Vec<u32>,
    reason: Vec<Option<u32>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    order: VarOrder,
    ok: bool,
    num_learnt: usize,
    conflicts: u64,
    conflict_budget: Option<u64>,
    rng: u64,
    seen: Vec<bool>,
}

impl Session {
    /// Build a session over the clauses of `cnf`.
    pub fn new(cnf: &Cnf) -> Result<Session, SatError> {
        let n = cnf.num_vars as usize;
        let mut s = Session {
            num_vars: n,
            clauses: Vec::with_capacity(cnf.clauses.len()),
            watches: vec![Vec::new(); 2 * n],
            assign: vec![None; n],
            phase: vec![false; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            var_inc: 1.0,
            cla_inc: 1.0,
            order: VarOrder::new(n),
            ok: true,
            num_learnt: 0,
            conflicts: 0,
            conflict_budget: None,
            rng: 0,
            seen: vec![false; n],
        };
        for c in &cnf.clauses {
            s.add_clause(c)?;
        }
        Ok(s)
    }

    /// Seed for occasional randomized branching. Zero (the default) keeps
    /// branching purely activity-ordered.
    pub fn set_seed(&mut self, seed: u64) {
        self.rng = seed;
    }

    /// Abort a solve with `Indeterminate` after this many conflicts.
    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.conflict_budget = budget;
    }

    pub fn num_conflicts(&self) -> u64 {
        self.conflicts
    }

    fn value(&self, l: Lit) -> Option<bool> {
        self.assign[l.var()].map(|v| v == l.is_positive())
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Add a clause permanently. Literal 0 or one beyond the variable count
    /// is rejected. May only strengthen the instance.
    pub fn add_clause(&mut self, lits: &[i32]) -> Result<(), SatError> {
        for &x in lits {
            if x == 0 {
                return Err(SatError::MalformedClause("literal 0".into()));
            }
            if x.unsigned_abs() as usize > self.num_vars {
                return Err(SatError::MalformedClause(format!(
                    "literal {x} out of range (num_vars = {})",
                    self.num_vars
                )));
            }
        }
        if !self.ok {
            return Ok(());
        }
        self.cancel_until(0);
        let mut c: Vec<Lit> = lits.iter().map(|&x| Lit::from_dimacs(x)).collect();
        c.sort_unstable_by_key(|l| l.0);
        c.dedup();
        // Tautology or already satisfied at the root level: nothing to do.
        if c.windows(2).any(|w| w[0].var() == w[1].var()) {
            return Ok(());
        }
        if c.iter().any(|&l| self.value(l) == Some(true)) {
            return Ok(());
        }
        c.retain(|&l| self.value(l) != Some(false));
        match c.len() {
            0 => {
                self.ok = false;
            }
            1 => {
                self.enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                self.attach(Clause {
                    lits: c,
                    learnt: false,
                    activity: 0.0,
                });
            }
        }
        Ok(())
    }

    fn attach(&mut self, c: Clause) -> u32 {
        let ci = self.clauses.len() as u32;
        self.watches[c.lits[0].code()].push(ci);
        self.watches[c.lits[1].code()].push(ci);
        if c.learnt {
            self.num_learnt += 1;
        }
        self.clauses.push(c);
        ci
    }

    fn enqueue(&mut self, l: Lit, reason: Option<u32>) {
        debug_assert!(self.value(l).is_none());
        self.assign[l.var()] = Some(l.is_positive());
        self.level[l.var()] = self.decision_level();
        self.reason[l.var()] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            // Clauses in which !p is watched may have become unit or false.
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            while i < ws.len() {
                let ci = ws[i];
                let c = &mut self.clauses[ci as usize];
                if c.lits[0] == false_lit {
                    c.lits.swap(0, 1);
                }
                debug_assert_eq!(c.lits[1], false_lit);
                let first = c.lits[0];
                if self.assign[first.var()].map(|v| v == first.is_positive()) == Some(true) {
                    i += 1;
                    continue;
                }
                let mut found = false;
                for k in 2..c.lits.len() {
                    let l = c.lits[k];
                    if self.assign[l.var()].map(|v| v == l.is_positive()) != Some(false) {
                        c.lits.swap(1, k);
                        let new_watch = c.lits[1];
                        self.watches[new_watch.code()].push(ci);
                        ws.swap_remove(i);
                        found = true;
                        break;
                    }
                }
                if found {
                    continue;
                }
                if self.assign[first.var()].map(|v| v == first.is_positive()) == Some(false) {
                    // Conflict: restore the remaining watch list first.
                    self.watches[false_lit.code()] = ws;
                    self.qhead = self.trail.len();
                    return Some(ci);
                }
                self.enqueue(first, Some(ci));
                i += 1;
            }
            self.watches[false_lit.code()] = ws;
        }
        None
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let bound = self.trail_lim[level as usize];
        while self.trail.len() > bound {
            let l = self.trail.pop().unwrap();
            let v = l.var();
            self.phase[v] = l.is_positive();
            self.assign[v] = None;
            self.reason[v] = None;
            self.order.insert(v, &self.activity);
        }
        self.trail_lim.truncate(level as usize);
        self.qhead = self.trail.len();
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.order.update(v, &self.activity);
    }

    fn bump_clause(&mut self, ci: u32) {
        let c = &mut self.clauses[ci as usize];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in &mut self.clauses {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first) and the backtrack level.
    fn analyze(&mut self, confl: u32) -> (Vec<Lit>, u32) {
        let current = self.decision_level();
        let mut learnt: Vec<Lit> = Vec::new();
        let mut counter = 0usize;
        let mut p: Option<Lit> = None;
        let mut reason_idx = confl;
        let mut trail_pos = self.trail.len();

        loop {
            self.bump_clause(reason_idx);
            let lits: Vec<Lit> = self.clauses[reason_idx as usize].lits.clone();
            for q in lits {
                if Some(q) == p.map(|p| p) {
                    continue;
                }
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] == current {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            // Next literal to resolve on: most recent seen trail entry.
            loop {
                trail_pos -= 1;
                if self.seen[self.trail[trail_pos].var()] {
                    break;
                }
            }
            let lit = self.trail[trail_pos];
            self.seen[lit.var()] = false;
            counter -= 1;
            if counter == 0 {
                p = Some(lit);
                break;
            }
            p = Some(lit);
            reason_idx = self.reason[lit.var()].expect("non-decision literal has a reason");
        }

        let asserting = !p.unwrap();
        let mut out = Vec::with_capacity(learnt.len() + 1);
        out.push(asserting);
        out.extend(learnt.iter().copied());
        for l in &learnt {
            self.seen[l.var()] = false;
        }

        let back_level = if out.len() == 1 {
            0
        } else {
            // Second-highest level literal watched next to the asserting one.
            let mut max_i = 1;
            for i in 2..out.len() {
                if self.level[out[i].var()] > self.level[out[max_i].var()] {
                    max_i = i;
                }
            }
            out.swap(1, max_i);
            self.level[out[1].var()]
        };
        (out, back_level)
    }

    fn next_rand(&mut self) -> u64 {
        let mut x = self.rng;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.rng = x;
        x
    }

    fn pick_branch_var(&mut self) -> Option<usize> {
        if self.rng != 0 && self.next_rand() % 50 == 0 {
            let start = (self.next_rand() % self.num_vars as u64) as usize;
            for off in 0..self.num_vars {
                let v = (start + off) % self.num_vars;
                if self.assign[v].is_none() {
                    return Some(v);
                }
            }
            return None;
        }
        loop {
            let v = self.order.pop(&self.activity)?;
            if self.assign[v].is_none() {
                return Some(v);
            }
        }
    }

    /// Drop the least active half of the learnt clauses (binary and locked
    /// ones kept). Runs at decision level 0 only.
    fn reduce_db(&mut self) {
        debug_assert_eq!(self.decision_level(), 0);
        let mut acts: Vec<f64> = self
            .clauses
            .iter()
            .filter(|c| c.learnt && c.lits.len() > 2)
            .map(|c| c.activity)
            .collect();
        if acts.is_empty() {
            return;
        }
        acts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let threshold = acts[acts.len() / 2];
        let locked: Vec<Option<u32>> = self.reason.clone();
        let locked_set: std::collections::HashSet<u32> =
            locked.iter().flatten().copied().collect();

        let mut remap: Vec<Option<u32>> = Vec::with_capacity(self.clauses.len());
        let mut kept: Vec<Clause> = Vec::with_capacity(self.clauses.len());
        let mut dropped = 0usize;
        for (i, c) in self.clauses.drain(..).enumerate() {
            let deletable = c.learnt
                && c.lits.len() > 2
                && c.activity <= threshold
                && !locked_set.contains(&(i as u32))
                && dropped * 2 < acts.len();
            if deletable {
                remap.push(None);
                dropped += 1;
            } else {
                remap.push(Some(kept.len() as u32));
                kept.push(c);
            }
        }
        self.clauses = kept;
        self.num_learnt -= dropped;
        for w in &mut self.watches {
            w.clear();
        }
        for (ci, c) in self.clauses.iter().enumerate() {
            self.watches[c.lits[0].code()].push(ci as u32);
            self.watches[c.lits[1].code()].push(ci as u32);
        }
        for r in &mut self.reason {
            *r = r.and_then(|old| remap[old as usize]);
        }
    }

    /// Complete search: `Sat` with a verified total assignment, `Unsat`, or
    /// `Indeterminate` on budget exhaustion. Deterministic for a fixed seed
    /// and clause insertion order.
    pub fn solve(&mut self) -> SolveResult {
        if !self.ok {
            return SolveResult::Unsat;
        }
        self.cancel_until(0);
        if self.propagate().is_some() {
            self.ok = false;
            return SolveResult::Unsat;
        }
        let budget_start = self.conflicts;
        let mut restart_idx = 0u32;
        let mut conflicts_since_restart = 0u64;
        let mut restart_limit = 100 * luby(restart_idx);

        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                conflicts_since_restart += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SolveResult::Unsat;
                }
                if let Some(b) = self.conflict_budget {
                    if self.conflicts - budget_start >= b {
                        self.cancel_until(0);
                        return SolveResult::Indeterminate;
                    }
                }
                let (learnt, back_level) = self.analyze(confl);
                self.cancel_until(back_level);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let ci = self.attach(Clause {
                        lits: learnt.clone(),
                        learnt: true,
                        activity: self.cla_inc,
                    });
                    self.enqueue(learnt[0], Some(ci));
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
            } else if conflicts_since_restart >= restart_limit {
                restart_idx += 1;
                conflicts_since_restart = 0;
                restart_limit = 100 * luby(restart_idx);
                self.cancel_until(0);
                if self.num_learnt > 4000 + self.clauses.len() / 4 {
                    self.reduce_db();
                }
            } else {
                match self.pick_branch_var() {
                    None => {
                        let model: Vec<bool> =
                            self.assign.iter().map(|a| a.unwrap()).collect();
                        self.verify(&model);
                        return SolveResult::Sat(model);
                    }
                    Some(v) => {
                        self.trail_lim.push(self.trail.len());
                        let lit = Lit::new(v, self.phase[v]);
                        self.enqueue(lit, None);
                    }
                }
            }
        }
    }

    fn verify(&self, model: &[bool]) {
        for (ci, c) in self.clauses.iter().enumerate() {
            let sat = c
                .lits
                .iter()
                .any(|l| model[l.var()] == l.is_positive());
            assert!(sat, "internal error: clause {ci} falsified by returned model");
        }
    }
}

fn luby(i: u32) -> u64 {
    // Sequence 1,1,2,1,1,2,4,1,1,2,1,1,2,4,8,...
    let mut size = 1u32;
    let mut seq = 0u32;
    while size < i + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    let mut x = i;
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1u64 << seq
}

// ---------------------------------------------------------------------------
// DIMACS
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, thiserror::Error)]
#[error("dimacs line {line}: {message}")]
pub struct DimacsError {
    pub line: usize,
    pub message: String,
}

/// Standard `p cnf V C` text, clauses zero-terminated, one per line.
pub fn export_dimacs(cnf: &Cnf) -> String {
    let mut out = String::new();
    out.push_str(&format!("p cnf {} {}\n", cnf.num_vars, cnf.clauses.len()));
    for c in &cnf.clauses {
        for l in c {
            out.push_str(&format!("{l} "));
        }
        out.push_str("0\n");
    }
    out
}

/// Inverse of [`export_dimacs`] up to clause order preservation. The state
/// variable map is not representable in DIMACS and comes back empty.
pub fn import_dimacs(text: &str) -> Result<Cnf, DimacsError> {
    let mut num_vars: Option<u32> = None;
    let mut expected_clauses = 0usize;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('p') {
            if num_vars.is_some() {
                return Err(DimacsError {
                    line: line_no,
                    message: "duplicate header".into(),
                });
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(DimacsError {
                    line: line_no,
                    message: format!("malformed header `{line}`"),
                });
            }
            num_vars = Some(parts[2].parse().map_err(|_| DimacsError {
                line: line_no,
                message: format!("bad variable count `{}`", parts[2]),
            })?);
            expected_clauses = parts[3].parse().map_err(|_| DimacsError {
                line: line_no,
                message: format!("bad clause count `{}`", parts[3]),
            })?;
            continue;
        }
        let nv = num_vars.ok_or(DimacsError {
            line: line_no,
            message: "clause before header".into(),
        })?;
        for tok in line.split_whitespace() {
            let x: i32 = tok.parse().map_err(|_| DimacsError {
                line: line_no,
                message: format!("bad literal `{tok}`"),
            })?;
            if x == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                if x.unsigned_abs() > nv {
                    return Err(DimacsError {
                        line: line_no,
                        message: format!("literal {x} exceeds {nv} variables"),
                    });
                }
                current.push(x);
            }
        }
    }
    let num_vars = num_vars.ok_or(DimacsError {
        line: 1,
        message: "missing `p cnf` header".into(),
    })?;
    if !current.is_empty() {
        return Err(DimacsError {
            line: text.lines().count(),
            message: "unterminated clause".into(),
        });
    }
    if clauses.len() != expected_clauses {
        return Err(DimacsError {
            line: text.lines().count(),
            message: format!(
                "header promises {expected_clauses} clauses, found {}",
                clauses.len()
            ),
        });
    }
    Ok(Cnf {
        num_vars,
        clauses,
        state: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cnf(num_vars: u32, clauses: Vec<Vec<i32>>) -> Cnf {
        Cnf {
            num_vars,
            clauses,
            state: None,
        }
    }

    #[test]
    fn empty_cnf_is_sat() {
        let mut s = Session::new(&cnf(0, vec![])).unwrap();
        assert_eq!(s.solve(), SolveResult::Sat(vec![]));
    }

    #[test]
    fn empty_clause_is_unsat() {
        let mut s = Session::new(&cnf(1, vec![vec![]])).unwrap();
        assert_eq!(s.solve(), SolveResult::Unsat);
    }

    #[test]
    fn contradiction_is_unsat() {
        let mut s = Session::new(&cnf(1, vec![vec![1], vec![-1]])).unwrap();
        assert_eq!(s.solve(), SolveResult::Unsat);
    }

    #[test]
    fn unit_propagation_forces_y() {
        let mut s = Session::new(&cnf(2, vec![vec![1, 2], vec![-1]])).unwrap();
        match s.solve() {
            SolveResult::Sat(m) => {
                assert!(!m[0]);
                assert!(m[1]);
            }
            other => panic!("expected Sat, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_literal_rejected() {
        assert!(Session::new(&cnf(1, vec![vec![2]])).is_err());
        assert!(Session::new(&cnf(1, vec![vec![0]])).is_err());
    }

    /// Pigeonhole: 4 pigeons, 3 holes. Cross-checked against brute force
    /// over all 2^12 assignments.
    #[test]
    fn pigeonhole_4_into_3_unsat() {
        // var(p, h) = p * 3 + h + 1
        let v = |p: i32, h: i32| p * 3 + h + 1;
        let mut clauses = Vec::new();
        for p in 0..4 {
            clauses.push((0..3).map(|h| v(p, h)).collect::<Vec<_>>());
        }
        for h in 0..3 {
            for p1 in 0..4 {
                for p2 in (p1 + 1)..4 {
                    clauses.push(vec![-v(p1, h), -v(p2, h)]);
                }
            }
        }
        let instance = cnf(12, clauses.clone());
        // Brute force confirms unsatisfiability.
        let brute_sat = (0..1u32 << 12).any(|bits| {
            clauses.iter().all(|c| {
                c.iter()
                    .any(|&l| (bits >> (l.unsigned_abs() - 1)) & 1 == u32::from(l > 0))
            })
        });
        assert!(!brute_sat);
        let mut s = Session::new(&instance).unwrap();
        assert_eq!(s.solve(), SolveResult::Unsat);
    }

    #[test]
    fn agrees_with_truth_table_on_random_cnfs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for round in 0..300 {
            let nv = rng.gen_range(1..=12u32);
            let nc = rng.gen_range(1..=(3 * nv as usize + 2));
            let clauses: Vec<Vec<i32>> = (0..nc)
                .map(|_| {
                    let len = rng.gen_range(1..=3usize);
                    (0..len)
                        .map(|_| {
                            let v = rng.gen_range(1..=nv) as i32;
                            if rng.gen_bool(0.5) {
                                v
                            } else {
                                -v
                            }
                        })
                        .collect()
                })
                .collect();
            let brute_sat = (0..1u64 << nv).any(|bits| {
                clauses.iter().all(|c| {
                    c.iter()
                        .any(|&l| (bits >> (l.unsigned_abs() - 1)) & 1 == u64::from(l > 0))
                })
            });
            let mut s = Session::new(&cnf(nv, clauses)).unwrap();
            let got = s.solve();
            match (brute_sat, got) {
                (true, SolveResult::Sat(_)) | (false, SolveResult::Unsat) => {}
                (want, got) => panic!("round {round}: brute={want}, solver={got:?}"),
            }
        }
    }

    #[test]
    fn blocking_clause_changes_the_model() {
        let mut s = Session::new(&cnf(3, vec![vec![1, 2, 3]])).unwrap();
        let SolveResult::Sat(m1) = s.solve() else {
            panic!("expected Sat");
        };
        let block: Vec<i32> = m1
            .iter()
            .enumerate()
            .map(|(i, &v)| if v { -(i as i32 + 1) } else { i as i32 + 1 })
            .collect();
        s.add_clause(&block).unwrap();
        let SolveResult::Sat(m2) = s.solve() else {
            panic!("expected Sat after blocking");
        };
        assert_ne!(m1, m2);
    }

    #[test]
    fn unit_clause_addition_propagates() {
        let mut s = Session::new(&cnf(2, vec![vec![1, 2]])).unwrap();
        s.add_clause(&[-1]).unwrap();
        match s.solve() {
            SolveResult::Sat(m) => assert!(m[1]),
            other => panic!("expected Sat, got {other:?}"),
        }
    }

    #[test]
    fn unsat_is_monotone_under_additions() {
        let mut s = Session::new(&cnf(2, vec![vec![1], vec![-1]])).unwrap();
        assert_eq!(s.solve(), SolveResult::Unsat);
        s.add_clause(&[2]).unwrap();
        assert_eq!(s.solve(), SolveResult::Unsat);
    }

    #[test]
    fn deterministic_models() {
        let instance = cnf(4, vec![vec![1, 2], vec![-2, 3], vec![-3, -4], vec![2, 4]]);
        let mut a = Session::new(&instance).unwrap();
        let mut b = Session::new(&instance).unwrap();
        assert_eq!(a.solve(), b.solve());
    }

    #[test]
    fn conflict_budget_yields_indeterminate() {
        // Hard-ish pigeonhole so at least one conflict occurs.
        let v = |p: i32, h: i32| p * 4 + h + 1;
        let mut clauses = Vec::new();
        for p in 0..5 {
            clauses.push((0..4).map(|h| v(p, h)).collect::<Vec<_>>());
        }
        for h in 0..4 {
            for p1 in 0..5 {
                for p2 in (p1 + 1)..5 {
                    clauses.push(vec![-v(p1, h), -v(p2, h)]);
                }
            }
        }
        let mut s = Session::new(&cnf(20, clauses)).unwrap();
        s.set_conflict_budget(Some(1));
        assert_eq!(s.solve(), SolveResult::Indeterminate);
        s.set_conflict_budget(None);
        assert_eq!(s.solve(), SolveResult::Unsat);
    }

    #[test]
    fn dimacs_one_var_one_clause() {
        let c = cnf(1, vec![vec![1]]);
        assert_eq!(export_dimacs(&c), "p cnf 1 1\n1 0\n");
    }

    #[test]
    fn dimacs_roundtrip() {
        let c = cnf(4, vec![vec![1, -2], vec![3, 4, -1], vec![-4]]);
        let back = import_dimacs(&export_dimacs(&c)).unwrap();
        assert_eq!(back.num_vars, c.num_vars);
        assert_eq!(back.clauses, c.clauses);
    }

    #[test]
    fn malformed_header_is_an_error() {
        let err = import_dimacs("p cnf one 2\n1 0\n").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(import_dimacs("1 0\n").is_err());
        assert!(import_dimacs("p cnf 1 2\n1 0\n").is_err());
    }
}
