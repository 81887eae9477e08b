//! Compilation of a model into propositional logic.
//!
//! One variable per (step, box) states "this car sits in this box at this
//! step". The one-step relation is a disjunction over every individually
//! firable transition, every sync group, and a stutter case that is enabled
//! only when nothing can fire. Unrolling k steps from the initial condition
//! makes satisfying assignments correspond to runs; a blocking clause per
//! found assignment drives all-solutions enumeration.

use crate::analyze::SceneFilter;
use crate::model::{BoxRef, Guard, Model};
use crate::positions::{self, Infeasible};

/// The propositional variable for box `box_ref` at step `step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepVar {
    pub step: u32,
    pub box_ref: BoxRef,
}

/// Bijection between step variables and DIMACS ids `1..=num_state_vars`,
/// step-major in canonical box order. Tseitin auxiliaries live above.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarMap {
    pub num_boxes: usize,
    /// Number of scenes, i.e. k + 1.
    pub steps: u32,
}

impl VarMap {
    pub fn new(num_boxes: usize, k: u32) -> Self {
        VarMap {
            num_boxes,
            steps: k + 1,
        }
    }

    pub fn num_state_vars(&self) -> u32 {
        self.steps * self.num_boxes as u32
    }

    pub fn id(&self, v: StepVar) -> u32 {
        debug_assert!(v.step < self.steps && v.box_ref < self.num_boxes);
        v.step * self.num_boxes as u32 + v.box_ref as u32 + 1
    }

    pub fn step_var(&self, id: u32) -> Option<StepVar> {
        if id == 0 || id > self.num_state_vars() {
            return None;
        }
        let z = id - 1;
        Some(StepVar {
            step: z / self.num_boxes as u32,
            box_ref: (z % self.num_boxes as u32) as usize,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Var(StepVar),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn var(step: u32, box_ref: BoxRef) -> Formula {
        Formula::Var(StepVar { step, box_ref })
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn and(fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => Formula::True,
            1 => fs.into_iter().next().unwrap(),
            _ => Formula::And(fs),
        }
    }

    pub fn or(fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => Formula::False,
            1 => fs.into_iter().next().unwrap(),
            _ => Formula::Or(fs),
        }
    }

    pub fn node_count(&self) -> usize {
        1 + match self {
            Formula::True | Formula::False | Formula::Var(_) => 0,
            Formula::Not(f) => f.node_count(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(|f| f.node_count()).sum(),
            Formula::Iff(a, b) => a.node_count() + b.node_count(),
        }
    }

    /// Evaluate under a state-variable assignment (used by tests as the
    /// truth-table oracle).
    pub fn eval(&self, assign: &dyn Fn(StepVar) -> bool) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Var(v) => assign(*v),
            Formula::Not(f) => !f.eval(assign),
            Formula::And(fs) => fs.iter().all(|f| f.eval(assign)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(assign)),
            Formula::Iff(a, b) => a.eval(assign) == b.eval(assign),
        }
    }
}

// ---------------------------------------------------------------------------
// Model encoding
// ---------------------------------------------------------------------------

/// I(S): the initial box of every car holds a token, every other box is
/// empty. Exactly one literal per box.
pub fn encode_initial(m: &Model) -> Formula {
    let mut lits = Vec::with_capacity(m.num_boxes());
    for b in 0..m.num_boxes() {
        let v = Formula::var(0, b);
        if m.initial_box(m.box_info(b).car) == b {
            lits.push(v);
        } else {
            lits.push(Formula::not(v));
        }
    }
    Formula::and(lits)
}

/// T(S_j, S_{j+1}): one individually fired transition, one sync group, or
/// the deadlocked stutter.
pub fn encode_step(m: &Model, j: u32) -> Formula {
    let pre = |b: BoxRef| Formula::var(j, b);
    let post = |b: BoxRef| Formula::var(j + 1, b);
    let mut disjuncts = Vec::new();

    for (ti, t) in m.transitions().iter().enumerate() {
        if m.sync_of(ti).is_some() {
            continue;
        }
        let mut conj = Vec::new();
        match t.guard {
            Guard::None => {}
            Guard::Exists(c) => conj.push(pre(c)),
            Guard::Absent(c) => conj.push(Formula::not(pre(c))),
        }
        conj.push(pre(t.src));
        if t.src != t.dst {
            conj.push(Formula::not(post(t.src)));
        }
        conj.push(post(t.dst));
        for b in 0..m.num_boxes() {
            if b != t.src && b != t.dst {
                conj.push(Formula::iff(pre(b), post(b)));
            }
        }
        disjuncts.push(Formula::and(conj));
    }

    for g in m.syncs() {
        let mut conj = Vec::new();
        let mut touched = vec![false; m.num_boxes()];
        for &ti in g {
            let t = &m.transitions()[ti];
            conj.push(pre(t.src));
            if t.src != t.dst {
                conj.push(Formula::not(post(t.src)));
            }
            conj.push(post(t.dst));
            touched[t.src] = true;
            touched[t.dst] = true;
        }
        for b in 0..m.num_boxes() {
            if !touched[b] {
                conj.push(Formula::iff(pre(b), post(b)));
            }
        }
        disjuncts.push(Formula::and(conj));
    }

    // D(S, S'): everything stays put, and nothing could have fired.
    let mut stutter = Vec::new();
    for b in 0..m.num_boxes() {
        stutter.push(Formula::iff(pre(b), post(b)));
    }
    for (ti, t) in m.transitions().iter().enumerate() {
        if m.sync_of(ti).is_some() {
            continue;
        }
        match t.guard {
            Guard::None => stutter.push(Formula::not(pre(t.src))),
            Guard::Exists(c) => {
                stutter.push(Formula::not(Formula::and(vec![pre(t.src), pre(c)])))
            }
            Guard::Absent(c) => stutter.push(Formula::not(Formula::and(vec![
                pre(t.src),
                Formula::not(pre(c)),
            ]))),
        }
    }
    for g in m.syncs() {
        let empties = g
            .iter()
            .map(|&ti| Formula::not(pre(m.transitions()[ti].src)))
            .collect();
        stutter.push(Formula::or(empties));
    }
    disjuncts.push(Formula::and(stutter));

    Formula::or(disjuncts)
}

/// The k-step unrolling I(S_0) ∧ T(S_0,S_1) ∧ … ∧ T(S_{k-1},S_k).
pub fn encode_unrolled(m: &Model, k: u32) -> Formula {
    let mut conj = vec![encode_initial(m)];
    for j in 0..k {
        conj.push(encode_step(m, j));
    }
    Formula::and(conj)
}

#[derive(Debug, thiserror::Error)]
pub enum FilterError {
    #[error("filter needs resolved positions: {0}")]
    Positions(#[from] Infeasible),
}

/// Constrain all steps `0..=k` by a scene filter.
pub fn encode_filter(m: &Model, f: &SceneFilter, k: u32) -> Result<Formula, FilterError> {
    match f {
        SceneFilter::DistanceBound(d) => {
            let pos = positions::resolve_positions(m)?;
            let mut conj = Vec::new();
            for b1 in 0..m.num_boxes() {
                for b2 in (b1 + 1)..m.num_boxes() {
                    if m.box_info(b1).car == m.box_info(b2).car {
                        continue;
                    }
                    let gap = (pos.get(b1) as i64 - pos.get(b2) as i64).unsigned_abs();
                    if gap >= *d as u64 {
                        for j in 0..=k {
                            conj.push(Formula::not(Formula::and(vec![
                                Formula::var(j, b1),
                                Formula::var(j, b2),
                            ])));
                        }
                    }
                }
            }
            Ok(Formula::and(conj))
        }
        SceneFilter::RequireCollision => {
            let pairs = crate::analyze::collision_pairs(m)?;
            let mut disj = Vec::new();
            for (b1, b2) in pairs {
                for j in 0..=k {
                    disj.push(Formula::and(vec![
                        Formula::var(j, b1),
                        Formula::var(j, b2),
                    ]));
                }
            }
            Ok(Formula::or(disj))
        }
        SceneFilter::ForbidCollision => {
            let pairs = crate::analyze::collision_pairs(m)?;
            let mut conj = Vec::new();
            for (b1, b2) in pairs {
                for j in 0..=k {
                    conj.push(Formula::not(Formula::and(vec![
                        Formula::var(j, b1),
                        Formula::var(j, b2),
                    ])));
                }
            }
            Ok(Formula::and(conj))
        }
        SceneFilter::Occupancy(id) => {
            let b = m
                .find_box(id)
                .map(|b| (0..=k).map(|j| Formula::var(j, b)).collect())
                .unwrap_or_default();
            Ok(Formula::or(b))
        }
        SceneFilter::And(fs) => {
            let mut conj = Vec::new();
            for f in fs {
                conj.push(encode_filter(m, f, k)?);
            }
            Ok(Formula::and(conj))
        }
    }
}

// ---------------------------------------------------------------------------
// CNF / Tseitin
// ---------------------------------------------------------------------------

/// Clausal form. Literals are DIMACS-style signed ids; `state` maps ids of
/// state variables back to (step, box) when the CNF came from a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<i32>>,
    pub state: Option<VarMap>,
}

/// Equisatisfiable clausal conversion introducing one auxiliary variable per
/// connective, defined in both directions. Clause count stays linear in the
/// formula size.
pub fn to_cnf(f: &Formula, map: VarMap) -> Cnf {
    let mut cnf = Cnf {
        num_vars: map.num_state_vars(),
        clauses: Vec::new(),
        state: Some(map),
    };
    match simplify(f) {
        Formula::True => cnf,
        Formula::False => {
            cnf.clauses.push(vec![]);
            cnf
        }
        g => {
            let root = tseitin(&g, &map, &mut cnf);
            cnf.clauses.push(vec![root]);
            cnf
        }
    }
}

/// Constant folding so the clausal core never sees True/False.
fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Var(_) => f.clone(),
        Formula::Not(g) => match simplify(g) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            g => Formula::not(g),
        },
        Formula::And(fs) => {
            let mut out = Vec::new();
            for g in fs {
                match simplify(g) {
                    Formula::True => {}
                    Formula::False => return Formula::False,
                    g => out.push(g),
                }
            }
            Formula::and(out)
        }
        Formula::Or(fs) => {
            let mut out = Vec::new();
            for g in fs {
                match simplify(g) {
                    Formula::False => {}
                    Formula::True => return Formula::True,
                    g => out.push(g),
                }
            }
            Formula::or(out)
        }
        Formula::Iff(a, b) => match (simplify(a), simplify(b)) {
            (Formula::True, g) | (g, Formula::True) => g,
            (Formula::False, g) | (g, Formula::False) => match g {
                Formula::Not(inner) => *inner,
                g => Formula::not(g),
            },
            (a, b) => Formula::iff(a, b),
        },
    }
}

fn tseitin(f: &Formula, map: &VarMap, cnf: &mut Cnf) -> i32 {
    match f {
        Formula::Var(v) => map.id(*v) as i32,
        Formula::Not(g) => -tseitin(g, map, cnf),
        Formula::And(fs) => {
            let lits: Vec<i32> = fs.iter().map(|g| tseitin(g, map, cnf)).collect();
            cnf.num_vars += 1;
            let a = cnf.num_vars as i32;
            let mut long = Vec::with_capacity(lits.len() + 1);
            long.push(a);
            for l in lits {
                cnf.clauses.push(vec![-a, l]);
                long.push(-l);
            }
            cnf.clauses.push(long);
            a
        }
        Formula::Or(fs) => {
            let lits: Vec<i32> = fs.iter().map(|g| tseitin(g, map, cnf)).collect();
            cnf.num_vars += 1;
            let a = cnf.num_vars as i32;
            let mut long = Vec::with_capacity(lits.len() + 1);
            long.push(-a);
            for l in lits {
                cnf.clauses.push(vec![a, -l]);
                long.push(l);
            }
            cnf.clauses.push(long);
            a
        }
        Formula::Iff(x, y) => {
            let lx = tseitin(x, map, cnf);
            let ly = tseitin(y, map, cnf);
            cnf.num_vars += 1;
            let a = cnf.num_vars as i32;
            cnf.clauses.push(vec![-a, -lx, ly]);
            cnf.clauses.push(vec![-a, lx, -ly]);
            cnf.clauses.push(vec![a, lx, ly]);
            cnf.clauses.push(vec![a, -lx, -ly]);
            a
        }
        Formula::True | Formula::False => unreachable!("constants folded before tseitin"),
    }
}

/// One clause that excludes exactly the given assignment of the state
/// variables (auxiliaries are functionally determined and left out).
pub fn blocking_clause(state_values: &[bool], map: &VarMap) -> Vec<i32> {
    debug_assert_eq!(state_values.len(), map.num_state_vars() as usize);
    state_values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let id = (i + 1) as i32;
            if v {
                -id
            } else {
                id
            }
        })
        .collect()
}
