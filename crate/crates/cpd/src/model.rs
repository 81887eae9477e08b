//! Domain model of a car position diagram and its token-game semantics.
//!
//! A diagram is a set of per-car transition graphs over boxes. Each car owns
//! exactly one token; moving tokens along transitions produces scenes, and a
//! maximal scene sequence is a scenario. This module is the single source of
//! truth for enabledness and firing, used by both the SAT encoder and the
//! explicit-state oracle.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::dsl::SourceSpan;

/// Name of a car, unique within a model.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CarId(pub String);

impl fmt::Display for CarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A box names one possible position of one car: the pair (car, index).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BoxId {
    pub car: CarId,
    pub index: u32,
}

impl BoxId {
    pub fn new(car: &str, index: u32) -> Self {
        BoxId {
            car: CarId(car.to_string()),
            index,
        }
    }
}

impl fmt::Display for BoxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.car, self.index)
    }
}

/// Declared position of a box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Position {
    Concrete(u32),
    Parametric,
}

/// Guard of a transition, referencing a box of (normally) another car.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    None,
    /// Fires only when the condition box holds a token.
    Exists(BoxRef),
    /// Fires only when the condition box is empty.
    Absent(BoxRef),
}

/// Relation between two box positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
        })
    }
}

/// Dense index of a box within a compiled [`Model`].
pub type BoxRef = usize;
/// Dense index of a car within a compiled [`Model`].
pub type CarRef = usize;
/// Dense index of a transition within a compiled [`Model`].
pub type TransRef = usize;
/// Dense index of a sync group within a compiled [`Model`].
pub type SyncRef = usize;

// ---------------------------------------------------------------------------
// Raw (pre-validation) model
// ---------------------------------------------------------------------------

/// Unvalidated model as written: declarations may dangle or conflict.
/// [`validate_model`] reports problems; [`Model::compile`] interns a clean one.
#[derive(Debug, Clone, Default)]
pub struct RawModel {
    pub name: String,
    pub lanes: Vec<RawLane>,
    pub boxes: Vec<RawBox>,
    pub initial: Vec<RawInit>,
    pub transitions: Vec<RawTransition>,
    pub syncs: Vec<RawSync>,
    pub constraints: Vec<RawConstraint>,
}

#[derive(Debug, Clone)]
pub struct RawLane {
    pub name: String,
    pub span: Option<SourceSpan>,
}

#[derive(Debug, Clone)]
pub struct RawBox {
    pub id: BoxId,
    pub lane: String,
    /// `None` means undeclared: defaults to parametric when the box is
    /// mentioned by a constraint, otherwise to its own index.
    pub pos: Option<Position>,
    pub span: Option<SourceSpan>,
}

#[derive(Debug, Clone)]
pub struct RawInit {
    pub box_id: BoxId,
    pub span: Option<SourceSpan>,
}

#[derive(Debug, Clone)]
pub struct RawTransition {
    pub src: BoxId,
    pub dst: BoxId,
    pub guard: RawGuard,
    pub span: Option<SourceSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawGuard {
    None,
    Exists(BoxId),
    Absent(BoxId),
}

#[derive(Debug, Clone)]
pub struct RawSync {
    /// Each member references a declared unguarded transition by endpoints.
    pub members: Vec<(BoxId, BoxId)>,
    pub span: Option<SourceSpan>,
}

#[derive(Debug, Clone)]
pub struct RawConstraint {
    pub lhs: BoxId,
    pub rel: Rel,
    pub rhs: BoxId,
    pub span: Option<SourceSpan>,
}

impl RawModel {
    pub fn add_box(&mut self, car: &str, index: u32, lane: &str, pos: Option<Position>) {
        self.boxes.push(RawBox {
            id: BoxId::new(car, index),
            lane: lane.to_string(),
            pos,
            span: None,
        });
    }

    pub fn add_lane(&mut self, name: &str) {
        self.lanes.push(RawLane {
            name: name.to_string(),
            span: None,
        });
    }

    pub fn add_init(&mut self, car: &str, index: u32) {
        self.initial.push(RawInit {
            box_id: BoxId::new(car, index),
            span: None,
        });
    }

    pub fn add_trans(&mut self, car: &str, src: u32, dst: u32) {
        self.transitions.push(RawTransition {
            src: BoxId::new(car, src),
            dst: BoxId::new(car, dst),
            guard: RawGuard::None,
            span: None,
        });
    }

    pub fn add_guarded_trans(&mut self, car: &str, src: u32, dst: u32, guard: RawGuard) {
        self.transitions.push(RawTransition {
            src: BoxId::new(car, src),
            dst: BoxId::new(car, dst),
            guard,
            span: None,
        });
    }

    pub fn add_sync(&mut self, members: Vec<(BoxId, BoxId)>) {
        self.syncs.push(RawSync {
            members,
            span: None,
        });
    }

    pub fn add_constraint(&mut self, lhs: BoxId, rel: Rel, rhs: BoxId) {
        self.constraints.push(RawConstraint {
            lhs,
            rel,
            rhs,
            span: None,
        });
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub message: String,
    pub span: Option<SourceSpan>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(f, "{}:{}: {}", s.line, s.column, self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Outcome of model validation. The model is usable iff `errors` is empty;
/// warnings (cycles, guards on the own car) do not block use.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub errors: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_usable(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, span: Option<SourceSpan>, message: String) {
        self.errors.push(Diagnostic { message, span });
    }

    fn warn(&mut self, span: Option<SourceSpan>, message: String) {
        self.warnings.push(Diagnostic { message, span });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        write!(
            f,
            "{} error(s), {} warning(s)",
            self.errors.len(),
            self.warnings.len()
        )
    }
}

/// Check well-formedness of a raw model without building it.
pub fn validate_model(raw: &RawModel) -> ValidationReport {
    let mut rep = ValidationReport::default();

    let mut lane_names: BTreeSet<&str> = BTreeSet::new();
    for lane in &raw.lanes {
        if !lane_names.insert(&lane.name) {
            rep.error(lane.span, format!("duplicate lane `{}`", lane.name));
        }
    }

    let mut declared: BTreeMap<&BoxId, &RawBox> = BTreeMap::new();
    for b in &raw.boxes {
        if declared.insert(&b.id, b).is_some() {
            rep.error(b.span, format!("duplicate box `{}`", b.id));
        }
        if !lane_names.contains(b.lane.as_str()) {
            rep.error(b.span, format!("undeclared lane `{}` for box `{}`", b.lane, b.id));
        }
    }
    let cars: BTreeSet<&CarId> = declared.keys().map(|b| &b.car).collect();

    let check_box = |rep: &mut ValidationReport, id: &BoxId, span: Option<SourceSpan>, role: &str| -> bool {
        if declared.contains_key(id) {
            true
        } else {
            rep.error(span, format!("{role} references undeclared box `{id}`"));
            false
        }
    };

    let mut init_seen: BTreeSet<&CarId> = BTreeSet::new();
    for init in &raw.initial {
        check_box(&mut rep, &init.box_id, init.span, "init");
        if !init_seen.insert(&init.box_id.car) {
            rep.error(
                init.span,
                format!("car `{}` has more than one initial box", init.box_id.car),
            );
        }
    }
    for car in &cars {
        if !init_seen.contains(car) {
            rep.error(None, format!("car `{car}` has no initial box"));
        }
    }

    for t in &raw.transitions {
        check_box(&mut rep, &t.src, t.span, "transition");
        check_box(&mut rep, &t.dst, t.span, "transition");
        if t.src.car != t.dst.car {
            rep.error(
                t.span,
                format!("transition `{} -> {}` crosses cars", t.src, t.dst),
            );
        }
        match &t.guard {
            RawGuard::None => {}
            RawGuard::Exists(c) | RawGuard::Absent(c) => {
                check_box(&mut rep, c, t.span, "guard");
                if c.car == t.src.car {
                    rep.warn(
                        t.span,
                        format!("guard of `{} -> {}` conditions on its own car", t.src, t.dst),
                    );
                }
            }
        }
    }

    // Sync members must name declared unguarded transitions, one car each,
    // and no transition may belong to two groups.
    let mut sync_used: BTreeSet<(&BoxId, &BoxId)> = BTreeSet::new();
    for sync in &raw.syncs {
        if sync.members.len() < 2 {
            rep.error(sync.span, "sync group needs at least two members".to_string());
        }
        let mut member_cars: BTreeSet<&CarId> = BTreeSet::new();
        for (src, dst) in &sync.members {
            let found = raw
                .transitions
                .iter()
                .find(|t| &t.src == src && &t.dst == dst);
            match found {
                None => rep.error(
                    sync.span,
                    format!("sync member `{src} -> {dst}` is not a declared transition"),
                ),
                Some(t) if t.guard != RawGuard::None => rep.error(
                    sync.span,
                    format!("sync member `{src} -> {dst}` is guarded"),
                ),
                Some(_) => {}
            }
            if !member_cars.insert(&src.car) {
                rep.error(
                    sync.span,
                    format!("sync group has two members for car `{}`", src.car),
                );
            }
            if !sync_used.insert((src, dst)) {
                rep.error(
                    sync.span,
                    format!("transition `{src} -> {dst}` belongs to more than one sync group"),
                );
            }
        }
    }

    for c in &raw.constraints {
        check_box(&mut rep, &c.lhs, c.span, "constraint");
        check_box(&mut rep, &c.rhs, c.span, "constraint");
        if c.rel == Rel::Lt && c.lhs == c.rhs {
            rep.error(c.span, format!("constraint `pos({0}) < pos({0})` is unsatisfiable", c.lhs));
        }
    }

    // Cycle warning per car graph (enumeration of cyclic graphs needs an
    // explicit bound).
    if rep.errors.is_empty() {
        for car in &cars {
            let boxes: Vec<&BoxId> = declared.keys().filter(|b| &b.car == *car).copied().collect();
            let edges: Vec<(&BoxId, &BoxId)> = raw
                .transitions
                .iter()
                .filter(|t| &t.src.car == *car)
                .map(|t| (&t.src, &t.dst))
                .collect();
            if has_cycle(&boxes, &edges) {
                rep.warn(
                    None,
                    format!("car `{car}` has a cyclic graph: enumeration requires explicit bound"),
                );
            }
        }
    }

    rep
}

fn has_cycle(nodes: &[&BoxId], edges: &[(&BoxId, &BoxId)]) -> bool {
    // Kahn's algorithm; leftover nodes mean a cycle.
    let mut indeg: BTreeMap<&BoxId, usize> = nodes.iter().map(|b| (*b, 0)).collect();
    for (_, dst) in edges {
        *indeg.get_mut(*dst).unwrap() += 1;
    }
    let mut queue: Vec<&BoxId> = indeg
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(b, _)| *b)
        .collect();
    let mut removed = 0usize;
    while let Some(n) = queue.pop() {
        removed += 1;
        for (src, dst) in edges {
            if *src == n {
                let d = indeg.get_mut(*dst).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push(*dst);
                }
            }
        }
    }
    removed < nodes.len()
}

// ---------------------------------------------------------------------------
// Compiled model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxInfo {
    pub car: CarRef,
    pub index: u32,
    pub lane: usize,
    pub pos: Position,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub src: BoxRef,
    pub dst: BoxRef,
    pub guard: Guard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constraint {
    pub lhs: BoxRef,
    pub rel: Rel,
    pub rhs: BoxRef,
}

/// A validated, interned car position diagram. Immutable after construction
/// and safely shareable across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    name: String,
    cars: Vec<String>,
    lanes: Vec<String>,
    boxes: Vec<BoxInfo>,
    car_boxes: Vec<(usize, usize)>,
    transitions: Vec<Transition>,
    syncs: Vec<Vec<TransRef>>,
    in_sync: Vec<Option<SyncRef>>,
    initial: Vec<BoxRef>,
    constraints: Vec<Constraint>,
}

impl Model {
    /// Validate and intern a raw model. Ordering is canonicalized (cars
    /// sorted, boxes by index, transitions by endpoints) so equal diagrams
    /// compare equal regardless of declaration order.
    pub fn compile(raw: &RawModel) -> Result<Model, ValidationReport> {
        let rep = validate_model(raw);
        if !rep.is_usable() {
            return Err(rep);
        }

        let mut cars: Vec<String> = raw
            .boxes
            .iter()
            .map(|b| b.id.car.0.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        cars.sort();

        let mut lanes: Vec<String> = Vec::new();
        for lane in &raw.lanes {
            if !lanes.contains(&lane.name) {
                lanes.push(lane.name.clone());
            }
        }

        let constrained: BTreeSet<&BoxId> = raw
            .constraints
            .iter()
            .flat_map(|c| [&c.lhs, &c.rhs])
            .collect();

        let mut boxes: Vec<(BoxId, BoxInfo)> = raw
            .boxes
            .iter()
            .map(|b| {
                let pos = match b.pos {
                    Some(p) => p,
                    None if constrained.contains(&b.id) => Position::Parametric,
                    None => Position::Concrete(b.id.index),
                };
                let info = BoxInfo {
                    car: cars.iter().position(|c| *c == b.id.car.0).unwrap(),
                    index: b.id.index,
                    lane: lanes.iter().position(|l| *l == b.lane).unwrap(),
                    pos,
                };
                (b.id.clone(), info)
            })
            .collect();
        boxes.sort_by(|a, b| (a.1.car, a.1.index).cmp(&(b.1.car, b.1.index)));

        let box_ref = |id: &BoxId| -> BoxRef {
            boxes.iter().position(|(b, _)| b == id).unwrap()
        };

        let mut car_boxes = vec![(usize::MAX, 0usize); cars.len()];
        for (i, (_, info)) in boxes.iter().enumerate() {
            let (start, end) = &mut car_boxes[info.car];
            if *start == usize::MAX {
                *start = i;
            }
            *end = i + 1;
        }

        let mut transitions: Vec<Transition> = raw
            .transitions
            .iter()
            .map(|t| Transition {
                src: box_ref(&t.src),
                dst: box_ref(&t.dst),
                guard: match &t.guard {
                    RawGuard::None => Guard::None,
                    RawGuard::Exists(b) => Guard::Exists(box_ref(b)),
                    RawGuard::Absent(b) => Guard::Absent(box_ref(b)),
                },
            })
            .collect();
        // Canonical transition order; remember where each raw one landed so
        // sync groups can still point at them.
        let mut order: Vec<usize> = (0..transitions.len()).collect();
        order.sort_by_key(|&i| {
            let t = &transitions[i];
            (t.src, t.dst, t.guard)
        });
        let mut remap = vec![0usize; transitions.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let mut sorted = transitions.clone();
        for (old, t) in transitions.drain(..).enumerate() {
            sorted[remap[old]] = t;
        }
        let transitions = sorted;

        let find_trans = |src: &BoxId, dst: &BoxId| -> TransRef {
            let (s, d) = (box_ref(src), box_ref(dst));
            transitions
                .iter()
                .position(|t| t.src == s && t.dst == d && t.guard == Guard::None)
                .unwrap()
        };
        let mut syncs: Vec<Vec<TransRef>> = raw
            .syncs
            .iter()
            .map(|g| {
                let mut m: Vec<TransRef> =
                    g.members.iter().map(|(s, d)| find_trans(s, d)).collect();
                m.sort_unstable();
                m
            })
            .collect();
        syncs.sort();

        let mut in_sync = vec![None; transitions.len()];
        for (gi, g) in syncs.iter().enumerate() {
            for &t in g {
                in_sync[t] = Some(gi);
            }
        }

        let mut initial = vec![0usize; cars.len()];
        for init in &raw.initial {
            let b = box_ref(&init.box_id);
            initial[boxes[b].1.car] = b;
        }

        let mut constraints: Vec<Constraint> = raw
            .constraints
            .iter()
            .map(|c| Constraint {
                lhs: box_ref(&c.lhs),
                rel: c.rel,
                rhs: box_ref(&c.rhs),
            })
            .collect();
        constraints.sort_by_key(|c| (c.lhs, c.rhs, c.rel));

        Ok(Model {
            name: raw.name.clone(),
            cars,
            lanes,
            boxes: boxes.into_iter().map(|(_, info)| info).collect(),
            car_boxes,
            transitions,
            syncs,
            in_sync,
            initial,
            constraints,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_cars(&self) -> usize {
        self.cars.len()
    }

    pub fn car_name(&self, c: CarRef) -> &str {
        &self.cars[c]
    }

    pub fn lanes(&self) -> &[String] {
        &self.lanes
    }

    pub fn lane_name(&self, l: usize) -> &str {
        &self.lanes[l]
    }

    pub fn num_boxes(&self) -> usize {
        self.boxes.len()
    }

    pub fn boxes(&self) -> &[BoxInfo] {
        &self.boxes
    }

    pub fn box_info(&self, b: BoxRef) -> &BoxInfo {
        &self.boxes[b]
    }

    /// Named identity of a box, for display and serialization.
    pub fn box_id(&self, b: BoxRef) -> BoxId {
        let info = &self.boxes[b];
        BoxId::new(&self.cars[info.car], info.index)
    }

    pub fn find_box(&self, id: &BoxId) -> Option<BoxRef> {
        let car = self.cars.iter().position(|c| *c == id.car.0)?;
        self.boxes
            .iter()
            .position(|b| b.car == car && b.index == id.index)
    }

    /// Boxes of one car as a dense range.
    pub fn car_box_refs(&self, c: CarRef) -> std::ops::Range<BoxRef> {
        let (s, e) = self.car_boxes[c];
        s..e
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn syncs(&self) -> &[Vec<TransRef>] {
        &self.syncs
    }

    pub fn sync_of(&self, t: TransRef) -> Option<SyncRef> {
        self.in_sync[t]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn initial_box(&self, c: CarRef) -> BoxRef {
        self.initial[c]
    }

    pub fn initial_configuration(&self) -> Configuration {
        Configuration {
            boxes: self.initial.clone(),
        }
    }

    /// All firings enabled at `c`: single transitions whose source is
    /// occupied and whose guard holds, plus sync groups with every member
    /// source occupied. Sync members never fire individually.
    pub fn enabled_firings(&self, c: &Configuration) -> Vec<Firing> {
        let mut out = Vec::new();
        for (i, t) in self.transitions.iter().enumerate() {
            if self.in_sync[i].is_some() {
                continue;
            }
            if c.boxes[self.boxes[t.src].car] != t.src {
                continue;
            }
            let guard_ok = match t.guard {
                Guard::None => true,
                Guard::Exists(b) => c.boxes[self.boxes[b].car] == b,
                Guard::Absent(b) => c.boxes[self.boxes[b].car] != b,
            };
            if guard_ok {
                out.push(Firing::Single(i));
            }
        }
        for (gi, g) in self.syncs.iter().enumerate() {
            let all_ready = g.iter().all(|&ti| {
                let t = &self.transitions[ti];
                c.boxes[self.boxes[t.src].car] == t.src
            });
            if all_ready {
                out.push(Firing::Sync(gi));
            }
        }
        out
    }

    /// Apply one firing, moving only the cars it names.
    pub fn apply_firing(&self, c: &Configuration, f: Firing) -> Result<Configuration, FiringError> {
        if !self.enabled_firings(c).contains(&f) {
            return Err(FiringError::NotEnabled);
        }
        let mut next = c.clone();
        match f {
            Firing::Single(ti) => {
                let t = &self.transitions[ti];
                next.boxes[self.boxes[t.src].car] = t.dst;
            }
            Firing::Sync(gi) => {
                for &ti in &self.syncs[gi] {
                    let t = &self.transitions[ti];
                    next.boxes[self.boxes[t.src].car] = t.dst;
                }
            }
        }
        Ok(next)
    }

    pub fn is_deadlocked(&self, c: &Configuration) -> bool {
        self.enabled_firings(c).is_empty()
    }

    /// Cars whose transition graph contains a cycle.
    pub fn cyclic_cars(&self) -> Vec<CarRef> {
        (0..self.cars.len())
            .filter(|&c| self.longest_path_from(self.initial[c], c).is_none())
            .collect()
    }

    /// Sum over cars of the longest path (edge count) from the initial box.
    /// Every maximal run fires at most this many steps.
    pub fn longest_run_bound(&self) -> Result<u32, CyclicModel> {
        let mut total = 0u32;
        for c in 0..self.cars.len() {
            match self.longest_path_from(self.initial[c], c) {
                Some(d) => total += d,
                None => {
                    return Err(CyclicModel {
                        car: self.cars[c].clone(),
                    })
                }
            }
        }
        Ok(total)
    }

    /// Longest path in edges from `start` within car `c`'s graph; `None` if a
    /// cycle is reachable.
    fn longest_path_from(&self, start: BoxRef, c: CarRef) -> Option<u32> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done(u32),
        }
        let range = self.car_box_refs(c);
        let offset = range.start;
        let mut marks = vec![Mark::New; range.len()];
        // Iterative DFS computing longest path on the DAG.
        let mut stack = vec![(start, false)];
        while let Some((b, expanded)) = stack.pop() {
            let i = b - offset;
            if expanded {
                let mut best = 0u32;
                for t in &self.transitions {
                    if t.src == b {
                        if let Mark::Done(d) = marks[t.dst - offset] {
                            best = best.max(d + 1);
                        }
                    }
                }
                marks[i] = Mark::Done(best);
                continue;
            }
            match marks[i] {
                Mark::Done(_) => continue,
                Mark::Active => return None,
                Mark::New => {}
            }
            marks[i] = Mark::Active;
            stack.push((b, true));
            for t in &self.transitions {
                if t.src == b {
                    match marks[t.dst - offset] {
                        Mark::Active => return None,
                        Mark::Done(_) => {}
                        Mark::New => stack.push((t.dst, false)),
                    }
                }
            }
        }
        match marks[start - offset] {
            Mark::Done(d) => Some(d),
            _ => None,
        }
    }

    /// Variant with every guard dropped and every sync group dissolved into
    /// individual normal transitions. Used to study how much the guards and
    /// syncs constrain the scenario set.
    pub fn strip_to_normal(&self) -> Model {
        let mut m = self.clone();
        m.name = format!("{}_normal", m.name);
        for t in &mut m.transitions {
            t.guard = Guard::None;
        }
        m.syncs.clear();
        m.in_sync = vec![None; m.transitions.len()];
        // Dropping guards can create duplicate transitions; keep one of each.
        let mut seen = BTreeSet::new();
        m.transitions.retain(|t| seen.insert((t.src, t.dst)));
        m.in_sync.truncate(m.transitions.len());
        m
    }
}

/// One box per car: a scene snapshot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    boxes: Vec<BoxRef>,
}

impl Configuration {
    pub fn new(boxes: Vec<BoxRef>) -> Self {
        Configuration { boxes }
    }

    pub fn box_of(&self, c: CarRef) -> BoxRef {
        self.boxes[c]
    }

    pub fn boxes(&self) -> &[BoxRef] {
        &self.boxes
    }
}

/// One step of the token game: a lone transition or a whole sync group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Firing {
    Single(TransRef),
    Sync(SyncRef),
}

/// A maximal scene sequence from the initial configuration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scenario {
    pub scenes: Vec<Configuration>,
}

impl Scenario {
    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("firing is not enabled in this configuration")]
pub struct NotEnabledError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum FiringError {
    #[error("firing is not enabled in this configuration")]
    NotEnabled,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("car `{car}` has a cyclic graph; supply an explicit step bound")]
pub struct CyclicModel {
    pub car: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::fig2;

    fn fig3_exist() -> Model {
        // LCar.0 -> LCar.1 fires only while RCar.0 is occupied.
        let mut raw = RawModel::default();
        raw.name = "fig3_exist".into();
        raw.add_lane("Left");
        raw.add_lane("Right");
        for i in 0..2 {
            raw.add_box("LCar", i, "Left", Some(Position::Concrete(i)));
            raw.add_box("RCar", i, "Right", Some(Position::Concrete(i)));
        }
        raw.add_init("LCar", 0);
        raw.add_init("RCar", 0);
        raw.add_guarded_trans("LCar", 0, 1, RawGuard::Exists(BoxId::new("RCar", 0)));
        raw.add_trans("RCar", 0, 1);
        Model::compile(&raw).unwrap()
    }

    fn fig3_nonexist() -> Model {
        let mut raw = RawModel::default();
        raw.name = "fig3_nonexist".into();
        raw.add_lane("Left");
        raw.add_lane("Right");
        for i in 0..2 {
            raw.add_box("LCar", i, "Left", Some(Position::Concrete(i)));
            raw.add_box("RCar", i, "Right", Some(Position::Concrete(i)));
        }
        raw.add_init("LCar", 0);
        raw.add_init("RCar", 0);
        raw.add_guarded_trans("LCar", 0, 1, RawGuard::Absent(BoxId::new("RCar", 0)));
        raw.add_trans("RCar", 0, 1);
        Model::compile(&raw).unwrap()
    }

    #[test]
    fn fig2_validates_clean() {
        let raw = fig2();
        let rep = validate_model(&raw);
        assert!(rep.errors.is_empty());
        assert!(rep.warnings.is_empty());
        let m = Model::compile(&raw).unwrap();
        assert_eq!(m.num_cars(), 2);
        assert_eq!(m.num_boxes(), 6);
        assert_eq!(m.transitions().len(), 4);
    }

    #[test]
    fn dangling_transition_is_an_error() {
        let mut raw = fig2();
        raw.add_trans("LCar", 2, 9);
        let rep = validate_model(&raw);
        assert_eq!(rep.errors.len(), 1);
    }

    #[test]
    fn self_loop_warns_about_cycles() {
        let mut raw = fig2();
        raw.add_trans("LCar", 1, 1);
        let rep = validate_model(&raw);
        assert!(rep.errors.is_empty());
        assert!(rep
            .warnings
            .iter()
            .any(|w| w.message.contains("cyclic graph")));
    }

    #[test]
    fn exist_guard_enabled_when_condition_occupied() {
        let m = fig3_exist();
        let init = m.initial_configuration();
        let lcar_trans = m
            .transitions()
            .iter()
            .position(|t| m.box_info(t.src).car == 0)
            .unwrap();
        assert!(m
            .enabled_firings(&init)
            .contains(&Firing::Single(lcar_trans)));
    }

    #[test]
    fn nonexist_guard_blocked_while_condition_occupied() {
        let m = fig3_nonexist();
        let init = m.initial_configuration();
        // LCar's guarded transition must not be enabled while RCar.0 holds
        // its token; only RCar may move.
        let enabled = m.enabled_firings(&init);
        assert_eq!(enabled.len(), 1);
        let Firing::Single(t) = enabled[0] else {
            panic!("expected a single firing");
        };
        assert_eq!(m.car_name(m.box_info(m.transitions()[t].src).car), "RCar");
    }

    #[test]
    fn chain_end_is_deadlocked() {
        let m = Model::compile(&fig2()).unwrap();
        let last = Configuration::new(vec![
            m.find_box(&BoxId::new("LCar", 2)).unwrap(),
            m.find_box(&BoxId::new("RCar", 2)).unwrap(),
        ]);
        assert!(m.is_deadlocked(&last));
        assert!(!m.is_deadlocked(&m.initial_configuration()));
    }

    #[test]
    fn guard_failure_can_deadlock() {
        // Only transition requires RCar.1 to be empty, but RCar is stuck there.
        let mut raw = RawModel::default();
        raw.name = "stuck".into();
        raw.add_lane("Left");
        raw.add_lane("Right");
        raw.add_box("LCar", 0, "Left", None);
        raw.add_box("LCar", 1, "Left", None);
        raw.add_box("RCar", 1, "Right", None);
        raw.add_init("LCar", 0);
        raw.add_init("RCar", 1);
        raw.add_guarded_trans("LCar", 0, 1, RawGuard::Absent(BoxId::new("RCar", 1)));
        let m = Model::compile(&raw).unwrap();
        assert!(m.is_deadlocked(&m.initial_configuration()));
    }

    #[test]
    fn apply_firing_moves_one_car() {
        let m = Model::compile(&fig2()).unwrap();
        let init = m.initial_configuration();
        let f = m
            .enabled_firings(&init)
            .into_iter()
            .find(|f| match f {
                Firing::Single(t) => m.car_name(m.box_info(m.transitions()[*t].src).car) == "LCar",
                _ => false,
            })
            .unwrap();
        let next = m.apply_firing(&init, f).unwrap();
        assert_eq!(m.box_id(next.box_of(0)), BoxId::new("LCar", 1));
        assert_eq!(m.box_id(next.box_of(1)), BoxId::new("RCar", 0));
    }

    #[test]
    fn disabled_firing_rejected() {
        let m = Model::compile(&fig2()).unwrap();
        let init = m.initial_configuration();
        // Transition out of LCar.1 is not enabled at the initial configuration.
        let t = m
            .transitions()
            .iter()
            .position(|t| m.box_id(t.src) == BoxId::new("LCar", 1))
            .unwrap();
        assert_eq!(
            m.apply_firing(&init, Firing::Single(t)),
            Err(FiringError::NotEnabled)
        );
    }

    #[test]
    fn sync_fires_atomically() {
        let m = crate::families::fig3_sync();
        let init = m.initial_configuration();
        let enabled = m.enabled_firings(&init);
        assert_eq!(enabled, vec![Firing::Sync(0)]);
        let next = m.apply_firing(&init, Firing::Sync(0)).unwrap();
        assert_eq!(m.box_id(next.box_of(0)), BoxId::new("LCar", 1));
        assert_eq!(m.box_id(next.box_of(1)), BoxId::new("RCar", 1));
    }

    #[test]
    fn longest_run_bound_fig2_is_4() {
        let m = Model::compile(&fig2()).unwrap();
        assert_eq!(m.longest_run_bound().unwrap(), 4);
    }

    #[test]
    fn longest_run_bound_single_chain() {
        let mut raw = RawModel::default();
        raw.name = "chain".into();
        raw.add_lane("L");
        for i in 0..4 {
            raw.add_box("Car", i, "L", None);
        }
        raw.add_init("Car", 0);
        for i in 0..3 {
            raw.add_trans("Car", i, i + 1);
        }
        let m = Model::compile(&raw).unwrap();
        assert_eq!(m.longest_run_bound().unwrap(), 3);
    }

    #[test]
    fn longest_run_bound_rejects_cycles() {
        let mut raw = fig2();
        raw.add_trans("LCar", 2, 0);
        let m = Model::compile(&raw).unwrap();
        assert!(m.longest_run_bound().is_err());
        assert_eq!(m.cyclic_cars(), vec![0]);
    }
}
