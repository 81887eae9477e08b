//! Scenario-level analysis: collision detection, scene filters as values,
//! summary statistics and the closed-form two-car benchmark predictor.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;

use crate::enumerate::EnumResult;
use crate::model::{BoxId, BoxRef, Model, Scenario};
use crate::positions::{self, Infeasible, PositionAssignment};

/// A predicate over scenes, applied to every scene of a run (universally for
/// bounds and prohibitions, existentially for requirements). Filters are
/// compiled into the propositional encoding on the SAT side and evaluated
/// directly on complete runs on the oracle side; both readings must agree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SceneFilter {
    /// No scene may place two cars at distance `d` or more apart.
    DistanceBound(u32),
    /// Some scene co-occupies a potential-collision box pair.
    RequireCollision,
    /// No scene co-occupies a potential-collision box pair.
    ForbidCollision,
    /// Some scene has this box occupied.
    Occupancy(BoxId),
    And(Vec<SceneFilter>),
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("bad filter `{input}`: {message}")]
pub struct FilterSyntaxError {
    pub input: String,
    pub message: String,
}

/// Parse the CLI filter mini-syntax: `dist<INT`, `collision`, `no-collision`,
/// `occupies(CAR.IDX)`, with `,` as conjunction.
pub fn parse_filter(text: &str) -> Result<SceneFilter, FilterSyntaxError> {
    let err = |message: &str| FilterSyntaxError {
        input: text.to_string(),
        message: message.to_string(),
    };
    let mut terms = Vec::new();
    for term in text.split(',') {
        let term = term.trim();
        if term.is_empty() {
            return Err(err("empty conjunct"));
        }
        if term == "collision" {
            terms.push(SceneFilter::RequireCollision);
        } else if term == "no-collision" {
            terms.push(SceneFilter::ForbidCollision);
        } else if let Some(rest) = term.strip_prefix("dist<") {
            let d: u32 = rest
                .parse()
                .map_err(|_| err("dist< needs a positive integer"))?;
            if d == 0 {
                return Err(err("distance bound must be at least 1"));
            }
            terms.push(SceneFilter::DistanceBound(d));
        } else if let Some(rest) = term.strip_prefix("occupies(") {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| err("occupies( missing closing parenthesis"))?;
            let (car, idx) = inner
                .split_once('.')
                .ok_or_else(|| err("occupies() expects CAR.INDEX"))?;
            let index: u32 = idx
                .parse()
                .map_err(|_| err("occupies() index must be an integer"))?;
            if car.is_empty() {
                return Err(err("occupies() car name is empty"));
            }
            terms.push(SceneFilter::Occupancy(BoxId::new(car, index)));
        } else {
            return Err(err(
                "expected dist<INT, collision, no-collision or occupies(CAR.IDX)",
            ));
        }
    }
    Ok(match terms.len() {
        1 => terms.pop().unwrap(),
        _ => SceneFilter::And(terms),
    })
}

impl fmt::Display for SceneFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneFilter::DistanceBound(d) => write!(f, "dist<{d}"),
            SceneFilter::RequireCollision => f.write_str("collision"),
            SceneFilter::ForbidCollision => f.write_str("no-collision"),
            SceneFilter::Occupancy(b) => write!(f, "occupies({b})"),
            SceneFilter::And(fs) => {
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{g}")?;
                }
                Ok(())
            }
        }
    }
}

/// Unordered pairs of boxes of distinct cars that share a lane and whose
/// positions are equal in every solution of the constraint system. Symmetric
/// and irreflexive; returned with the smaller box index first.
pub fn collision_pairs(m: &Model) -> Result<Vec<(BoxRef, BoxRef)>, Infeasible> {
    let ent = positions::entailment(m)?;
    let mut pairs = Vec::new();
    for b1 in 0..m.num_boxes() {
        for b2 in (b1 + 1)..m.num_boxes() {
            let (i1, i2) = (m.box_info(b1), m.box_info(b2));
            if i1.car != i2.car && i1.lane == i2.lane && ent.equal(b1, b2) {
                pairs.push((b1, b2));
            }
        }
    }
    Ok(pairs)
}

/// [`collision_pairs`] by name, for reports and rendering.
pub fn collision_pair_ids(m: &Model) -> Result<Vec<(BoxId, BoxId)>, Infeasible> {
    Ok(collision_pairs(m)?
        .into_iter()
        .map(|(a, b)| (m.box_id(a), m.box_id(b)))
        .collect())
}

/// One scene of one scenario co-occupying one potential-collision pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollisionHit {
    pub scenario: usize,
    pub scene: usize,
    pub pair: (BoxRef, BoxRef),
}

#[derive(Debug, Clone, Default)]
pub struct CollisionReport {
    pub hits: Vec<CollisionHit>,
    pub total: usize,
    pub colliding: usize,
}

/// Check every scene of every scenario against the potential-collision
/// pairs. A scenario is colliding iff it produces at least one hit.
pub fn detect_collisions(scenarios: &[Scenario], pairs: &[(BoxRef, BoxRef)]) -> CollisionReport {
    let mut report = CollisionReport {
        total: scenarios.len(),
        ..Default::default()
    };
    for (si, s) in scenarios.iter().enumerate() {
        let mut hit_here = false;
        for (ci, scene) in s.scenes.iter().enumerate() {
            for &(a, b) in pairs {
                if scene.boxes().contains(&a) && scene.boxes().contains(&b) {
                    report.hits.push(CollisionHit {
                        scenario: si,
                        scene: ci,
                        pair: (a, b),
                    });
                    hit_here = true;
                }
            }
        }
        if hit_here {
            report.colliding += 1;
        }
    }
    report
}

/// A filter with its position data resolved once, ready to judge complete
/// runs. This is the oracle-side reading of [`SceneFilter`].
pub struct PreparedFilter<'m> {
    model: &'m Model,
    filter: SceneFilter,
    positions: Option<PositionAssignment>,
    pairs: Option<Vec<(BoxRef, BoxRef)>>,
}

impl<'m> PreparedFilter<'m> {
    pub fn new(m: &'m Model, filter: SceneFilter) -> Result<Self, Infeasible> {
        let positions = if filter.needs_positions() {
            Some(positions::resolve_positions(m)?)
        } else {
            None
        };
        let pairs = if filter.needs_pairs() {
            Some(collision_pairs(m)?)
        } else {
            None
        };
        Ok(PreparedFilter {
            model: m,
            filter,
            positions,
            pairs,
        })
    }

    pub fn accepts(&self, run: &Scenario) -> bool {
        self.eval(&self.filter, run)
    }

    fn eval(&self, f: &SceneFilter, run: &Scenario) -> bool {
        match f {
            SceneFilter::DistanceBound(d) => {
                let pos = self.positions.as_ref().unwrap();
                run.scenes.iter().all(|scene| {
                    let bs = scene.boxes();
                    bs.iter().enumerate().all(|(c1, &b1)| {
                        bs[c1 + 1..].iter().all(|&b2| {
                            (pos.get(b1) as i64 - pos.get(b2) as i64).unsigned_abs() < *d as u64
                        })
                    })
                })
            }
            SceneFilter::RequireCollision => self.some_pair_hit(run),
            SceneFilter::ForbidCollision => !self.some_pair_hit(run),
            SceneFilter::Occupancy(id) => match self.model.find_box(id) {
                None => false,
                Some(b) => run
                    .scenes
                    .iter()
                    .any(|scene| scene.boxes().contains(&b)),
            },
            SceneFilter::And(fs) => fs.iter().all(|g| self.eval(g, run)),
        }
    }

    fn some_pair_hit(&self, run: &Scenario) -> bool {
        let pairs = self.pairs.as_ref().unwrap();
        run.scenes.iter().any(|scene| {
            pairs
                .iter()
                .any(|&(a, b)| scene.boxes().contains(&a) && scene.boxes().contains(&b))
        })
    }
}

impl SceneFilter {
    fn needs_positions(&self) -> bool {
        match self {
            SceneFilter::DistanceBound(_) => true,
            SceneFilter::And(fs) => fs.iter().any(|f| f.needs_positions()),
            _ => false,
        }
    }

    fn needs_pairs(&self) -> bool {
        match self {
            SceneFilter::RequireCollision | SceneFilter::ForbidCollision => true,
            SceneFilter::And(fs) => fs.iter().any(|f| f.needs_pairs()),
            _ => false,
        }
    }
}

/// Aggregate view over one enumeration plus its collision report.
#[derive(Debug, Clone)]
pub struct Summary {
    pub total: u64,
    pub complete: bool,
    pub colliding: usize,
    /// Scenario length (scene count) to number of scenarios of that length.
    pub length_histogram: BTreeMap<usize, usize>,
    pub solves: u64,
    pub conflicts: u64,
    pub encode_ms: u128,
    pub cnf_ms: u128,
    pub solve_ms: u128,
    pub decode_ms: u128,
}

pub fn summarize(result: &EnumResult, report: &CollisionReport) -> Summary {
    let mut hist = BTreeMap::new();
    for s in &result.scenarios {
        *hist.entry(s.len()).or_insert(0usize) += 1;
    }
    Summary {
        total: result.count,
        complete: result.complete,
        colliding: report.colliding,
        length_histogram: hist,
        solves: result.stats.solves,
        conflicts: result.stats.conflicts,
        encode_ms: result.stats.encode.as_millis(),
        cnf_ms: result.stats.cnf.as_millis(),
        solve_ms: result.stats.solve.as_millis(),
        decode_ms: result.stats.decode.as_millis(),
    }
}

impl fmt::Display for Summary {
    /// Flat key=value report, one entry per line. Keys are stable:
    /// `total`, `complete`, `colliding`, `len.N`, `solves`, `conflicts`,
    /// `encode_ms`, `cnf_ms`, `solve_ms`, `decode_ms`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "total={}", self.total)?;
        writeln!(f, "complete={}", self.complete)?;
        writeln!(f, "colliding={}", self.colliding)?;
        for (len, n) in &self.length_histogram {
            writeln!(f, "len.{len}={n}")?;
        }
        writeln!(f, "solves={}", self.solves)?;
        writeln!(f, "conflicts={}", self.conflicts)?;
        writeln!(f, "encode_ms={}", self.encode_ms)?;
        writeln!(f, "cnf_ms={}", self.cnf_ms)?;
        writeln!(f, "solve_ms={}", self.solve_ms)?;
        write!(f, "decode_ms={}", self.decode_ms)
    }
}

/// Exact binomial(2n, n), the closed-form scenario count of the two-car
/// chain benchmark. Arbitrary precision; overflows nothing.
pub fn binomial_prediction(n: u32) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for i in 1..=n as u64 {
        acc = acc * BigUint::from(n as u64 + i) / BigUint::from(i);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{bench, fig2, lane_change, Strength};
    use crate::model::{Configuration, Model, Position, RawModel, Rel};

    #[test]
    fn binomial_predictions() {
        assert_eq!(binomial_prediction(0), BigUint::from(1u32));
        assert_eq!(binomial_prediction(1), BigUint::from(2u32));
        assert_eq!(binomial_prediction(5), BigUint::from(252u32));
        assert_eq!(binomial_prediction(10), BigUint::from(184_756u32));
    }

    #[test]
    fn fig2_has_no_collision_pairs() {
        let m = Model::compile(&fig2()).unwrap();
        assert!(collision_pairs(&m).unwrap().is_empty());
    }

    #[test]
    fn declared_equality_in_shared_lane_is_a_pair() {
        let mut raw = RawModel::default();
        raw.add_lane("L");
        raw.add_box("A", 1, "L", Some(Position::Parametric));
        raw.add_box("B", 1, "L", Some(Position::Parametric));
        raw.add_init("A", 1);
        raw.add_init("B", 1);
        raw.add_constraint(BoxId::new("A", 1), Rel::Eq, BoxId::new("B", 1));
        let m = Model::compile(&raw).unwrap();
        assert_eq!(
            collision_pair_ids(&m).unwrap(),
            vec![(BoxId::new("A", 1), BoxId::new("B", 1))]
        );
    }

    #[test]
    fn pairs_are_irreflexive_and_cross_car() {
        let m = lane_change(Strength::Normal);
        let pairs = collision_pairs(&m).unwrap();
        assert!(!pairs.is_empty());
        for (a, b) in pairs {
            assert_ne!(a, b);
            assert_ne!(m.box_info(a).car, m.box_info(b).car);
            assert_eq!(m.box_info(a).lane, m.box_info(b).lane);
        }
    }

    #[test]
    fn detect_collisions_finds_the_one_hit() {
        let m = lane_change(Strength::Normal);
        let pairs = collision_pairs(&m).unwrap();
        let ego3 = m.find_box(&BoxId::new("EgoCar", 3)).unwrap();
        let r1 = m.find_box(&BoxId::new("RCar", 1)).unwrap();
        assert!(pairs.contains(&(ego3.min(r1), ego3.max(r1))));
        // Three-scene run colliding exactly at scene 1.
        let ego0 = m.find_box(&BoxId::new("EgoCar", 0)).unwrap();
        let r0 = m.find_box(&BoxId::new("RCar", 0)).unwrap();
        let r2 = m.find_box(&BoxId::new("RCar", 2)).unwrap();
        let mk = |e, r| Configuration::new(vec![e, r]);
        let s = crate::model::Scenario {
            scenes: vec![mk(ego0, r0), mk(ego3, r1), mk(ego3, r2)],
        };
        let rep = detect_collisions(&[s], &pairs);
        assert_eq!(rep.total, 1);
        assert_eq!(rep.colliding, 1);
        assert_eq!(rep.hits.len(), 1);
        assert_eq!(rep.hits[0].scene, 1);
    }

    #[test]
    fn no_pairs_means_clean_report() {
        let m = Model::compile(&fig2()).unwrap();
        let pairs = collision_pairs(&m).unwrap();
        let s = crate::model::Scenario {
            scenes: vec![m.initial_configuration()],
        };
        let rep = detect_collisions(&[s], &pairs);
        assert_eq!(rep.colliding, 0);
        assert!(rep.hits.is_empty());
    }

    #[test]
    fn filter_syntax_round_trips() {
        for text in ["dist<3", "collision", "no-collision", "occupies(LCar.2)"] {
            let f = parse_filter(text).unwrap();
            assert_eq!(f.to_string(), text);
        }
        let f = parse_filter("dist<2,no-collision").unwrap();
        assert_eq!(
            f,
            SceneFilter::And(vec![
                SceneFilter::DistanceBound(2),
                SceneFilter::ForbidCollision
            ])
        );
    }

    #[test]
    fn filter_syntax_rejects_garbage() {
        for text in ["", "dist<0", "dist<x", "occupies(A)", "occupies(A.1", "near"] {
            assert!(parse_filter(text).is_err(), "accepted `{text}`");
        }
    }

    #[test]
    fn distance_filter_judges_runs() {
        let m = bench(3);
        let f = PreparedFilter::new(&m, SceneFilter::DistanceBound(3)).unwrap();
        let b = |car: &str, i: u32| m.find_box(&BoxId::new(car, i)).unwrap();
        // Lockstep run keeps the gap at most 1.
        let lockstep = crate::model::Scenario {
            scenes: (0..=3)
                .map(|i| Configuration::new(vec![b("LCar", i), b("RCar", i)]))
                .collect(),
        };
        assert!(f.accepts(&lockstep));
        // One car runs its whole chain first: gap reaches 3.
        let onesided = crate::model::Scenario {
            scenes: (0..=3)
                .map(|i| Configuration::new(vec![b("LCar", i), b("RCar", 0)]))
                .collect(),
        };
        assert!(!f.accepts(&onesided));
    }

    #[test]
    fn occupancy_filter_judges_runs() {
        let m = bench(1);
        let b = |car: &str, i: u32| m.find_box(&BoxId::new(car, i)).unwrap();
        let run = crate::model::Scenario {
            scenes: vec![
                Configuration::new(vec![b("LCar", 0), b("RCar", 0)]),
                Configuration::new(vec![b("LCar", 1), b("RCar", 0)]),
            ],
        };
        let hits = PreparedFilter::new(&m, SceneFilter::Occupancy(BoxId::new("LCar", 1))).unwrap();
        assert!(hits.accepts(&run));
        let misses = PreparedFilter::new(&m, SceneFilter::Occupancy(BoxId::new("RCar", 1))).unwrap();
        assert!(!misses.accepts(&run));
        let unknown = PreparedFilter::new(&m, SceneFilter::Occupancy(BoxId::new("X", 0))).unwrap();
        assert!(!unknown.accepts(&run));
    }
}
