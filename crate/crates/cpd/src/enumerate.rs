//! The all-solutions loop: unroll the model, solve, decode the assignment
//! into a scenario, block it, repeat until unsatisfiable.
//!
//! Every decoded assignment passes two always-on invariant checks (exactly
//! one occupied box per car per step; consecutive scenes related by one
//! enabled firing or a deadlocked stutter) and a scene-sequence uniqueness
//! assertion. Violations are bugs, surfaced as `Internal` errors rather
//! than bad data.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use crate::analyze::SceneFilter;
use crate::encode::{self, FilterError, Formula, VarMap};
use crate::model::{Configuration, CyclicModel, Model, Scenario};
use crate::positions::PositionAssignment;
use crate::sat::{SatError, Session, SolveResult};

#[derive(Debug, Clone, Default)]
pub struct EnumOptions {
    /// Step bound; defaults to the model's longest run bound (exact for
    /// acyclic models). Required for cyclic ones.
    pub k: Option<u32>,
    /// Compiled into the formula, so rejected scenes are never enumerated.
    pub filter: Option<SceneFilter>,
    /// Stop after this many scenarios (result marked incomplete).
    pub limit: Option<u64>,
    /// Total solver conflict budget across the whole loop.
    pub max_conflicts: Option<u64>,
    /// Wall-clock budget, checked between solves.
    pub max_time: Option<Duration>,
    /// Solver heuristic seed; zero keeps branching purely deterministic.
    pub seed: u64,
}

/// Wall time per pipeline phase plus solver effort counters.
#[derive(Debug, Clone, Default)]
pub struct EnumStats {
    pub solves: u64,
    pub conflicts: u64,
    pub encode: Duration,
    pub cnf: Duration,
    pub solve: Duration,
    pub decode: Duration,
    pub num_vars: u32,
    pub num_clauses: usize,
}

#[derive(Debug, Clone)]
pub struct EnumResult {
    /// Empty when counting without materialization.
    pub scenarios: Vec<Scenario>,
    pub count: u64,
    /// True iff the loop ended in Unsat and the bound was saturated; false
    /// after a limit or budget cut-off, or when runs continue past k.
    pub complete: bool,
    /// False iff some run could still fire at step k (user-supplied k too
    /// small). Always true for the default bound.
    pub saturated: bool,
    pub stats: EnumStats,
}

#[derive(Debug, thiserror::Error)]
pub enum EnumError {
    #[error(transparent)]
    Cyclic(#[from] CyclicModel),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// Enumerate every maximal run of length at most `k`, materialized.
pub fn enumerate_scenarios(m: &Model, o: &EnumOptions) -> Result<EnumResult, EnumError> {
    run_loop(m, o, true)
}

/// Same count and completeness as [`enumerate_scenarios`] without keeping
/// the scenarios.
pub fn count_scenarios(m: &Model, o: &EnumOptions) -> Result<(u64, bool), EnumError> {
    let r = run_loop(m, o, false)?;
    Ok((r.count, r.complete))
}

fn run_loop(m: &Model, o: &EnumOptions, keep: bool) -> Result<EnumResult, EnumError> {
    let start = Instant::now();
    let k = match o.k {
        Some(k) => k,
        None => m.longest_run_bound()?,
    };
    let mut stats = EnumStats::default();

    let t = Instant::now();
    let mut formula = vec![encode::encode_unrolled(m, k)];
    if let Some(f) = &o.filter {
        formula.push(encode::encode_filter(m, f, k)?);
    }
    let formula = Formula::and(formula);
    stats.encode = t.elapsed();

    let t = Instant::now();
    let map = VarMap::new(m.num_boxes(), k);
    let cnf = encode::to_cnf(&formula, map);
    stats.num_vars = cnf.num_vars;
    stats.num_clauses = cnf.clauses.len();
    stats.cnf = t.elapsed();

    let mut session = Session::new(&cnf)?;
    session.set_seed(o.seed);

    let mut scenarios = Vec::new();
    let mut seen: BTreeSet<Vec<Configuration>> = BTreeSet::new();
    let mut count = 0u64;
    let mut ended_unsat = false;
    let mut cut_off = false;

    loop {
        if let Some(b) = o.max_conflicts {
            let used = session.num_conflicts();
            if used >= b {
                cut_off = true;
                break;
            }
            session.set_conflict_budget(Some(b - used));
        }
        let t = Instant::now();
        let outcome = session.solve();
        stats.solve += t.elapsed();
        stats.solves += 1;
        match outcome {
            SolveResult::Unsat => {
                ended_unsat = true;
                break;
            }
            SolveResult::Indeterminate => {
                cut_off = true;
                break;
            }
            SolveResult::Sat(model) => {
                let t = Instant::now();
                let state = &model[..map.num_state_vars() as usize];
                let scenario = decode(state, &map, m)?;
                if !seen.insert(scenario.scenes.clone()) {
                    return Err(EnumError::Internal(format!(
                        "duplicate scenario after {count} found"
                    )));
                }
                count += 1;
                if keep {
                    scenarios.push(scenario);
                }
                session.add_clause(&encode::blocking_clause(state, &map))?;
                stats.decode += t.elapsed();
                if o.limit.is_some_and(|l| count >= l) {
                    cut_off = true;
                    break;
                }
                if o.max_time.is_some_and(|b| start.elapsed() > b) {
                    cut_off = true;
                    break;
                }
            }
        }
    }
    stats.conflicts = session.num_conflicts();

    // A run still able to fire at step k means the bound truncated it. The
    // default bound is provably sufficient; re-check user-supplied ones.
    let saturated = if ended_unsat && o.k.is_some() {
        let t = Instant::now();
        let ok = check_saturation(m, o.filter.as_ref(), k)?;
        stats.solve += t.elapsed();
        stats.solves += 1;
        ok
    } else {
        true
    };

    Ok(EnumResult {
        scenarios,
        count,
        complete: ended_unsat && saturated && !cut_off,
        saturated,
        stats,
    })
}

/// True iff no reachable step-k scene can still fire: solves the (k+1)-step
/// unrolling with a forced state change between steps k and k+1, which must
/// be unsatisfiable when k covers every run.
fn check_saturation(m: &Model, filter: Option<&SceneFilter>, k: u32) -> Result<bool, EnumError> {
    let mut conj = vec![encode::encode_unrolled(m, k + 1)];
    if let Some(f) = filter {
        // Filter constrains the first k+1 scenes only, matching the main loop.
        conj.push(encode::encode_filter(m, f, k)?);
    }
    let changed = (0..m.num_boxes())
        .map(|b| {
            Formula::not(Formula::iff(
                Formula::var(k, b),
                Formula::var(k + 1, b),
            ))
        })
        .collect();
    conj.push(Formula::or(changed));
    let map = VarMap::new(m.num_boxes(), k + 1);
    let cnf = encode::to_cnf(&Formula::and(conj), map);
    let mut session = Session::new(&cnf)?;
    Ok(matches!(session.solve(), SolveResult::Unsat))
}

/// Rebuild the scene sequence from a satisfying assignment of the state
/// variables, then drop the trailing copies a stutter tail produces.
pub fn decode(state: &[bool], map: &VarMap, m: &Model) -> Result<Scenario, EnumError> {
    debug_assert_eq!(state.len(), map.num_state_vars() as usize);
    let mut scenes = Vec::with_capacity(map.steps as usize);
    for step in 0..map.steps {
        let mut boxes = vec![usize::MAX; m.num_cars()];
        for b in 0..m.num_boxes() {
            let id = map.id(crate::encode::StepVar { step, box_ref: b });
            if state[(id - 1) as usize] {
                let car = m.box_info(b).car;
                if boxes[car] != usize::MAX {
                    return Err(EnumError::Internal(format!(
                        "step {step}: car {} occupies two boxes",
                        m.car_name(car)
                    )));
                }
                boxes[car] = b;
            }
        }
        if let Some(car) = boxes.iter().position(|&b| b == usize::MAX) {
            return Err(EnumError::Internal(format!(
                "step {step}: car {} occupies no box",
                m.car_name(car)
            )));
        }
        scenes.push(Configuration::new(boxes));
    }

    for (i, w) in scenes.windows(2).enumerate() {
        if w[0] == w[1] {
            if !m.is_deadlocked(&w[0]) {
                return Err(EnumError::Internal(format!(
                    "step {i}: stutter on a non-deadlocked scene"
                )));
            }
        } else {
            let fired = m
                .enabled_firings(&w[0])
                .into_iter()
                .any(|f| m.apply_firing(&w[0], f).unwrap() == w[1]);
            if !fired {
                return Err(EnumError::Internal(format!(
                    "steps {i}..{}: scenes not related by one enabled firing",
                    i + 1
                )));
            }
        }
    }

    while scenes.len() >= 2 && scenes[scenes.len() - 1] == scenes[scenes.len() - 2] {
        scenes.pop();
    }
    Ok(Scenario { scenes })
}

/// One line per scenario: scenes joined by ` | `, cars by spaces, each car
/// as `name=index,lane,position`. Field order is fixed; consumed by render
/// and external tools.
pub fn format_scenario(m: &Model, pos: &PositionAssignment, s: &Scenario) -> String {
    let scenes: Vec<String> = s
        .scenes
        .iter()
        .map(|scene| {
            let cars: Vec<String> = scene
                .boxes()
                .iter()
                .enumerate()
                .map(|(c, &b)| {
                    let info = m.box_info(b);
                    format!(
                        "{}={},{},{}",
                        m.car_name(c),
                        info.index,
                        m.lane_name(info.lane),
                        pos.get(b)
                    )
                })
                .collect();
            cars.join(" ")
        })
        .collect();
    scenes.join(" | ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{bench, fig2, fig3_sync, random_acyclic};
    use crate::model::{BoxId, Model, RawModel};
    use crate::oracle;
    use crate::positions;

    fn scene_sets(runs: &[Scenario]) -> BTreeSet<Vec<Configuration>> {
        runs.iter().map(|s| s.scenes.clone()).collect()
    }

    #[test]
    fn fig2_enumerates_six_matching_oracle() {
        let m = Model::compile(&fig2()).unwrap();
        let r = enumerate_scenarios(&m, &EnumOptions::default()).unwrap();
        assert_eq!(r.count, 6);
        assert!(r.complete);
        let o = oracle::oracle_enumerate(&m, None, None).unwrap();
        assert_eq!(scene_sets(&r.scenarios), scene_sets(&o.scenarios));
    }

    #[test]
    fn bench_small_counts() {
        for (n, want) in [(1u32, 2u64), (2, 6), (3, 20), (4, 70)] {
            let (count, complete) = count_scenarios(&bench(n), &EnumOptions::default()).unwrap();
            assert_eq!(count, want, "bench({n})");
            assert!(complete);
        }
    }

    #[test]
    fn bench1_run_decodes_expected_scenes() {
        let m = bench(1);
        let r = enumerate_scenarios(&m, &EnumOptions::default()).unwrap();
        assert_eq!(r.count, 2);
        let b = |car: &str, i: u32| m.find_box(&BoxId::new(car, i)).unwrap();
        let lr = vec![
            Configuration::new(vec![b("LCar", 0), b("RCar", 0)]),
            Configuration::new(vec![b("LCar", 1), b("RCar", 0)]),
            Configuration::new(vec![b("LCar", 1), b("RCar", 1)]),
        ];
        assert!(scene_sets(&r.scenarios).contains(&lr));
    }

    #[test]
    fn sync_model_has_one_uninterleaved_scenario() {
        let m = fig3_sync();
        let r = enumerate_scenarios(&m, &EnumOptions::default()).unwrap();
        assert_eq!(r.count, 1);
        let l0 = m.find_box(&BoxId::new("LCar", 0)).unwrap();
        let r1 = m.find_box(&BoxId::new("RCar", 1)).unwrap();
        for run in &r.scenarios {
            for scene in &run.scenes {
                assert!(!(scene.boxes().contains(&l0) && scene.boxes().contains(&r1)));
            }
        }
    }

    #[test]
    fn distance_filter_bench3_gives_18() {
        let o = EnumOptions {
            filter: Some(SceneFilter::DistanceBound(3)),
            ..Default::default()
        };
        let (count, complete) = count_scenarios(&bench(3), &o).unwrap();
        assert_eq!(count, 18);
        assert!(complete);
    }

    #[test]
    fn filtered_set_is_a_subset() {
        let m = bench(3);
        let all = enumerate_scenarios(&m, &EnumOptions::default()).unwrap();
        let filtered = enumerate_scenarios(
            &m,
            &EnumOptions {
                filter: Some(SceneFilter::DistanceBound(2)),
                ..Default::default()
            },
        )
        .unwrap();
        let all_set = scene_sets(&all.scenarios);
        for s in &filtered.scenarios {
            assert!(all_set.contains(&s.scenes));
        }
        assert!(filtered.count < all.count);
    }

    #[test]
    fn limit_cuts_off_incomplete() {
        let o = EnumOptions {
            limit: Some(5),
            ..Default::default()
        };
        let r = enumerate_scenarios(&bench(3), &o).unwrap();
        assert_eq!(r.count, 5);
        assert!(!r.complete);
    }

    #[test]
    fn zero_time_budget_is_incomplete_but_usable() {
        let o = EnumOptions {
            max_time: Some(Duration::ZERO),
            ..Default::default()
        };
        let r = enumerate_scenarios(&bench(3), &o).unwrap();
        assert!(r.count >= 1);
        assert!(r.count < 20);
        assert!(!r.complete);
    }

    #[test]
    fn single_car_chain_has_one_scenario() {
        let mut raw = RawModel::default();
        raw.add_lane("L");
        for i in 0..4 {
            raw.add_box("Car", i, "L", None);
        }
        raw.add_init("Car", 0);
        for i in 0..3 {
            raw.add_trans("Car", i, i + 1);
        }
        let m = Model::compile(&raw).unwrap();
        let (count, complete) = count_scenarios(&m, &EnumOptions::default()).unwrap();
        assert_eq!(count, 1);
        assert!(complete);
    }

    #[test]
    fn transitionless_model_yields_the_initial_scene() {
        let mut raw = RawModel::default();
        raw.add_lane("L");
        raw.add_box("Car", 0, "L", None);
        raw.add_init("Car", 0);
        let m = Model::compile(&raw).unwrap();
        let r = enumerate_scenarios(&m, &EnumOptions::default()).unwrap();
        assert_eq!(r.count, 1);
        assert_eq!(r.scenarios[0].scenes, vec![m.initial_configuration()]);
    }

    #[test]
    fn oversized_k_changes_nothing() {
        let m = bench(2);
        let base = enumerate_scenarios(&m, &EnumOptions::default()).unwrap();
        let padded = enumerate_scenarios(
            &m,
            &EnumOptions {
                k: Some(m.longest_run_bound().unwrap() + 3),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(padded.complete);
        assert!(padded.saturated);
        assert_eq!(scene_sets(&base.scenarios), scene_sets(&padded.scenarios));
    }

    #[test]
    fn undersized_k_is_flagged_unsaturated() {
        let m = bench(2);
        let r = enumerate_scenarios(
            &m,
            &EnumOptions {
                k: Some(2),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!r.saturated);
        assert!(!r.complete);
    }

    #[test]
    fn cyclic_model_without_k_is_an_error() {
        let mut raw = fig2();
        raw.add_trans("LCar", 2, 0);
        let m = Model::compile(&raw).unwrap();
        assert!(matches!(
            enumerate_scenarios(&m, &EnumOptions::default()),
            Err(EnumError::Cyclic(_))
        ));
        // With an explicit bound the loop terminates and reports truncation.
        let r = enumerate_scenarios(
            &m,
            &EnumOptions {
                k: Some(3),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!r.saturated);
    }

    #[test]
    fn matches_oracle_on_random_models() {
        for seed in 0..30u64 {
            let m = random_acyclic(seed, 4);
            let sat = enumerate_scenarios(&m, &EnumOptions::default()).unwrap();
            let orc = oracle::oracle_enumerate(&m, None, None).unwrap();
            assert_eq!(
                scene_sets(&sat.scenarios),
                scene_sets(&orc.scenarios),
                "seed {seed} ({})",
                m.name()
            );
        }
    }

    #[test]
    fn scenario_line_format() {
        let m = bench(1);
        let pos = positions::resolve_positions(&m).unwrap();
        let b = |car: &str, i: u32| m.find_box(&BoxId::new(car, i)).unwrap();
        let s = Scenario {
            scenes: vec![
                Configuration::new(vec![b("LCar", 0), b("RCar", 0)]),
                Configuration::new(vec![b("LCar", 1), b("RCar", 0)]),
            ],
        };
        assert_eq!(
            format_scenario(&m, &pos, &s),
            "LCar=0,Left,0 RCar=0,Right,0 | LCar=1,Left,1 RCar=0,Right,0"
        );
    }
}
