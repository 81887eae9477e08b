//! Explicit-state enumeration of maximal runs by direct token-game search.
//!
//! This is the independent ground truth the SAT pipeline is differentially
//! tested against: no propositional logic, just depth-first search over
//! enabled firings. It exists for truth, not speed.

use std::collections::BTreeSet;

use crate::analyze::{PreparedFilter, SceneFilter};
use crate::model::{CyclicModel, Firing, Model, Scenario};
use crate::positions::Infeasible;

/// Deduplicated set of maximal runs. Distinct firing sequences with
/// identical scene sequences count once: a scenario is its scenes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSet {
    pub scenarios: Vec<Scenario>,
}

impl RunSet {
    pub fn count(&self) -> u64 {
        self.scenarios.len() as u64
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Cyclic(#[from] CyclicModel),
    #[error("run exceeded depth limit {0}")]
    DepthExceeded(usize),
    #[error(transparent)]
    Positions(#[from] Infeasible),
}

/// Depth-first search over enabled firings; a run is recorded when it
/// reaches a deadlocked configuration, and kept when the filter accepts the
/// complete run. `max_depth` (a firing-count bound) is required for cyclic
/// models; acyclic ones default to their longest run bound.
pub fn oracle_enumerate(
    m: &Model,
    filter: Option<&SceneFilter>,
    max_depth: Option<usize>,
) -> Result<RunSet, OracleError> {
    let depth = match max_depth {
        Some(d) => d,
        None => m.longest_run_bound()? as usize,
    };
    let prepared = match filter {
        Some(f) => Some(PreparedFilter::new(m, f.clone())?),
        None => None,
    };

    struct Frame {
        firings: Vec<Firing>,
        next: usize,
    }

    let mut set: BTreeSet<Scenario> = BTreeSet::new();
    let init = m.initial_configuration();
    let mut path = vec![init.clone()];
    // Explicit stack: run depth can reach hundreds on stress models.
    let mut frames = vec![Frame {
        firings: m.enabled_firings(&init),
        next: 0,
    }];

    while let Some(top) = frames.last_mut() {
        if top.firings.is_empty() {
            let run = Scenario {
                scenes: path.clone(),
            };
            if prepared.as_ref().map_or(true, |p| p.accepts(&run)) {
                set.insert(run);
            }
            frames.pop();
            path.pop();
            continue;
        }
        if top.next == top.firings.len() {
            frames.pop();
            path.pop();
            continue;
        }
        let f = top.firings[top.next];
        top.next += 1;
        if path.len() - 1 >= depth {
            return Err(OracleError::DepthExceeded(depth));
        }
        let cur = path.last().unwrap();
        let next = m
            .apply_firing(cur, f)
            .expect("enabled firing applies");
        let firings = m.enabled_firings(&next);
        path.push(next);
        frames.push(Frame { firings, next: 0 });
    }

    Ok(RunSet {
        scenarios: set.into_iter().collect(),
    })
}

/// Number of maximal runs of an acyclic model.
pub fn oracle_count(m: &Model) -> Result<u64, OracleError> {
    Ok(oracle_enumerate(m, None, None)?.count())
}
