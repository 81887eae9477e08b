//! Resolution of parametric box positions.
//!
//! Position constraints (`pos(a) < pos(b)` etc.) form a difference-constraint
//! system over naturals. Concrete boxes are anchored to a synthetic origin
//! node; `pos(a) < pos(b)` becomes the edge `pos(b) >= pos(a) + 1`. The least
//! solution is computed by longest-path relaxation from the origin, and a
//! positive-weight cycle is returned as an infeasibility witness. Entailed
//! (in)equalities are decided from all-pairs longest distances.

use std::collections::BTreeMap;
use std::fmt;

use crate::model::{BoxId, BoxRef, Model, Position, Rel};

/// One edge of the constraint graph: `pos(to) >= pos(from) + weight`.
#[derive(Debug, Clone)]
pub struct WitnessEdge {
    pub description: String,
    pub weight: i64,
}

/// The constraint system admits no solution; the cycle's weights sum to a
/// strictly positive value, demanding `x > x` for some position.
#[derive(Debug, Clone, thiserror::Error)]
pub struct Infeasible {
    pub cycle: Vec<WitnessEdge>,
}

impl fmt::Display for Infeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "position constraints are infeasible; contradictory cycle:")?;
        for e in &self.cycle {
            write!(f, " [{}]", e.description)?;
        }
        Ok(())
    }
}

/// Total integer position per box: satisfies every constraint, agrees with
/// concrete declarations, and is pointwise minimal over the naturals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionAssignment {
    pos: Vec<u32>,
}

impl PositionAssignment {
    pub fn get(&self, b: BoxRef) -> u32 {
        self.pos[b]
    }

    pub fn as_map(&self, m: &Model) -> BTreeMap<BoxId, u32> {
        self.pos
            .iter()
            .enumerate()
            .map(|(b, &p)| (m.box_id(b), p))
            .collect()
    }
}

struct Edge {
    from: usize,
    to: usize,
    weight: i64,
    description: String,
}

/// Builds the graph over box nodes plus one origin node (index
/// `m.num_boxes()`) fixed at position 0.
fn build_edges(m: &Model) -> Vec<Edge> {
    let origin = m.num_boxes();
    let mut edges = Vec::new();
    for b in 0..m.num_boxes() {
        // Positions are naturals.
        edges.push(Edge {
            from: origin,
            to: b,
            weight: 0,
            description: format!("pos({}) >= 0", m.box_id(b)),
        });
        if let Position::Concrete(p) = m.box_info(b).pos {
            edges.push(Edge {
                from: origin,
                to: b,
                weight: p as i64,
                description: format!("pos({}) = {p}", m.box_id(b)),
            });
            edges.push(Edge {
                from: b,
                to: origin,
                weight: -(p as i64),
                description: format!("pos({}) = {p}", m.box_id(b)),
            });
        }
    }
    for c in m.constraints() {
        let (lhs, rhs) = (m.box_id(c.lhs), m.box_id(c.rhs));
        match c.rel {
            Rel::Lt => edges.push(Edge {
                from: c.lhs,
                to: c.rhs,
                weight: 1,
                description: format!("pos({lhs}) < pos({rhs})"),
            }),
            Rel::Le => edges.push(Edge {
                from: c.lhs,
                to: c.rhs,
                weight: 0,
                description: format!("pos({lhs}) <= pos({rhs})"),
            }),
            Rel::Eq => {
                edges.push(Edge {
                    from: c.lhs,
                    to: c.rhs,
                    weight: 0,
                    description: format!("pos({lhs}) = pos({rhs})"),
                });
                edges.push(Edge {
                    from: c.rhs,
                    to: c.lhs,
                    weight: 0,
                    description: format!("pos({lhs}) = pos({rhs})"),
                });
            }
        }
    }
    edges
}

/// Least natural-number solution of the constraint system, or an
/// infeasibility witness. Deterministic in the model's canonical box order.
pub fn resolve_positions(m: &Model) -> Result<PositionAssignment, Infeasible> {
    let n = m.num_boxes() + 1;
    let origin = m.num_boxes();
    let edges = build_edges(m);

    let mut dist = vec![i64::MIN; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    dist[origin] = 0;
    for _ in 0..n {
        let mut changed = false;
        for (ei, e) in edges.iter().enumerate() {
            if dist[e.from] != i64::MIN && dist[e.from] + e.weight > dist[e.to] {
                dist[e.to] = dist[e.from] + e.weight;
                pred[e.to] = Some(ei);
                changed = true;
            }
        }
        if !changed {
            let pos = dist[..m.num_boxes()]
                .iter()
                .map(|&d| u32::try_from(d).expect("floor keeps positions non-negative"))
                .collect();
            return Ok(PositionAssignment { pos });
        }
    }
    // Still relaxing after n rounds: a positive cycle exists. Keep pumping
    // rounds until the predecessor chain of a freshly relaxed node closes on
    // itself, then read the cycle off that chain.
    for _ in 0..2 * n {
        let mut witness = None;
        for (ei, e) in edges.iter().enumerate() {
            if dist[e.from] != i64::MIN && dist[e.from] + e.weight > dist[e.to] {
                dist[e.to] = dist[e.from] + e.weight;
                pred[e.to] = Some(ei);
                witness = Some(e.to);
            }
        }
        let start_node = witness.expect("non-convergence implies a relaxable edge");
        let mut node = start_node;
        let mut seen = vec![false; n];
        let cycle_start = loop {
            seen[node] = true;
            match pred[node] {
                None => break None,
                Some(ei) => {
                    node = edges[ei].from;
                    if seen[node] {
                        break Some(node);
                    }
                }
            }
        };
        if let Some(start) = cycle_start {
            let mut node = start;
            let mut cycle = Vec::new();
            loop {
                let ei = pred[node].unwrap();
                cycle.push(WitnessEdge {
                    description: edges[ei].description.clone(),
                    weight: edges[ei].weight,
                });
                node = edges[ei].from;
                if node == start {
                    break;
                }
            }
            cycle.reverse();
            return Err(Infeasible { cycle });
        }
    }
    unreachable!("positive cycle present but not recovered")
}

/// All-pairs entailment over the constraint system: `lower_bound(a, b)` is
/// the tightest provable `pos(b) - pos(a)` lower bound.
pub struct Entailment {
    n: usize,
    dist: Vec<i64>,
}

impl Entailment {
    fn d(&self, a: usize, b: usize) -> i64 {
        self.dist[a * self.n + b]
    }

    /// True iff every solution assigns `pos(a) = pos(b)`.
    pub fn equal(&self, a: BoxRef, b: BoxRef) -> bool {
        a == b || (self.d(a, b) >= 0 && self.d(b, a) >= 0)
    }
}

/// Compute entailment data; fails on an infeasible system.
pub fn entailment(m: &Model) -> Result<Entailment, Infeasible> {
    resolve_positions(m)?;
    let n = m.num_boxes() + 1;
    let mut dist = vec![i64::MIN; n * n];
    for v in 0..n {
        dist[v * n + v] = 0;
    }
    for e in build_edges(m) {
        let cell = &mut dist[e.from * n + e.to];
        *cell = (*cell).max(e.weight);
    }
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            if dik == i64::MIN {
                continue;
            }
            for j in 0..n {
                let dkj = dist[k * n + j];
                if dkj != i64::MIN && dik + dkj > dist[i * n + j] {
                    dist[i * n + j] = dik + dkj;
                }
            }
        }
    }
    Ok(Entailment { n, dist })
}

/// True iff the constraint system forces `pos(a) = pos(b)` in every solution.
pub fn entailed_equal(m: &Model, a: BoxRef, b: BoxRef) -> Result<bool, Infeasible> {
    Ok(entailment(m)?.equal(a, b))
}

/// Check an assignment against every constraint and concrete declaration.
pub fn satisfies(m: &Model, pos: &PositionAssignment) -> bool {
    for b in 0..m.num_boxes() {
        if let Position::Concrete(p) = m.box_info(b).pos {
            if pos.get(b) != p {
                return false;
            }
        }
    }
    m.constraints().iter().all(|c| {
        let (l, r) = (pos.get(c.lhs), pos.get(c.rhs));
        match c.rel {
            Rel::Lt => l < r,
            Rel::Le => l <= r,
            Rel::Eq => l == r,
        }
    })
}
