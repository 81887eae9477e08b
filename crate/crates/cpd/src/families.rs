//! Built-in model families: the small reference diagrams, the two-car
//! chain benchmark, a lane-change family in three constraint strengths, and
//! a seeded random generator for differential testing.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{BoxId, Model, Position, RawGuard, RawModel, Rel};

/// Two cars, two lanes, each a chain of two transitions. Denotes six
/// scenarios.
pub fn fig2() -> RawModel {
    let mut raw = RawModel {
        name: "fig2".into(),
        ..Default::default()
    };
    raw.add_lane("Left");
    raw.add_lane("Right");
    for i in 0..3 {
        raw.add_box("LCar", i, "Left", Some(Position::Concrete(i)));
        raw.add_box("RCar", i, "Right", Some(Position::Concrete(i)));
    }
    raw.add_init("LCar", 0);
    raw.add_init("RCar", 0);
    for i in 0..2 {
        raw.add_trans("LCar", i, i + 1);
        raw.add_trans("RCar", i, i + 1);
    }
    raw
}

/// Two one-step chains joined in a single sync group: both cars advance
/// atomically, so no scene mixes old and new positions.
pub fn fig3_sync() -> Model {
    let mut raw = RawModel {
        name: "fig3_sync".into(),
        ..Default::default()
    };
    raw.add_lane("Left");
    raw.add_lane("Right");
    for i in 0..2 {
        raw.add_box("LCar", i, "Left", Some(Position::Concrete(i)));
        raw.add_box("RCar", i, "Right", Some(Position::Concrete(i)));
    }
    raw.add_init("LCar", 0);
    raw.add_init("RCar", 0);
    raw.add_trans("LCar", 0, 1);
    raw.add_trans("RCar", 0, 1);
    raw.add_sync(vec![
        (BoxId::new("LCar", 0), BoxId::new("LCar", 1)),
        (BoxId::new("RCar", 0), BoxId::new("RCar", 1)),
    ]);
    Model::compile(&raw).unwrap()
}

/// Two cars in separate lanes, each a chain of `n` transitions with unit
/// spacing. The interleavings give binomial(2n, n) scenarios.
pub fn bench(n: u32) -> Model {
    let mut raw = RawModel {
        name: format!("bench{n}"),
        ..Default::default()
    };
    raw.add_lane("Left");
    raw.add_lane("Right");
    for i in 0..=n {
        raw.add_box("LCar", i, "Left", Some(Position::Concrete(i)));
        raw.add_box("RCar", i, "Right", Some(Position::Concrete(i)));
    }
    raw.add_init("LCar", 0);
    raw.add_init("RCar", 0);
    for i in 0..n {
        raw.add_trans("LCar", i, i + 1);
        raw.add_trans("RCar", i, i + 1);
    }
    Model::compile(&raw).unwrap()
}

/// Constraint strength of a [`lane_change`] variant, weakest protection last.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strength {
    /// Guards plus a sync group; collision-free.
    NoCollision,
    /// Guards only; some collisions remain.
    Conditional,
    /// Every transition normal; most scenarios, most collisions.
    Normal,
}

/// A two-car lane change: EgoCar crosses from the left lane to the right
/// lane while RCar advances in it. EgoCar's crossing boxes share positions
/// with RCar's path, so unguarded variants can collide.
pub fn lane_change(strength: Strength) -> Model {
    let mut raw = RawModel {
        name: match strength {
            Strength::NoCollision => "lane_change_nc".into(),
            Strength::Conditional => "lane_change_c".into(),
            Strength::Normal => "lane_change_n".into(),
        },
        ..Default::default()
    };
    raw.add_lane("Left");
    raw.add_lane("Crossing");
    raw.add_lane("Right");

    // EgoCar: Left 0,1 then Crossing 2 then Right 3.
    raw.add_box("EgoCar", 0, "Left", Some(Position::Concrete(0)));
    raw.add_box("EgoCar", 1, "Left", Some(Position::Concrete(1)));
    raw.add_box("EgoCar", 2, "Crossing", Some(Position::Concrete(1)));
    raw.add_box("EgoCar", 3, "Right", Some(Position::Concrete(1)));
    // RCar: Right lane chain through the merge point.
    for i in 0..3 {
        raw.add_box("RCar", i, "Right", Some(Position::Concrete(i)));
    }
    raw.add_init("EgoCar", 0);
    raw.add_init("RCar", 0);

    raw.add_trans("EgoCar", 0, 1);
    raw.add_trans("RCar", 0, 1);
    raw.add_trans("RCar", 1, 2);
    match strength {
        Strength::Normal => {
            raw.add_trans("EgoCar", 1, 2);
            raw.add_trans("EgoCar", 2, 3);
        }
        Strength::Conditional => {
            // Only start crossing while the merge point ahead is free.
            raw.add_guarded_trans("EgoCar", 1, 2, RawGuard::Absent(BoxId::new("RCar", 1)));
            raw.add_trans("EgoCar", 2, 3);
        }
        Strength::NoCollision => {
            raw.add_guarded_trans("EgoCar", 1, 2, RawGuard::Absent(BoxId::new("RCar", 1)));
            // Complete the merge in lockstep with RCar passing the point.
            raw.add_trans("EgoCar", 2, 3);
            raw.add_sync(vec![
                (BoxId::new("EgoCar", 2), BoxId::new("EgoCar", 3)),
                (BoxId::new("RCar", 1), BoxId::new("RCar", 2)),
            ]);
        }
    }
    // EgoCar.3 and RCar.1 share lane and height: the potential collision.
    raw.add_constraint(BoxId::new("EgoCar", 3), Rel::Eq, BoxId::new("RCar", 1));
    Model::compile(&raw).unwrap()
}

/// Deterministic random acyclic model for differential tests: up to
/// `max_cars` cars, at most 12 boxes total, with a mix of guards and sync
/// groups. Positions are concrete (index spacing) in two or three lanes.
pub fn random_acyclic(seed: u64, max_cars: usize) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_cars = rng.gen_range(1..=max_cars.min(4));
    let n_lanes = rng.gen_range(2..=3usize);
    let mut raw = RawModel {
        name: format!("random{seed}"),
        ..Default::default()
    };
    for l in 0..n_lanes {
        raw.add_lane(&format!("L{l}"));
    }
    let mut budget = 12usize;
    let mut sizes = Vec::new();
    for c in 0..n_cars {
        let remaining_cars = n_cars - c;
        let max_here = (budget - (remaining_cars - 1)).min(4);
        let sz = rng.gen_range(1..=max_here.max(1));
        budget -= sz;
        sizes.push(sz as u32);
    }
    let car_name = |c: usize| format!("C{c}");
    for (c, &sz) in sizes.iter().enumerate() {
        for i in 0..sz {
            let lane = format!("L{}", rng.gen_range(0..n_lanes));
            raw.add_box(&car_name(c), i, &lane, Some(Position::Concrete(i)));
        }
        raw.add_init(&car_name(c), 0);
    }
    // Forward edges only, so the graphs stay acyclic.
    let mut plain: Vec<(usize, u32, u32)> = Vec::new();
    for (c, &sz) in sizes.iter().enumerate() {
        for i in 0..sz {
            for j in (i + 1)..sz {
                let p = if j == i + 1 { 0.85 } else { 0.15 };
                if rng.gen_bool(p) {
                    if n_cars > 1 && rng.gen_bool(0.25) {
                        let mut other = rng.gen_range(0..n_cars);
                        if other == c {
                            other = (other + 1) % n_cars;
                        }
                        let ob = rng.gen_range(0..sizes[other]);
                        let cond = BoxId::new(&car_name(other), ob);
                        let guard = if rng.gen_bool(0.5) {
                            RawGuard::Exists(cond)
                        } else {
                            RawGuard::Absent(cond)
                        };
                        raw.add_guarded_trans(&car_name(c), i, j, guard);
                    } else {
                        raw.add_trans(&car_name(c), i, j);
                        plain.push((c, i, j));
                    }
                }
            }
        }
    }
    // Occasionally tie one plain transition per car into a sync group.
    if n_cars >= 2 && rng.gen_bool(0.3) {
        let mut members = Vec::new();
        let mut used_cars = Vec::new();
        for &(c, i, j) in &plain {
            if used_cars.contains(&c) {
                continue;
            }
            if rng.gen_bool(0.6) {
                members.push((BoxId::new(&car_name(c), i), BoxId::new(&car_name(c), j)));
                used_cars.push(c);
            }
        }
        if members.len() >= 2 {
            raw.add_sync(members);
        }
    }
    Model::compile(&raw).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bench_shapes() {
        let m = bench(3);
        assert_eq!(m.num_cars(), 2);
        assert_eq!(m.num_boxes(), 8);
        assert_eq!(m.transitions().len(), 6);
        assert_eq!(m.longest_run_bound().unwrap(), 6);
    }

    #[test]
    fn lane_change_variants_compile() {
        for s in [Strength::NoCollision, Strength::Conditional, Strength::Normal] {
            let m = lane_change(s);
            assert!(m.longest_run_bound().is_ok());
        }
    }

    #[test]
    fn random_models_are_acyclic_and_deterministic() {
        for seed in 0..50 {
            let a = random_acyclic(seed, 4);
            let b = random_acyclic(seed, 4);
            assert_eq!(a, b);
            assert!(a.longest_run_bound().is_ok());
        }
    }
}
