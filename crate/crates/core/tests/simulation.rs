use std::collections::HashMap;

use proptest::prelude::*;
use proptest::strategy::Strategy as Gen;
use swarm_energy::events::EventKind;
use swarm_energy::experiment::sweep_records;
use swarm_energy::world::ArenaConfig;
use swarm_energy::{ExperimentConfig, RobotState, RunRecord, SimConfig, Strategy, World};

fn small_config(tick_limit: u64) -> SimConfig {
    SimConfig {
        arena: ArenaConfig {
            width: 4.0,
            height: 4.0,
            nest_width: 0.8,
            nest_height: 0.8,
            tick_limit,
            live_resources: 6,
            respawn_until: 10,
            ..ArenaConfig::default()
        },
        ..SimConfig::default()
    }
}

fn any_strategy() -> impl Gen<Value = Strategy> {
    (0..Strategy::ALL.len()).prop_map(|i| Strategy::ALL[i])
}

#[test]
fn records_do_not_depend_on_strategy_order() {
    let keyed = |strategies: Vec<Strategy>| {
        let config = ExperimentConfig {
            strategies,
            sizes: vec![2, 4],
            replicates: 3,
            sim: small_config(20_000),
            ..ExperimentConfig::default()
        };
        sweep_records(&config)
            .unwrap()
            .into_iter()
            .map(|r| ((r.strategy.clone(), r.swarm_size, r.seed), r))
            .collect::<HashMap<_, RunRecord>>()
    };
    let forward = keyed(vec![Strategy::Naive, Strategy::AdaptiveNull, Strategy::Liu]);
    let backward = keyed(vec![Strategy::Liu, Strategy::AdaptiveNull, Strategy::Naive]);
    assert_eq!(forward.len(), 18);
    assert_eq!(forward, backward);
}

#[test]
fn replicates_get_distinct_seeds() {
    let config = ExperimentConfig {
        strategies: vec![Strategy::Naive],
        sizes: vec![2],
        replicates: 5,
        sim: small_config(2_000),
        ..ExperimentConfig::default()
    };
    let mut seeds: Vec<u64> = sweep_records(&config)
        .unwrap()
        .iter()
        .map(|r| r.seed)
        .collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), 5);
}

#[test]
fn null_swarm_only_shrinks_after_first_park() {
    let mut world = World::new(&SimConfig::default(), Strategy::AdaptiveNull, 8, 21).unwrap();
    let mut parked = 0;
    while world.termination().is_none() {
        world.step().unwrap();
        let now = world
            .robots
            .iter()
            .filter(|r| r.state == RobotState::Inactive)
            .count();
        assert!(now >= parked);
        parked = now;
    }
    assert!(parked > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn record_matches_robot_counters(strategy in any_strategy(), k in 1usize..6, seed: u64) {
        let mut world = World::new(&small_config(3_000), strategy, k, seed).unwrap();
        let reason = world.run().unwrap();
        let record = RunRecord::from_log(world.log(), strategy.name(), k, seed, world.tick, reason);
        prop_assert_eq!(record.resources_collected, world.delivered);
        for robot in &world.robots {
            prop_assert!((record.depleted[robot.id] - robot.depleted()).abs() < 1e-9);
            let residual = if robot.state == RobotState::Dead { 0.0 } else { robot.battery.level() };
            prop_assert!((record.residual[robot.id] - residual).abs() < 1e-12);
        }
    }

    #[test]
    fn robots_stay_in_the_arena(strategy in any_strategy(), k in 1usize..10, seed: u64) {
        let config = small_config(1_500);
        let bounds = config.arena.bounds();
        let mut world = World::new(&config, strategy, k, seed).unwrap();
        while world.termination().is_none() {
            world.step().unwrap();
            for robot in &world.robots {
                prop_assert!(bounds.contains(robot.position), "{:?}", robot.position);
            }
        }
    }

    #[test]
    fn event_logs_are_reproducible(strategy in any_strategy(), k in 1usize..6, seed: u64) {
        let run = || {
            let mut world = World::new(&small_config(1_500), strategy, k, seed).unwrap();
            world.run().unwrap();
            world.into_log()
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a.events(), b.events());
    }

    #[test]
    fn adaptive_targets_cover_the_reserve(seed: u64, k in 1usize..6) {
        let mut world = World::new(&small_config(4_000), Strategy::AdaptiveWell, k, seed).unwrap();
        world.run().unwrap();
        for e in world.log().events() {
            if let EventKind::Charged { target, lower, .. } = e.kind {
                prop_assert!(target >= lower, "target {} below lower {}", target, lower);
            }
        }
    }
}
