//! Per-robot foraging state machine.
//!
//! A round runs Charging -> Searching -> Retreating -> Charging. Picking up a
//! resource is instantaneous and happens inside Searching. Each tick applies
//! exactly one of the following, in order of precedence:
//!
//! 1. Charging: count down the nest delay, then close the round and wait for
//!    the policy to release the robot.
//! 2. Searching with a resource in range: pay the collection cost and retreat.
//! 3. Searching at or below the lower threshold (or past the search budget):
//!    retreat empty-handed.
//! 4. Retreating inside the nest: deposit, start charging.
//! 5. Otherwise drain one tick of energy and count robot contacts.
//!
//! A robot whose battery reaches zero outside the nest dies.

use std::f64::consts::TAU;

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::battery::{Battery, EnergyLevel, EnergyRates, RoundOutcome};
use crate::events::{EventKind, RetreatReason};
use crate::geometry::Vec2;
use crate::strategy::EnergyPolicy;

/// Nest delay applied on every arrival, in ticks.
pub const NEST_DELAY: u64 = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FsmError {
    #[error("robot {0} is dead and cannot be ticked")]
    TickOnDead(usize),
    #[error("robot {id} is not charging (state {state:?})")]
    NotCharging { id: usize, state: RobotState },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RobotState {
    Charging,
    Searching,
    Retreating,
    Dead,
    Inactive,
}

impl RobotState {
    /// Moving through the arena.
    pub fn is_active(self) -> bool {
        matches!(self, RobotState::Searching | RobotState::Retreating)
    }

    pub fn is_absorbing(self) -> bool {
        matches!(self, RobotState::Dead | RobotState::Inactive)
    }
}

/// What a robot perceives at the start of its tick.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SensorReport {
    /// Index of the nearest live resource in pickup range.
    pub resource: Option<usize>,
    /// Other active robots within collision range.
    pub robot_contacts: u32,
    pub in_nest: bool,
}

/// Side effects of a tick the world must apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TickEffect {
    pub picked: Option<usize>,
    pub delivered: bool,
    pub died: bool,
    /// The tick drained travel energy, so the robot moves.
    pub moved: bool,
}

#[derive(Debug)]
pub struct Robot {
    pub id: usize,
    pub position: Vec2,
    pub heading: f64,
    pub state: RobotState,
    pub battery: Battery,
    pub carrying: bool,
    pub round: RoundOutcome,
    pub nest_delay: u64,
    pub policy: Box<dyn EnergyPolicy>,
    /// The current round has been settled with the policy and the robot is
    /// waiting to leave.
    round_closed: bool,
    depleted: f64,
}

impl Robot {
    /// A robot resting in the nest, charged and ready to leave.
    ///
    /// Battery-targeting policies start at the upper threshold, the others at
    /// full charge.
    pub fn new(id: usize, position: Vec2, battery: Battery, policy: Box<dyn EnergyPolicy>) -> Self {
        let start = if policy.targets_battery() {
            battery.upper()
        } else {
            1.0
        };
        Self {
            id,
            position,
            heading: 0.0,
            state: RobotState::Charging,
            battery: battery.with_level(EnergyLevel::saturating(start)),
            carrying: false,
            round: RoundOutcome::default(),
            nest_delay: 0,
            policy,
            round_closed: true,
            depleted: 0.0,
        }
    }

    /// Total energy drained over the robot's lifetime.
    pub fn depleted(&self) -> f64 {
        self.depleted
    }

    pub fn is_ready_to_depart(&self) -> bool {
        self.state == RobotState::Charging && self.round_closed && self.nest_delay == 0
    }

    fn drain(&mut self, amount: f64) -> f64 {
        let drained = self.battery.drain(amount);
        self.round.energy_spent += drained;
        self.depleted += drained;
        drained
    }

    fn should_retreat(&self) -> Option<RetreatReason> {
        if self.battery.level() <= self.battery.lower() {
            return Some(RetreatReason::LowEnergy);
        }
        match self.policy.search_budget() {
            Some(budget) if self.round.t_search >= budget => Some(RetreatReason::SearchBudget),
            _ => None,
        }
    }

    /// Advances the state machine by one tick. Movement is the world's job.
    pub fn tick(
        &mut self,
        sensed: &SensorReport,
        rates: &EnergyRates,
        rng: &mut dyn RngCore,
        events: &mut Vec<EventKind>,
    ) -> Result<TickEffect, FsmError> {
        let mut effect = TickEffect::default();
        match self.state {
            RobotState::Dead => return Err(FsmError::TickOnDead(self.id)),
            RobotState::Inactive => return Ok(effect),
            RobotState::Charging => {
                self.charge_tick(rng, events)?;
                return Ok(effect);
            }
            RobotState::Searching => {
                if let Some(resource) = sensed.resource {
                    let cost = self.drain(rates.collection);
                    self.carrying = true;
                    self.round.success = true;
                    self.state = RobotState::Retreating;
                    effect.picked = Some(resource);
                    events.push(EventKind::Collect { cost });
                } else if let Some(reason) = self.should_retreat() {
                    self.state = RobotState::Retreating;
                    events.push(EventKind::Retreat { reason });
                } else {
                    self.drain(rates.searching);
                    effect.moved = true;
                    self.round.t_search += 1;
                    self.round.encounters += sensed.robot_contacts;
                    if let Some(reason) = self.should_retreat() {
                        self.state = RobotState::Retreating;
                        events.push(EventKind::Retreat { reason });
                    }
                }
            }
            RobotState::Retreating => {
                if sensed.in_nest {
                    effect.delivered = self.carrying;
                    events.push(EventKind::Arrive {
                        success: self.round.success,
                        delivered: self.carrying,
                        encounters: self.round.encounters,
                        energy_spent: self.round.energy_spent,
                        t_search: self.round.t_search,
                        t_retreat: self.round.t_retreat,
                    });
                    self.carrying = false;
                    self.state = RobotState::Charging;
                    self.nest_delay = NEST_DELAY;
                    self.round_closed = false;
                    return Ok(effect);
                }
                self.drain(rates.retreating);
                effect.moved = true;
                self.round.t_retreat += 1;
                self.round.encounters += sensed.robot_contacts;
            }
        }

        if self.battery.level() <= 0.0 && !sensed.in_nest {
            self.state = RobotState::Dead;
            self.carrying = false;
            effect.died = true;
            effect.moved = false;
            events.push(EventKind::Death {
                energy_spent: self.round.energy_spent,
            });
        }
        Ok(effect)
    }

    /// One tick in the nest: nest delay countdown, round settlement, departure.
    pub fn charge_tick(
        &mut self,
        rng: &mut dyn RngCore,
        events: &mut Vec<EventKind>,
    ) -> Result<(), FsmError> {
        if self.state != RobotState::Charging {
            return Err(FsmError::NotCharging {
                id: self.id,
                state: self.state,
            });
        }
        if self.nest_delay > 0 {
            self.nest_delay -= 1;
            return Ok(());
        }
        if !self.round_closed {
            let outcome = self.round;
            let directive = self.policy.on_round_end(&mut self.battery, &outcome);
            let target =
                EnergyLevel::saturating(directive.target_level.value().max(self.battery.level()));
            self.battery = self.battery.with_level(target);
            self.round = RoundOutcome::default();
            self.round_closed = true;
            events.push(EventKind::Charged {
                target: directive.target_level.value(),
                lower: self.battery.lower(),
                capacity: self.battery.capacity(),
                extra_delay: directive.extra_nest_delay,
            });
            if directive.park {
                self.state = RobotState::Inactive;
                events.push(EventKind::Park {
                    level: self.battery.level(),
                });
                return Ok(());
            }
            self.nest_delay = directive.extra_nest_delay;
            if self.nest_delay > 0 {
                return Ok(());
            }
        }
        if self.policy.may_depart(rng) {
            self.state = RobotState::Searching;
            self.heading = rng.random_range(0.0..TAU);
            events.push(EventKind::Depart {
                level: self.battery.level(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::AdaptationWeights;
    use crate::strategy::{AdaptivePolicy, EeeVariant, NaivePolicy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn adaptive(variant: EeeVariant) -> Box<dyn EnergyPolicy> {
        Box::new(AdaptivePolicy::new(
            variant,
            AdaptationWeights::default(),
            10,
        ))
    }

    fn searching(level: f64, lower: f64) -> Robot {
        let mut robot = Robot::new(
            0,
            Vec2::default(),
            Battery::charged(lower, 0.5).unwrap(),
            adaptive(EeeVariant::Null),
        );
        robot.battery = robot.battery.with_level(EnergyLevel::new(level).unwrap());
        robot.state = RobotState::Searching;
        robot.round_closed = false;
        robot
    }

    #[test]
    fn drain_below_lower_triggers_retreat() {
        let mut robot = searching(0.31, 0.30);
        let rates = EnergyRates {
            searching: 0.02,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ev = Vec::new();
        robot
            .tick(&SensorReport::default(), &rates, &mut rng, &mut ev)
            .unwrap();
        assert!((robot.battery.level() - 0.29).abs() < TOL);
        assert_eq!(robot.state, RobotState::Retreating);
        assert!(!robot.carrying);
        assert_eq!(robot.round.t_search, 1);
    }

    #[test]
    fn resource_contact_collects() {
        let mut robot = searching(0.5, 0.3);
        let rates = EnergyRates {
            collection: 0.05,
            ..Default::default()
        };
        let sensed = SensorReport {
            resource: Some(4),
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ev = Vec::new();
        let effect = robot.tick(&sensed, &rates, &mut rng, &mut ev).unwrap();
        assert_eq!(effect.picked, Some(4));
        assert_eq!(robot.state, RobotState::Retreating);
        assert!(robot.carrying);
        assert!(robot.round.success);
        assert!((robot.battery.level() - 0.45).abs() < TOL);
    }

    #[test]
    fn arrival_starts_nest_delay() {
        let mut robot = searching(0.5, 0.3);
        robot.state = RobotState::Retreating;
        robot.carrying = true;
        let sensed = SensorReport {
            in_nest: true,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ev = Vec::new();
        let effect = robot
            .tick(&sensed, &EnergyRates::default(), &mut rng, &mut ev)
            .unwrap();
        assert!(effect.delivered);
        assert_eq!(robot.state, RobotState::Charging);
        assert_eq!(robot.nest_delay, 20);
        assert!(!robot.carrying);
    }

    #[test]
    fn nest_delay_counts_down() {
        let mut robot = searching(0.5, 0.3);
        robot.state = RobotState::Charging;
        robot.nest_delay = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        robot.charge_tick(&mut rng, &mut Vec::new()).unwrap();
        assert_eq!(robot.nest_delay, 2);
        assert_eq!(robot.state, RobotState::Charging);
    }

    #[test]
    fn expired_delay_adapts_and_departs() {
        let mut robot = searching(0.1, 0.3);
        robot.state = RobotState::Charging;
        robot.round = RoundOutcome {
            success: false,
            encounters: 2,
            energy_spent: 0.5,
            t_search: 400,
            t_retreat: 100,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        robot.charge_tick(&mut rng, &mut Vec::new()).unwrap();
        assert!((robot.battery.lower() - 0.41).abs() < TOL);
        assert!((robot.battery.capacity() - 0.61).abs() < TOL);
        assert_eq!(robot.battery.level(), 1.0);
        assert_eq!(robot.state, RobotState::Searching);
        assert_eq!(robot.round, RoundOutcome::default());
    }

    #[test]
    fn null_informed_parks_in_eee() {
        let mut robot = searching(0.2, 0.41);
        robot.battery = Battery::charged(0.41, 0.62)
            .unwrap()
            .with_level(EnergyLevel::new(0.2).unwrap());
        robot.state = RobotState::Charging;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ev = Vec::new();
        robot.charge_tick(&mut rng, &mut ev).unwrap();
        assert_eq!(robot.state, RobotState::Inactive);
        assert_eq!(robot.battery.level(), 1.0);
        assert!(matches!(ev.last(), Some(EventKind::Park { .. })));
        // inactive robots ignore further ticks
        let effect = robot
            .tick(
                &SensorReport::default(),
                &EnergyRates::default(),
                &mut rng,
                &mut ev,
            )
            .unwrap();
        assert_eq!(effect, TickEffect::default());
        assert_eq!(robot.state, RobotState::Inactive);
    }

    #[test]
    fn runs_dry_outside_nest() {
        let mut robot = searching(0.001, 0.0);
        robot.state = RobotState::Retreating;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ev = Vec::new();
        let effect = robot
            .tick(
                &SensorReport::default(),
                &EnergyRates::default(),
                &mut rng,
                &mut ev,
            )
            .unwrap();
        assert!(effect.died);
        assert_eq!(robot.state, RobotState::Dead);
        let err = robot
            .tick(
                &SensorReport::default(),
                &EnergyRates::default(),
                &mut rng,
                &mut ev,
            )
            .unwrap_err();
        assert_eq!(err, FsmError::TickOnDead(0));
    }

    #[test]
    fn charge_tick_outside_nest_is_rejected() {
        let mut robot = searching(0.5, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            robot.charge_tick(&mut rng, &mut Vec::new()),
            Err(FsmError::NotCharging { .. })
        ));
    }

    #[test]
    fn naive_starts_full() {
        let robot = Robot::new(
            0,
            Vec2::default(),
            Battery::default(),
            Box::new(NaivePolicy),
        );
        assert_eq!(robot.battery.level(), 1.0);
        assert!(robot.is_ready_to_depart());
        let robot = Robot::new(
            0,
            Vec2::default(),
            Battery::default(),
            adaptive(EeeVariant::Well),
        );
        assert!((robot.battery.level() - 0.8).abs() < TOL);
    }

    #[test]
    fn search_budget_forces_retreat() {
        let mut robot = Robot::new(
            0,
            Vec2::default(),
            Battery::default(),
            Box::new(crate::strategy::LiuPolicy::default()),
        );
        robot.state = RobotState::Searching;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ev = Vec::new();
        for _ in 0..200 {
            assert_eq!(robot.state, RobotState::Searching);
            robot
                .tick(
                    &SensorReport::default(),
                    &EnergyRates::default(),
                    &mut rng,
                    &mut ev,
                )
                .unwrap();
        }
        assert_eq!(robot.state, RobotState::Retreating);
        assert_eq!(robot.round.t_search, 200);
        assert!(matches!(
            ev.last(),
            Some(EventKind::Retreat {
                reason: RetreatReason::SearchBudget
            })
        ));
    }
}
