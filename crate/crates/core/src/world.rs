//! The 2D arena: nest, resources, robot kinematics, encounter detection and
//! run termination.

use std::f64::consts::TAU;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::battery::{Battery, BatteryError, EnergyRates};
use crate::events::{EventKind, EventLog};
use crate::geometry::{Rect, Vec2};
use crate::robot::{FsmError, Robot, RobotState, SensorReport};
use crate::strategy::{EnergyPolicy, PolicyParams, Strategy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Battery(#[from] BatteryError),
    #[error(transparent)]
    Fsm(#[from] FsmError),
    #[error("world already terminated ({0})")]
    Terminated(Termination),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArenaConfig {
    pub width: f64,
    pub height: f64,
    pub nest_width: f64,
    pub nest_height: f64,
    /// Meters per tick.
    pub robot_speed: f64,
    /// Resource pickup range.
    pub sensing_radius: f64,
    /// Robot-robot encounter range.
    pub collision_radius: f64,
    /// Maximum heading change per searching tick, radians.
    pub turn_max: f64,
    pub tick_limit: u64,
    /// Resources held live while respawning is on.
    pub live_resources: usize,
    /// Respawning stops after this many pickups.
    pub respawn_until: u64,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        Self {
            width: 10.0,
            height: 10.0,
            nest_width: 1.0,
            nest_height: 1.0,
            robot_speed: 0.05,
            sensing_radius: 0.15,
            collision_radius: 0.2,
            turn_max: 0.3,
            tick_limit: 200_000,
            live_resources: 25,
            respawn_until: 100,
        }
    }
}

impl ArenaConfig {
    pub fn bounds(&self) -> Rect {
        Rect {
            min: Vec2::new(0.0, 0.0),
            max: Vec2::new(self.width, self.height),
        }
    }

    pub fn nest(&self) -> Rect {
        Rect::centered(
            Vec2::new(self.width / 2.0, self.height / 2.0),
            self.nest_width,
            self.nest_height,
        )
    }

    /// Total number of resources a run can collect.
    pub fn total_resources(&self) -> u64 {
        self.live_resources as u64 + self.respawn_until
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let positive = [
            ("width", self.width),
            ("height", self.height),
            ("nest_width", self.nest_width),
            ("nest_height", self.nest_height),
            ("robot_speed", self.robot_speed),
            ("sensing_radius", self.sensing_radius),
            ("collision_radius", self.collision_radius),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(WorldError::Config(format!(
                    "{name} must be > 0, got {value}"
                )));
            }
        }
        if !(self.turn_max.is_finite() && self.turn_max >= 0.0) {
            return Err(WorldError::Config(format!(
                "turn_max must be >= 0, got {}",
                self.turn_max
            )));
        }
        if !self.bounds().strictly_contains(&self.nest()) {
            return Err(WorldError::Config(
                "nest must lie strictly inside the arena".into(),
            ));
        }
        if self.tick_limit == 0 {
            return Err(WorldError::Config("tick_limit must be > 0".into()));
        }
        Ok(())
    }
}

/// Everything needed to build a world apart from strategy, size and seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub arena: ArenaConfig,
    pub rates: EnergyRates,
    pub initial_lower: f64,
    pub initial_capacity: f64,
    pub policy: PolicyParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            arena: ArenaConfig::default(),
            rates: EnergyRates::default(),
            initial_lower: 0.3,
            initial_capacity: 0.5,
            policy: PolicyParams::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), WorldError> {
        self.arena.validate()?;
        self.rates.validate()?;
        self.policy.weights.validate()?;
        Battery::charged(self.initial_lower, self.initial_capacity)?;
        let l = &self.policy.labella;
        if !(0.0 <= l.p_min && l.p_min <= l.p && l.p <= l.p_max && l.p_max <= 1.0 && l.delta >= 0.0)
        {
            return Err(WorldError::Config(
                "labella parameters must satisfy 0 <= p_min <= p_init <= p_max <= 1".into(),
            ));
        }
        let t = &self.policy.liu;
        if !(0 < t.min && t.min <= t.budget && t.budget <= t.max) {
            return Err(WorldError::Config(
                "liu parameters must satisfy 0 < t_min <= t_init <= t_max".into(),
            ));
        }
        Ok(())
    }
}

/// Live resources plus collection bookkeeping.
///
/// Every pickup is replaced by a fresh resource until `respawn_until` pickups
/// have happened; after that the remaining resources only deplete.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourcePool {
    pub live: Vec<Vec2>,
    pub collected_total: u64,
    pub respawned_total: u64,
    pub initial_count: usize,
    pub respawn_until: u64,
}

impl ResourcePool {
    fn new(arena: &ArenaConfig, rng: &mut ChaCha8Rng) -> Self {
        let live = (0..arena.live_resources)
            .map(|_| spawn_point(arena, rng))
            .collect();
        Self::from_positions(live, arena.respawn_until)
    }

    pub fn from_positions(live: Vec<Vec2>, respawn_until: u64) -> Self {
        Self {
            initial_count: live.len(),
            live,
            collected_total: 0,
            respawned_total: 0,
            respawn_until,
        }
    }

    /// Index of the nearest live resource within `radius` of `p`.
    pub fn nearest_within(&self, p: Vec2, radius: f64) -> Option<usize> {
        let r2 = radius * radius;
        self.live
            .iter()
            .enumerate()
            .map(|(i, q)| (i, q.distance_sq(p)))
            .filter(|&(_, d2)| d2 <= r2)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }

    fn pick(&mut self, index: usize, arena: &ArenaConfig, rng: &mut ChaCha8Rng) {
        self.live.swap_remove(index);
        self.collected_total += 1;
        if self.collected_total <= self.respawn_until {
            self.live.push(spawn_point(arena, rng));
            self.respawned_total += 1;
        }
    }

    pub fn exhausted(&self) -> bool {
        self.live.is_empty() && self.collected_total >= self.respawn_until
    }
}

/// Uniform point in the arena, outside the nest.
fn spawn_point(arena: &ArenaConfig, rng: &mut ChaCha8Rng) -> Vec2 {
    let nest = arena.nest();
    loop {
        let p = Vec2::new(
            rng.random_range(0.0..arena.width),
            rng.random_range(0.0..arena.height),
        );
        if !nest.contains(p) {
            return p;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    AllCollected,
    EeeStop,
    AllDead,
    TickLimit,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::AllCollected => "all-collected",
            Termination::EeeStop => "eee-stop",
            Termination::AllDead => "all-dead",
            Termination::TickLimit => "tick-limit",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug)]
pub struct World {
    pub tick: u64,
    pub config: SimConfig,
    pub resources: ResourcePool,
    pub robots: Vec<Robot>,
    pub delivered: u64,
    rng: ChaCha8Rng,
    log: EventLog,
    terminated: Option<Termination>,
    scratch: Vec<EventKind>,
}

impl World {
    pub fn new(
        config: &SimConfig,
        strategy: Strategy,
        swarm_size: usize,
        seed: u64,
    ) -> Result<Self, WorldError> {
        let policies = (0..swarm_size)
            .map(|_| strategy.build(&config.policy))
            .collect();
        Self::with_policies(config, policies, seed)
    }

    /// Builds a world with one robot per policy, robots scattered in the nest
    /// and resources scattered outside it.
    pub fn with_policies(
        config: &SimConfig,
        policies: Vec<Box<dyn EnergyPolicy>>,
        seed: u64,
    ) -> Result<Self, WorldError> {
        config.validate()?;
        if policies.is_empty() {
            return Err(WorldError::Config("swarm size must be > 0".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arena = config.arena;
        let nest = arena.nest();
        let battery = Battery::charged(config.initial_lower, config.initial_capacity)?;
        let robots = policies
            .into_iter()
            .enumerate()
            .map(|(id, policy)| {
                let position = Vec2::new(
                    rng.random_range(nest.min.x..=nest.max.x),
                    rng.random_range(nest.min.y..=nest.max.y),
                );
                let mut robot = Robot::new(id, position, battery, policy);
                robot.heading = rng.random_range(0.0..TAU);
                robot
            })
            .collect();
        let resources = ResourcePool::new(&arena, &mut rng);
        Ok(Self {
            tick: 0,
            config: *config,
            resources,
            robots,
            delivered: 0,
            rng,
            log: EventLog::default(),
            terminated: None,
            scratch: Vec::new(),
        })
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn into_log(self) -> EventLog {
        self.log
    }

    pub fn termination(&self) -> Option<Termination> {
        self.terminated
    }

    /// Encounter counts and summed push-away vectors for every robot, from
    /// positions at the start of the tick. Only active robots collide.
    fn contacts(&self) -> Vec<(u32, Vec2)> {
        let r2 = self.config.arena.collision_radius.powi(2);
        let mut out = vec![(0u32, Vec2::default()); self.robots.len()];
        let active: Vec<usize> = self
            .robots
            .iter()
            .filter(|r| r.state.is_active())
            .map(|r| r.id)
            .collect();
        for (n, &a) in active.iter().enumerate() {
            let pa = self.robots[a].position;
            for &b in &active[n + 1..] {
                let pb = self.robots[b].position;
                if pa.distance_sq(pb) <= r2 {
                    out[a].0 += 1;
                    out[a].1 = out[a].1 + (pa - pb);
                    out[b].0 += 1;
                    out[b].1 = out[b].1 + (pb - pa);
                }
            }
        }
        out
    }

    /// Advances every living robot by one tick in id order.
    pub fn step(&mut self) -> Result<(), WorldError> {
        if let Some(reason) = self.terminated {
            return Err(WorldError::Terminated(reason));
        }
        let contacts = self.contacts();
        let arena = self.config.arena;
        let nest = arena.nest();
        for (i, &(robot_contacts, push)) in contacts.iter().enumerate() {
            let robot = &mut self.robots[i];
            if robot.state.is_absorbing() {
                continue;
            }
            let before = robot.state;
            let sensed = SensorReport {
                resource: if before == RobotState::Searching {
                    self.resources
                        .nearest_within(robot.position, arena.sensing_radius)
                } else {
                    None
                },
                robot_contacts,
                in_nest: nest.contains(robot.position),
            };
            self.scratch.clear();
            let effect = robot.tick(
                &sensed,
                &self.config.rates,
                &mut self.rng,
                &mut self.scratch,
            )?;
            for kind in self.scratch.drain(..) {
                self.log.push(self.tick, i, kind);
            }
            if let Some(index) = effect.picked {
                self.resources.pick(index, &arena, &mut self.rng);
            }
            if effect.delivered {
                self.delivered += 1;
            }
            // robots only move on ticks they paid for
            if effect.moved {
                match before {
                    RobotState::Searching => {
                        if robot_contacts > 0 && push.length() > 0.0 {
                            robot.heading = push.y.atan2(push.x);
                        }
                        search_move(robot, &arena, &mut self.rng);
                    }
                    _ => retreat_move(robot, nest.center(), arena.robot_speed),
                }
            }
        }
        self.tick += 1;
        if let Some(reason) = self.check_termination() {
            self.terminated = Some(reason);
            self.halt();
        }
        Ok(())
    }

    fn check_termination(&self) -> Option<Termination> {
        if self.resources.exhausted() && !self.robots.iter().any(|r| r.carrying) {
            return Some(Termination::AllCollected);
        }
        let mut living = self
            .robots
            .iter()
            .filter(|r| r.state != RobotState::Dead)
            .peekable();
        if living.peek().is_none() {
            return Some(Termination::AllDead);
        }
        if living.all(|r| {
            r.policy.endgame_reached(
                r.state == RobotState::Charging,
                r.state == RobotState::Inactive,
            )
        }) {
            return Some(Termination::EeeStop);
        }
        if self.tick >= self.config.arena.tick_limit {
            return Some(Termination::TickLimit);
        }
        None
    }

    fn halt(&mut self) {
        for robot in &self.robots {
            let energy_spent = if robot.state.is_active() {
                robot.round.energy_spent
            } else {
                0.0
            };
            self.log.push(
                self.tick,
                robot.id,
                EventKind::Halt {
                    level: robot.battery.level(),
                    energy_spent,
                },
            );
        }
    }

    /// Steps until a stop condition holds.
    pub fn run(&mut self) -> Result<Termination, WorldError> {
        loop {
            if let Some(reason) = self.terminated {
                return Ok(reason);
            }
            self.step()?;
        }
    }
}

/// Correlated random walk step with specular reflection at the walls.
pub fn search_move(robot: &mut Robot, arena: &ArenaConfig, rng: &mut impl Rng) {
    if arena.turn_max > 0.0 {
        robot.heading += rng.random_range(-arena.turn_max..=arena.turn_max);
    }
    let mut p = robot.position + Vec2::from_heading(robot.heading) * arena.robot_speed;
    let mut dir = Vec2::from_heading(robot.heading);
    if p.x < 0.0 {
        p.x = -p.x;
        dir.x = -dir.x;
    } else if p.x > arena.width {
        p.x = 2.0 * arena.width - p.x;
        dir.x = -dir.x;
    }
    if p.y < 0.0 {
        p.y = -p.y;
        dir.y = -dir.y;
    } else if p.y > arena.height {
        p.y = 2.0 * arena.height - p.y;
        dir.y = -dir.y;
    }
    robot.position = Vec2::new(p.x.clamp(0.0, arena.width), p.y.clamp(0.0, arena.height));
    robot.heading = dir.y.atan2(dir.x);
}

/// Straight-line step toward `target`, never overshooting it.
pub fn retreat_move(robot: &mut Robot, target: Vec2, speed: f64) {
    let to = target - robot.position;
    let dist = to.length();
    if dist <= speed {
        robot.position = target;
    } else {
        robot.heading = to.y.atan2(to.x);
        robot.position = robot.position + to * (speed / dist);
    }
}
