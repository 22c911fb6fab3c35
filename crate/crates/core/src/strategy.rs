//! Energy and departure policies.
//!
//! Every robot owns one [`EnergyPolicy`]. The robot state machine consults it
//! at the end of each round (to adapt thresholds and pick a charge target),
//! on every nest tick once charged (departure gating) and while searching
//! (search-time cap).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::battery::{AdaptationWeights, Battery, EnergyLevel, RoundOutcome};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrategyError {
    #[error("unknown strategy `{name}`; valid strategies: {}", Strategy::NAMES.join(" | "))]
    Unknown { name: String },
    #[error(
        "cannot compose `{0}` with a battery-targeting policy: it already sets charge targets"
    )]
    DoubleBatteryTargeting(String),
}

/// What the nest does with a robot whose round just ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeDirective {
    pub target_level: EnergyLevel,
    /// Ticks to wait in the nest on top of the regular nest delay.
    pub extra_nest_delay: u64,
    /// Stay in the nest for good.
    pub park: bool,
}

impl ChargeDirective {
    pub fn charge_to(target: f64) -> Self {
        Self {
            target_level: EnergyLevel::saturating(target),
            extra_nest_delay: 0,
            park: false,
        }
    }

    pub fn park() -> Self {
        Self {
            target_level: EnergyLevel::FULL,
            extra_nest_delay: 0,
            park: true,
        }
    }
}

/// Per-robot policy. Implementations must be deterministic given their inputs
/// and the random stream handed to [`may_depart`](Self::may_depart).
pub trait EnergyPolicy: fmt::Debug + Send {
    fn name(&self) -> &'static str;

    /// Called once per round after the nest delay has expired. May adapt the
    /// battery thresholds in place.
    fn on_round_end(&mut self, battery: &mut Battery, outcome: &RoundOutcome) -> ChargeDirective;

    /// Consulted every tick while the robot sits charged in the nest.
    fn may_depart(&mut self, _rng: &mut dyn RngCore) -> bool {
        true
    }

    /// Maximum number of searching ticks per round, if the policy caps it.
    fn search_budget(&self) -> Option<u64> {
        None
    }

    /// Whether this policy chooses charge targets itself.
    fn targets_battery(&self) -> bool {
        false
    }

    fn eee(&self) -> Option<&EeeState> {
        None
    }

    /// Whether a robot running this policy counts toward the endgame stop
    /// rule, given where it is.
    fn endgame_reached(&self, _in_nest: bool, _parked: bool) -> bool {
        false
    }
}

/// Always charge to full. Never adapts, never parks.
#[derive(Debug, Clone, Default)]
pub struct NaivePolicy;

impl EnergyPolicy for NaivePolicy {
    fn name(&self) -> &'static str {
        "naive"
    }

    fn on_round_end(&mut self, _battery: &mut Battery, _outcome: &RoundOutcome) -> ChargeDirective {
        ChargeDirective::charge_to(1.0)
    }
}

/// How a robot behaves once its thresholds span the full battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EeeVariant {
    /// Freeze the thresholds and grow the nest delay every round.
    Well,
    /// Grow the nest delay and keep adapting the lower threshold.
    Ill,
    /// Park in the nest at full charge.
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EeeState {
    /// Latches once set.
    pub triggered: bool,
    pub rounds_since_trigger: u32,
    pub current_extra_delay: u64,
}

/// Adaptive battery allocation with one of the endgame variants.
#[derive(Debug, Clone)]
pub struct AdaptivePolicy {
    pub variant: EeeVariant,
    pub weights: AdaptationWeights,
    /// Nest-delay increment per endgame round.
    pub tau: u64,
    pub eee: EeeState,
}

impl AdaptivePolicy {
    pub fn new(variant: EeeVariant, weights: AdaptationWeights, tau: u64) -> Self {
        Self {
            variant,
            weights,
            tau,
            eee: EeeState::default(),
        }
    }
}

impl EnergyPolicy for AdaptivePolicy {
    fn name(&self) -> &'static str {
        match self.variant {
            EeeVariant::Well => "adaptive-well",
            EeeVariant::Ill => "adaptive-ill",
            EeeVariant::Null => "adaptive-null",
        }
    }

    fn on_round_end(&mut self, battery: &mut Battery, outcome: &RoundOutcome) -> ChargeDirective {
        if battery.is_eee() {
            self.eee.triggered = true;
        }
        if !self.eee.triggered {
            battery.adapt(outcome, &self.weights);
            return ChargeDirective::charge_to(battery.upper());
        }

        self.eee.rounds_since_trigger += 1;
        match self.variant {
            EeeVariant::Well => {
                self.eee.current_extra_delay += self.tau;
            }
            EeeVariant::Ill => {
                battery.adapt_lower(outcome, &self.weights);
                self.eee.current_extra_delay += self.tau;
            }
            EeeVariant::Null => return ChargeDirective::park(),
        }
        ChargeDirective {
            target_level: EnergyLevel::saturating(battery.upper()),
            extra_nest_delay: self.eee.current_extra_delay,
            park: false,
        }
    }

    fn targets_battery(&self) -> bool {
        true
    }

    fn eee(&self) -> Option<&EeeState> {
        Some(&self.eee)
    }

    fn endgame_reached(&self, in_nest: bool, parked: bool) -> bool {
        match self.variant {
            EeeVariant::Null => parked,
            EeeVariant::Well | EeeVariant::Ill => self.eee.triggered && in_nest,
        }
    }
}

/// Nest-departure probability that rises with successes and falls with
/// failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabellaState {
    pub p: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub delta: f64,
}

impl Default for LabellaState {
    fn default() -> Self {
        Self {
            p: 0.033,
            p_min: 0.0015,
            p_max: 0.05,
            delta: 0.005,
        }
    }
}

impl LabellaState {
    pub fn update(self, success: bool) -> Self {
        let step = if success { self.delta } else { -self.delta };
        Self {
            p: (self.p + step).clamp(self.p_min, self.p_max),
            ..self
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LabellaPolicy {
    pub state: LabellaState,
}

impl EnergyPolicy for LabellaPolicy {
    fn name(&self) -> &'static str {
        "labella"
    }

    fn on_round_end(&mut self, _battery: &mut Battery, outcome: &RoundOutcome) -> ChargeDirective {
        self.state = self.state.update(outcome.success);
        ChargeDirective::charge_to(1.0)
    }

    fn may_depart(&mut self, rng: &mut dyn RngCore) -> bool {
        rng.random::<f64>() < self.state.p
    }
}

/// Per-robot search-time budget driven by the robot's own successes and
/// failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiuState {
    pub budget: u64,
    pub step_up: u64,
    pub step_down: u64,
    pub min: u64,
    pub max: u64,
}

impl Default for LiuState {
    fn default() -> Self {
        Self {
            budget: 200,
            step_up: 20,
            step_down: 10,
            min: 50,
            max: 1000,
        }
    }
}

impl LiuState {
    pub fn update(self, success: bool) -> Self {
        let budget = if success {
            self.budget.saturating_sub(self.step_down)
        } else {
            self.budget.saturating_add(self.step_up)
        };
        Self {
            budget: budget.clamp(self.min, self.max),
            ..self
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LiuPolicy {
    pub state: LiuState,
}

impl EnergyPolicy for LiuPolicy {
    fn name(&self) -> &'static str {
        "liu"
    }

    fn on_round_end(&mut self, _battery: &mut Battery, outcome: &RoundOutcome) -> ChargeDirective {
        self.state = self.state.update(outcome.success);
        ChargeDirective::charge_to(1.0)
    }

    fn search_budget(&self) -> Option<u64> {
        Some(self.state.budget)
    }
}

/// A departure/search-time base policy combined with adaptive battery
/// targeting.
#[derive(Debug)]
pub struct ComposedPolicy {
    base: Box<dyn EnergyPolicy>,
    battery: AdaptivePolicy,
    name: &'static str,
}

pub fn compose(
    base: Box<dyn EnergyPolicy>,
    battery: AdaptivePolicy,
) -> Result<ComposedPolicy, StrategyError> {
    if base.targets_battery() {
        return Err(StrategyError::DoubleBatteryTargeting(
            base.name().to_string(),
        ));
    }
    let name = match (base.name(), battery.variant) {
        ("labella", EeeVariant::Null) => "labella+null",
        ("liu", EeeVariant::Null) => "liu+null",
        _ => "composed",
    };
    Ok(ComposedPolicy {
        base,
        battery,
        name,
    })
}

impl EnergyPolicy for ComposedPolicy {
    fn name(&self) -> &'static str {
        self.name
    }

    fn on_round_end(&mut self, battery: &mut Battery, outcome: &RoundOutcome) -> ChargeDirective {
        // the base only updates its own state; its charge target is discarded
        let _ = self.base.on_round_end(battery, outcome);
        self.battery.on_round_end(battery, outcome)
    }

    fn may_depart(&mut self, rng: &mut dyn RngCore) -> bool {
        self.base.may_depart(rng)
    }

    fn search_budget(&self) -> Option<u64> {
        self.base.search_budget()
    }

    fn targets_battery(&self) -> bool {
        true
    }

    fn eee(&self) -> Option<&EeeState> {
        self.battery.eee()
    }

    fn endgame_reached(&self, in_nest: bool, parked: bool) -> bool {
        self.battery.endgame_reached(in_nest, parked)
    }
}

/// Tunables shared by every strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams {
    pub weights: AdaptationWeights,
    pub tau: u64,
    pub labella: LabellaState,
    pub liu: LiuState,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            weights: AdaptationWeights::default(),
            tau: 10,
            labella: LabellaState::default(),
            liu: LiuState::default(),
        }
    }
}

/// Named strategy selectable from configuration or the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Naive,
    AdaptiveWell,
    AdaptiveIll,
    AdaptiveNull,
    Labella,
    Liu,
    LabellaNull,
    LiuNull,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::Naive,
        Strategy::AdaptiveWell,
        Strategy::AdaptiveIll,
        Strategy::AdaptiveNull,
        Strategy::Labella,
        Strategy::Liu,
        Strategy::LabellaNull,
        Strategy::LiuNull,
    ];

    pub const NAMES: [&'static str; 8] = [
        "naive",
        "adaptive-well",
        "adaptive-ill",
        "adaptive-null",
        "labella",
        "liu",
        "labella+null",
        "liu+null",
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES[self as usize]
    }

    pub fn build(self, params: &PolicyParams) -> Box<dyn EnergyPolicy> {
        let adaptive = |variant| AdaptivePolicy::new(variant, params.weights, params.tau);
        let labella = || {
            Box::new(LabellaPolicy {
                state: params.labella,
            })
        };
        let liu = || Box::new(LiuPolicy { state: params.liu });
        match self {
            Strategy::Naive => Box::new(NaivePolicy),
            Strategy::AdaptiveWell => Box::new(adaptive(EeeVariant::Well)),
            Strategy::AdaptiveIll => Box::new(adaptive(EeeVariant::Ill)),
            Strategy::AdaptiveNull => Box::new(adaptive(EeeVariant::Null)),
            Strategy::Labella => labella(),
            Strategy::Liu => liu(),
            Strategy::LabellaNull => Box::new(
                compose(labella(), adaptive(EeeVariant::Null)).expect("labella does not target"),
            ),
            Strategy::LiuNull => {
                Box::new(compose(liu(), adaptive(EeeVariant::Null)).expect("liu does not target"))
            }
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|strategy| strategy.name() == s)
            .ok_or_else(|| StrategyError::Unknown {
                name: s.to_string(),
            })
    }
}
