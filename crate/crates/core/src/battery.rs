//! Battery state and the round-end threshold adaptation rules.
//!
//! Energy is normalized: `1.0` is the full physical capacity of a robot's
//! battery. A battery carries a lower threshold (the retreat reserve), a
//! foraging capacity and the derived upper threshold, which is the level the
//! robot is charged to before it leaves the nest.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BatteryError {
    #[error("energy level {0} is outside [0, 1]")]
    LevelOutOfRange(f64),
    #[error("capacity {0} must be finite and non-negative")]
    InvalidCapacity(f64),
    #[error("{name} = {value} must be finite and {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
}

/// A normalized energy amount in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct EnergyLevel(f64);

impl EnergyLevel {
    pub const EMPTY: EnergyLevel = EnergyLevel(0.0);
    pub const FULL: EnergyLevel = EnergyLevel(1.0);

    pub fn new(value: f64) -> Result<Self, BatteryError> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(BatteryError::LevelOutOfRange(value))
        }
    }

    /// Clamps `value` into `[0, 1]`. NaN maps to zero.
    pub fn saturating(value: f64) -> Self {
        if value.is_nan() {
            Self(0.0)
        } else {
            Self(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for EnergyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Constant drain rates and the one-off collection cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRates {
    /// Energy per tick while searching.
    pub searching: f64,
    /// Energy per tick while retreating to the nest.
    pub retreating: f64,
    /// Energy paid once when a resource is picked up.
    pub collection: f64,
}

impl Default for EnergyRates {
    fn default() -> Self {
        Self {
            searching: 0.001,
            retreating: 0.001,
            collection: 0.01,
        }
    }
}

impl EnergyRates {
    pub fn validate(&self) -> Result<(), BatteryError> {
        positive("alpha_s", self.searching)?;
        positive("alpha_r", self.retreating)?;
        non_negative("p", self.collection)
    }
}

/// Weights of the lower-threshold (`lower_*`) and capacity (`capacity_*`)
/// adaptation rules. Index 1 scales leftover budget, 2 a failed round and 3
/// the number of robot encounters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptationWeights {
    pub lower_leftover: f64,
    pub lower_failure: f64,
    pub lower_encounter: f64,
    pub capacity_leftover: f64,
    pub capacity_failure: f64,
    pub capacity_encounter: f64,
}

impl Default for AdaptationWeights {
    fn default() -> Self {
        Self {
            lower_leftover: 0.3,
            lower_failure: 0.1,
            lower_encounter: 0.005,
            capacity_leftover: 0.2,
            capacity_failure: 0.1,
            capacity_encounter: 0.005,
        }
    }
}

impl AdaptationWeights {
    pub const ZERO: AdaptationWeights = AdaptationWeights {
        lower_leftover: 0.0,
        lower_failure: 0.0,
        lower_encounter: 0.0,
        capacity_leftover: 0.0,
        capacity_failure: 0.0,
        capacity_encounter: 0.0,
    };

    pub fn validate(&self) -> Result<(), BatteryError> {
        non_negative("w1", self.lower_leftover)?;
        non_negative("w2", self.lower_failure)?;
        non_negative("w3", self.lower_encounter)?;
        non_negative("w1c", self.capacity_leftover)?;
        non_negative("w2c", self.capacity_failure)?;
        non_negative("w3c", self.capacity_encounter)
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), BatteryError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(BatteryError::InvalidParameter {
            name,
            value,
            requirement: "> 0",
        })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<(), BatteryError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(BatteryError::InvalidParameter {
            name,
            value,
            requirement: ">= 0",
        })
    }
}

/// Accounting for one foraging round, from departure to nest arrival.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RoundOutcome {
    pub success: bool,
    /// Robot-robot encounters during the round.
    pub encounters: u32,
    /// Magnitude of the energy drained over the round.
    pub energy_spent: f64,
    pub t_search: u64,
    pub t_retreat: u64,
}

/// Signed energy change of a round: `-(alpha_s * t_s + p * f + alpha_r * t_r)`.
pub fn round_energy_delta(rates: &EnergyRates, outcome: &RoundOutcome) -> f64 {
    let collecting = if outcome.success {
        rates.collection
    } else {
        0.0
    };
    -(rates.searching * outcome.t_search as f64
        + collecting
        + rates.retreating * outcome.t_retreat as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Battery {
    level: EnergyLevel,
    lower: EnergyLevel,
    capacity: f64,
    upper: EnergyLevel,
}

impl Default for Battery {
    /// Initial thresholds used in the reference experiments, charged to the
    /// upper threshold.
    fn default() -> Self {
        Self::charged(0.3, 0.5).expect("default thresholds are valid")
    }
}

impl Battery {
    /// Builds a battery from its thresholds, charged to the derived upper
    /// threshold.
    pub fn charged(lower: f64, capacity: f64) -> Result<Self, BatteryError> {
        let lower = EnergyLevel::new(lower)?;
        if !capacity.is_finite() || capacity < 0.0 {
            return Err(BatteryError::InvalidCapacity(capacity));
        }
        let battery = Self {
            level: EnergyLevel::EMPTY,
            lower,
            capacity,
            upper: EnergyLevel::EMPTY,
        }
        .reallocate_thresholds();
        Ok(battery.with_level(battery.upper))
    }

    pub fn level(&self) -> f64 {
        self.level.value()
    }

    pub fn lower(&self) -> f64 {
        self.lower.value()
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn upper(&self) -> f64 {
        self.upper.value()
    }

    pub fn with_level(mut self, level: EnergyLevel) -> Self {
        self.level = level;
        self
    }

    pub fn with_lower(mut self, lower: f64) -> Self {
        self.lower = EnergyLevel::saturating(lower);
        self
    }

    pub fn with_capacity(mut self, capacity: f64) -> Self {
        self.capacity = capacity.max(0.0);
        self
    }

    /// Removes up to `amount` of energy and returns what was actually drained.
    pub fn drain(&mut self, amount: f64) -> f64 {
        let drained = amount.clamp(0.0, self.level.value());
        self.level = EnergyLevel::saturating(self.level.value() - drained);
        drained
    }

    /// New capacity after a round.
    ///
    /// A successful round with leftover budget shrinks the capacity, a failed
    /// round grows it, and every encounter grows it a little. The result is
    /// floored at zero; the upper bound is applied by
    /// [`reallocate_thresholds`](Self::reallocate_thresholds).
    pub fn update_capacity(&self, outcome: &RoundOutcome, w: &AdaptationWeights) -> f64 {
        let leftover = (self.capacity - outcome.energy_spent).max(0.0);
        let mut delta = outcome.encounters as f64 * w.capacity_encounter;
        if outcome.success {
            delta -= leftover * w.capacity_leftover;
        } else {
            delta += w.capacity_failure;
        }
        (self.capacity + delta).max(0.0)
    }

    /// New lower threshold after a round, clamped to `[0, 1]`.
    ///
    /// Unlike the capacity rule, the leftover term applies whether or not
    /// the round succeeded.
    pub fn update_lower_threshold(&self, outcome: &RoundOutcome, w: &AdaptationWeights) -> f64 {
        let leftover = (self.capacity - outcome.energy_spent).max(0.0);
        let mut delta = outcome.encounters as f64 * w.lower_encounter - leftover * w.lower_leftover;
        if !outcome.success {
            delta += w.lower_failure;
        }
        (self.lower.value() + delta).clamp(0.0, 1.0)
    }

    /// Recomputes `upper = min(1, lower + capacity)` and restores
    /// `lower <= upper`.
    pub fn reallocate_thresholds(mut self) -> Self {
        self.capacity = self.capacity.max(0.0);
        let upper = EnergyLevel::saturating(self.lower.value() + self.capacity);
        if self.lower > upper {
            self.lower = upper;
        }
        self.upper = upper;
        self
    }

    /// Runs both adaptation rules against the pre-round thresholds, then
    /// reallocates.
    pub fn adapt(&mut self, outcome: &RoundOutcome, w: &AdaptationWeights) {
        let lower = self.update_lower_threshold(outcome, w);
        let capacity = self.update_capacity(outcome, w);
        *self = self
            .with_lower(lower)
            .with_capacity(capacity)
            .reallocate_thresholds();
    }

    /// Adapts only the lower threshold, keeping the capacity.
    pub fn adapt_lower(&mut self, outcome: &RoundOutcome, w: &AdaptationWeights) {
        let lower = self.update_lower_threshold(outcome, w);
        *self = self.with_lower(lower).reallocate_thresholds();
    }

    /// True once the thresholds cover the whole battery.
    pub fn is_eee(&self) -> bool {
        self.lower.value() + self.capacity >= 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    fn outcome(success: bool, spent: f64, encounters: u32) -> RoundOutcome {
        RoundOutcome {
            success,
            encounters,
            energy_spent: spent,
            ..Default::default()
        }
    }

    /// Independent route: drain tick by tick and sum.
    fn per_tick_sum(rates: &EnergyRates, o: &RoundOutcome) -> f64 {
        let mut energy = 0.0;
        for _ in 0..o.t_search {
            energy -= rates.searching;
        }
        if o.success {
            energy -= rates.collection;
        }
        for _ in 0..o.t_retreat {
            energy -= rates.retreating;
        }
        energy
    }

    #[test]
    fn round_delta_examples() {
        let rates = EnergyRates {
            searching: 0.01,
            retreating: 0.01,
            collection: 0.05,
        };
        let o = RoundOutcome {
            success: true,
            t_search: 20,
            t_retreat: 10,
            ..Default::default()
        };
        assert!((per_tick_sum(&rates, &o) - -0.35).abs() < TOL);
        assert!((round_energy_delta(&rates, &o) - -0.35).abs() < TOL);

        assert_eq!(round_energy_delta(&rates, &RoundOutcome::default()), 0.0);

        let rates = EnergyRates {
            searching: 0.01,
            retreating: 0.02,
            collection: 0.0,
        };
        let o = RoundOutcome {
            t_search: 10,
            t_retreat: 5,
            ..Default::default()
        };
        assert!((per_tick_sum(&rates, &o) - -0.20).abs() < TOL);
        assert!((round_energy_delta(&rates, &o) - -0.20).abs() < TOL);
    }

    #[test]
    fn capacity_examples() {
        let w = AdaptationWeights::default();
        let b = Battery::charged(0.3, 0.5).unwrap();
        assert!((b.update_capacity(&outcome(true, 0.3, 0), &w) - 0.46).abs() < TOL);
        assert!((b.update_capacity(&outcome(true, 0.5, 0), &w) - 0.5).abs() < TOL);
        assert!((b.update_capacity(&outcome(false, 0.5, 4), &w) - 0.62).abs() < TOL);
    }

    #[test]
    fn lower_threshold_examples() {
        let w = AdaptationWeights::default();
        let b = Battery::charged(0.3, 0.5).unwrap();
        assert!((b.update_lower_threshold(&outcome(false, 0.5, 2), &w) - 0.41).abs() < TOL);
        assert!((b.update_lower_threshold(&outcome(true, 0.2, 0), &w) - 0.21).abs() < TOL);
        assert!((b.update_lower_threshold(&outcome(true, 0.5, 0), &w) - 0.3).abs() < TOL);
    }

    #[test]
    fn lower_leftover_term_is_not_gated_by_success() {
        let w = AdaptationWeights::default();
        let b = Battery::charged(0.3, 0.5).unwrap();
        // failure with leftover: +0.1 - 0.3 * 0.3
        assert!((b.update_lower_threshold(&outcome(false, 0.2, 0), &w) - 0.31).abs() < TOL);
        // the capacity rule ignores leftover on failure
        assert!((b.update_capacity(&outcome(false, 0.2, 0), &w) - 0.6).abs() < TOL);
    }

    #[test]
    fn reallocate_examples() {
        let b = Battery::charged(0.3, 0.5).unwrap();
        assert!((b.upper() - 0.8).abs() < TOL);
        assert!((b.level() - 0.8).abs() < TOL);

        let b = b
            .with_lower(0.41)
            .with_capacity(0.62)
            .reallocate_thresholds();
        assert_eq!(b.upper(), 1.0);

        let b = Battery::charged(0.0, 0.0).unwrap();
        assert_eq!(b.upper(), 0.0);
    }

    #[test]
    fn eee_examples() {
        let b = Battery::charged(0.3, 0.5).unwrap();
        assert!(!b.is_eee());
        assert!(b.with_lower(0.41).with_capacity(0.62).is_eee());
        assert!(Battery::charged(0.0, 1.0).unwrap().is_eee());
    }

    #[test]
    fn zero_weights_are_identity() {
        let mut b = Battery::charged(0.25, 0.4).unwrap();
        let before = b;
        b.adapt(&outcome(false, 0.1, 9), &AdaptationWeights::ZERO);
        assert_eq!(b.lower(), before.lower());
        assert_eq!(b.capacity(), before.capacity());
        assert_eq!(b.upper(), before.upper());
    }

    #[test]
    fn drain_never_goes_negative() {
        let mut b = Battery::charged(0.0, 0.05).unwrap();
        assert!((b.drain(0.2) - 0.05).abs() < TOL);
        assert_eq!(b.level(), 0.0);
        assert_eq!(b.drain(0.1), 0.0);
    }

    #[test]
    fn rejects_invalid_construction() {
        assert!(Battery::charged(1.2, 0.1).is_err());
        assert!(Battery::charged(0.2, -0.1).is_err());
        assert!(EnergyLevel::new(f64::NAN).is_err());
        assert!(EnergyRates {
            searching: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        let w = AdaptationWeights {
            capacity_encounter: -1.0,
            ..Default::default()
        };
        assert!(w.validate().is_err());
    }
}
