//! Efficiency metrics and per-group aggregation.
//!
//! `eta` is resources per tick. `eta_prime` is resources per unit of total
//! energy footprint: everything the swarm drained over the run plus whatever
//! is still sitting in the batteries when the run ends.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::events::{EventKind, EventLog};
use crate::world::Termination;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("eta is undefined for a run of zero ticks")]
    ZeroTicks,
    #[error("eta' is undefined when the total energy footprint is zero")]
    ZeroEnergy,
    #[error("cannot aggregate an empty group")]
    EmptyGroup,
}

/// Column order of the per-run CSV.
pub const CSV_HEADER: [&str; 10] = [
    "strategy",
    "K",
    "seed",
    "r",
    "ticks",
    "sum_Ed",
    "sum_Eb",
    "eta",
    "eta_prime",
    "termination_reason",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub strategy: String,
    pub swarm_size: usize,
    pub seed: u64,
    pub resources_collected: u64,
    pub total_ticks: u64,
    /// Energy drained per robot over the whole run.
    pub depleted: Vec<f64>,
    /// Battery level per robot at termination; zero for dead robots.
    pub residual: Vec<f64>,
    pub termination: Termination,
}

impl RunRecord {
    /// Rebuilds the record from a run's event log.
    pub fn from_log(
        log: &EventLog,
        strategy: &str,
        swarm_size: usize,
        seed: u64,
        total_ticks: u64,
        termination: Termination,
    ) -> Self {
        let mut depleted = vec![0.0; swarm_size];
        let mut residual = vec![0.0; swarm_size];
        let mut resources_collected = 0;
        for e in log.events() {
            match e.kind {
                EventKind::Arrive {
                    delivered,
                    energy_spent,
                    ..
                } => {
                    depleted[e.robot] += energy_spent;
                    resources_collected += u64::from(delivered);
                }
                EventKind::Death { energy_spent } => depleted[e.robot] += energy_spent,
                EventKind::Halt {
                    level,
                    energy_spent,
                } => {
                    depleted[e.robot] += energy_spent;
                    residual[e.robot] = level;
                }
                _ => {}
            }
        }
        Self {
            strategy: strategy.to_string(),
            swarm_size,
            seed,
            resources_collected,
            total_ticks,
            depleted,
            residual,
            termination,
        }
    }

    pub fn sum_depleted(&self) -> f64 {
        self.depleted.iter().sum()
    }

    pub fn sum_residual(&self) -> f64 {
        self.residual.iter().sum()
    }

    pub fn eta(&self) -> Result<f64, MetricsError> {
        if self.total_ticks == 0 {
            return Err(MetricsError::ZeroTicks);
        }
        Ok(self.resources_collected as f64 / self.total_ticks as f64)
    }

    pub fn eta_prime(&self) -> Result<f64, MetricsError> {
        let footprint = self.sum_depleted() + self.sum_residual();
        if footprint <= 0.0 {
            return Err(MetricsError::ZeroEnergy);
        }
        Ok(self.resources_collected as f64 / footprint)
    }

    /// One CSV row in [`CSV_HEADER`] order. Undefined metrics are written
    /// as `NaN`.
    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.strategy.clone(),
            self.swarm_size.to_string(),
            self.seed.to_string(),
            self.resources_collected.to_string(),
            self.total_ticks.to_string(),
            self.sum_depleted().to_string(),
            self.sum_residual().to_string(),
            self.eta().unwrap_or(f64::NAN).to_string(),
            self.eta_prime().unwrap_or(f64::NAN).to_string(),
            self.termination.to_string(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Result<Self, MetricsError> {
        if values.is_empty() {
            return Err(MetricsError::EmptyGroup);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(Self { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub strategy: String,
    pub swarm_size: usize,
    pub count: usize,
    pub eta: Stats,
    pub eta_prime: Stats,
}

pub const SUMMARY_HEADER: [&str; 7] = [
    "strategy",
    "K",
    "n",
    "eta_mean",
    "eta_std",
    "eta_prime_mean",
    "eta_prime_std",
];

impl Summary {
    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.strategy.clone(),
            self.swarm_size.to_string(),
            self.count.to_string(),
            self.eta.mean.to_string(),
            self.eta.std.to_string(),
            self.eta_prime.mean.to_string(),
            self.eta_prime.std.to_string(),
        ]
    }
}

/// Groups records by `(strategy, K)` and summarizes each group, sorted by key.
pub fn aggregate(records: &[RunRecord]) -> Result<Vec<Summary>, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyGroup);
    }
    let mut groups: BTreeMap<(&str, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.strategy.as_str(), r.swarm_size))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((strategy, swarm_size), group)| {
            let etas = group
                .iter()
                .map(|r| r.eta())
                .collect::<Result<Vec<_>, _>>()?;
            let primes = group
                .iter()
                .map(|r| r.eta_prime())
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Summary {
                strategy: strategy.to_string(),
                swarm_size,
                count: group.len(),
                eta: Stats::of(&etas)?,
                eta_prime: Stats::of(&primes)?,
            })
        })
        .collect()
}
