//! Sweep configuration, seed derivation and orchestration.
//!
//! Configuration files are flat `key = value` text, one pair per line, with
//! `#` starting a comment. Unknown keys are rejected. See the README for the
//! full key list.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::events::EventLog;
use crate::metrics::{self, MetricsError, RunRecord, Summary, CSV_HEADER, SUMMARY_HEADER};
use crate::strategy::{Strategy, StrategyError};
use crate::world::{SimConfig, World, WorldError};

pub const DESK_SIZES: [usize; 6] = [2, 4, 8, 16, 32, 64];
pub const FULL_SIZES: [usize; 8] = [2, 4, 8, 16, 32, 64, 128, 256];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("`{key}`: cannot parse `{value}`")]
    Value { key: String, value: String },
    #[error("`{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation fault: {0}")]
    World(#[from] WorldError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub strategies: Vec<Strategy>,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    pub sim: SimConfig,
    pub out: PathBuf,
    /// Worker threads; zero uses every available core.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            strategies: Strategy::ALL.to_vec(),
            sizes: DESK_SIZES.to_vec(),
            replicates: 20,
            master_seed: 42,
            sim: SimConfig::default(),
            out: PathBuf::from("results.csv"),
            workers: 0,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Value {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

impl ExperimentConfig {
    /// Loads a config file. The literal path `default` yields the built-in
    /// defaults.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        if path.as_os_str() == "default" {
            return Ok(Self::default());
        }
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses config text on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: n + 1,
                text: raw.to_string(),
            })?;
            config.set(n + 1, key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let sim = &mut self.sim;
        let arena = &mut sim.arena;
        let w = &mut sim.policy.weights;
        let labella = &mut sim.policy.labella;
        let liu = &mut sim.policy.liu;
        match key {
            "strategies" => {
                self.strategies = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_, _>>()?
            }
            "sizes" => self.sizes = parse_list(key, value)?,
            "full_sweep" => {
                if parse_value::<bool>(key, value)? {
                    self.sizes = FULL_SIZES.to_vec();
                }
            }
            "replicates" => self.replicates = parse_value(key, value)?,
            "seed" => self.master_seed = parse_value(key, value)?,
            "workers" => self.workers = parse_value(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "arena.width" => arena.width = parse_value(key, value)?,
            "arena.height" => arena.height = parse_value(key, value)?,
            "arena.nest_width" => arena.nest_width = parse_value(key, value)?,
            "arena.nest_height" => arena.nest_height = parse_value(key, value)?,
            "arena.speed" => arena.robot_speed = parse_value(key, value)?,
            "arena.sensing_radius" => arena.sensing_radius = parse_value(key, value)?,
            "arena.collision_radius" => arena.collision_radius = parse_value(key, value)?,
            "arena.turn_max" => arena.turn_max = parse_value(key, value)?,
            "arena.tick_limit" => arena.tick_limit = parse_value(key, value)?,
            "arena.live_resources" => arena.live_resources = parse_value(key, value)?,
            "arena.respawn_until" => arena.respawn_until = parse_value(key, value)?,
            "rates.alpha_s" => sim.rates.searching = parse_value(key, value)?,
            "rates.alpha_r" => sim.rates.retreating = parse_value(key, value)?,
            "rates.p" => sim.rates.collection = parse_value(key, value)?,
            "battery.init_lower" => sim.initial_lower = parse_value(key, value)?,
            "battery.init_capacity" => sim.initial_capacity = parse_value(key, value)?,
            "weights.w1" => w.lower_leftover = parse_value(key, value)?,
            "weights.w2" => w.lower_failure = parse_value(key, value)?,
            "weights.w3" => w.lower_encounter = parse_value(key, value)?,
            "weights.w1c" => w.capacity_leftover = parse_value(key, value)?,
            "weights.w2c" => w.capacity_failure = parse_value(key, value)?,
            "weights.w3c" => w.capacity_encounter = parse_value(key, value)?,
            "eee.tau" => sim.policy.tau = parse_value(key, value)?,
            "labella.p_init" => labella.p = parse_value(key, value)?,
            "labella.p_min" => labella.p_min = parse_value(key, value)?,
            "labella.p_max" => labella.p_max = parse_value(key, value)?,
            "labella.delta" => labella.delta = parse_value(key, value)?,
            "liu.t_init" => liu.budget = parse_value(key, value)?,
            "liu.step_up" => liu.step_up = parse_value(key, value)?,
            "liu.step_down" => liu.step_down = parse_value(key, value)?,
            "liu.t_min" => liu.min = parse_value(key, value)?,
            "liu.t_max" => liu.max = parse_value(key, value)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.strategies.is_empty() {
            return Err(ConfigError::Invalid {
                field: "strategies",
                reason: "at least one strategy is required".into(),
            });
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(ConfigError::Invalid {
                field: "sizes",
                reason: "must be a non-empty list of positive swarm sizes".into(),
            });
        }
        if self.replicates == 0 {
            return Err(ConfigError::Invalid {
                field: "replicates",
                reason: "must be >= 1".into(),
            });
        }
        self.sim.validate()?;
        Ok(())
    }
}

/// Seed of one replicate, keyed by strategy name rather than list position.
pub fn derive_seed(master: u64, strategy: Strategy, swarm_size: usize, replicate: usize) -> u64 {
    let digest = Sha256::new()
        .chain_update(master.to_le_bytes())
        .chain_update(strategy.name().as_bytes())
        .chain_update([0u8])
        .chain_update((swarm_size as u64).to_le_bytes())
        .chain_update((replicate as u64).to_le_bytes())
        .finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Runs a single world to termination.
pub fn run_single(
    sim: &SimConfig,
    strategy: Strategy,
    swarm_size: usize,
    seed: u64,
) -> Result<(RunRecord, EventLog), ExperimentError> {
    let mut world = World::new(sim, strategy, swarm_size, seed)?;
    let termination = world.run()?;
    let ticks = world.tick;
    let log = world.into_log();
    let record = RunRecord::from_log(&log, strategy.name(), swarm_size, seed, ticks, termination);
    Ok((record, log))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<Summary>,
}

/// Every `(strategy, K, replicate)` run of the sweep, in config order.
pub fn sweep_records(config: &ExperimentConfig) -> Result<Vec<RunRecord>, ExperimentError> {
    config.validate()?;
    let jobs: Vec<(Strategy, usize, usize)> = config
        .strategies
        .iter()
        .flat_map(|&s| {
            config
                .sizes
                .iter()
                .flat_map(move |&k| (0..config.replicates).map(move |rep| (s, k, rep)))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()?;
    pool.install(|| {
        jobs.par_iter()
            .map(|&(strategy, k, rep)| {
                let seed = derive_seed(config.master_seed, strategy, k, rep);
                run_single(&config.sim, strategy, k, seed).map(|(record, _)| record)
            })
            .collect()
    })
}

/// Runs the sweep and writes the per-run CSV plus the summary CSV next to it.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    let records = sweep_records(config)?;
    let summaries = metrics::aggregate(&records)?;
    write_records(&config.out, &records)?;
    write_summaries(&summary_path(&config.out), &summaries)?;
    Ok(SweepResult { records, summaries })
}

/// `results.csv` -> `results_summary.csv`.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    out.with_file_name(format!("{stem}_summary.csv"))
}

fn create(path: &Path) -> Result<fs::File, ExperimentError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::File::create(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    w.flush().map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_summaries(path: &Path, summaries: &[Summary]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(SUMMARY_HEADER)?;
    for s in summaries {
        w.write_record(s.csv_row())?;
    }
    w.flush().map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}
