//! Layered run settings: an optional flat config file, then command-line flags.

use scenforge_core::config::{env_keys, Settings};
use scenforge_core::dqn::TrainConfig;
use scenforge_core::Result;
use std::path::Path;

/// Keys understood beyond the environment's own.
pub const RUN_KEYS: [&str; 10] = [
    "runs",
    "epsilon",
    "strategy",
    "states",
    "memory",
    "episodes",
    "batch",
    "gamma",
    "sync_every",
    "learning_rate",
];

pub const DEFAULT_RUNS: usize = 20;

pub fn known_keys() -> Vec<&'static str> {
    let mut keys = env_keys();
    keys.extend(RUN_KEYS);
    keys
}

/// Reads a config file, or starts empty without one.
pub fn load(path: Option<&Path>) -> Result<Settings> {
    let s = match path {
        Some(p) => Settings::parse(&std::fs::read_to_string(p)?)?,
        None => Settings::new(),
    };
    s.check_known(&known_keys())?;
    Ok(s)
}

/// DQN hyperparameters: defaults overridden by any keys present.
pub fn train_config(s: &Settings) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        gamma: s.get_or("gamma", d.gamma)?,
        batch: s.get_or("batch", d.batch)?,
        sync_every: s.get_or("sync_every", d.sync_every)?,
        total_states: s.get_or("states", d.total_states)?,
        learning_rate: s.get_or("learning_rate", d.learning_rate)?,
        memory_capacity: s.get_or("memory", d.memory_capacity)?,
        max_episodes: s.get("episodes")?,
        seed: s.get_or("seed", d.seed)?,
        ..d
    };
    cfg.validate()?;
    Ok(cfg)
}
