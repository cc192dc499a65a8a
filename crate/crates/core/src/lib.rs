//! Deterministic environment-configuration testing harness for a rule-based
//! driving autopilot: a kinematic world, realism-constrained actions, safety
//! metrics and rewards, a DQN tester with random and greedy baselines,
//! scenario analysis and nonparametric statistics.

pub mod actions;
pub mod autopilot;
pub mod baselines;
pub mod config;
pub mod dqn;
pub mod env;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod reward;
pub mod rng;
pub mod scenario;
pub mod stats;
pub mod route;
pub mod weather;
pub mod world;

pub use actions::{
    apply, list_actions, validate, ActionKind, ActionParams, ConstraintRule, ConstraintViolation,
    EnvAction,
};
pub use autopilot::{AutopilotParams, Operation};
pub use error::{Error, Result};
pub use metrics::MetricBuffers;
pub use reward::{RewardConfig, RewardKind};
pub use route::{Route, RouteId};
pub use weather::{WeatherPreset, WeatherState, WeatherTrace};
pub use world::{Entity, LightColor, Snapshot, WorldState, DT};
