//! Episode driver: one decision applies an action and runs one action period.

use crate::actions::{self, SpawnRecord};
use crate::autopilot::AutopilotParams;
use crate::error::{Error, Result};
use crate::metrics::{self, MetricBuffers, PERIOD_S, SAMPLE_S};
use crate::reward::{self, RewardConfig, RewardKind, PUNISHMENT};
use crate::route::RouteId;
use crate::scenario::scene::{capture_scene, Scene};
use crate::weather::WeatherPreset;
use crate::world::{Entity, Motion, NpcBehavior, NpcType, VehicleColor, WorldState};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// Everything needed to rebuild an episode's initial world.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub route: RouteId,
    pub preset: WeatherPreset,
    pub seed: u64,
    pub reward_kind: RewardKind,
    pub reward: RewardConfig,
    pub autopilot: AutopilotParams,
    pub ego_start_speed: f64,
    pub ambient_npcs: usize,
    pub time_scale: f64,
    pub max_episode_s: f64,
    pub stuck_limit_s: f64,
    pub max_decisions: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            route: RouteId::R1,
            preset: WeatherPreset::RainyDay,
            seed: 0,
            reward_kind: RewardKind::Ttc,
            reward: RewardConfig::default(),
            autopilot: AutopilotParams::default(),
            ego_start_speed: 8.0,
            ambient_npcs: 2,
            time_scale: 1.0,
            max_episode_s: 600.0,
            stuck_limit_s: 30.0,
            max_decisions: 400,
        }
    }
}

impl EnvConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        EnvConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.reward.validate()?;
        let positive = [self.max_episode_s, self.stuck_limit_s, self.time_scale];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.time_scale > 1.0 {
            return Err(Error::Config("episode limits must be positive, time scale in (0, 1]".into()));
        }
        if !(self.ego_start_speed.is_finite() && self.ego_start_speed >= 0.0) {
            return Err(Error::Config("ego start speed must be non-negative".into()));
        }
        Ok(())
    }
}

/// Builds the episode's starting world, including ambient traffic ahead of the ego.
pub fn initial_world(cfg: &EnvConfig) -> Result<WorldState> {
    cfg.validate()?;
    let route = Arc::new(cfg.route.load());
    let trace = Arc::new(cfg.preset.trace().with_time_scale(cfg.time_scale)?);
    let mut world = WorldState::new(route, trace, cfg.autopilot, cfg.seed, cfg.ego_start_speed);
    let ego_s = world.ego().s;
    let lanes = world.route.lane_count;
    for i in 0..cfg.ambient_npcs {
        let lane = world.rng.below(lanes);
        let s = ego_s + 60.0 + 70.0 * i as f64 + world.rng.range(0.0, 30.0);
        let npc_type = NpcType::ALL[world.rng.below(4)];
        let color = VehicleColor::ALL[world.rng.below(VehicleColor::ALL.len())];
        let speed = world.rng.range(7.0, 10.0);
        let id = world.alloc_id();
        let d = world.route.lane_center(lane);
        let npc = Entity::npc(
            id,
            npc_type,
            NpcBehavior::CurrentLaneDriving,
            color,
            s,
            d,
            Motion::Along,
            speed,
            speed,
        );
        world.insert(npc);
    }
    Ok(world)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Collision,
    Destination,
    Stuck,
    TimeLimit,
    DecisionLimit,
}

impl Termination {
    pub const ALL: [Termination; 5] = [
        Termination::Collision,
        Termination::Destination,
        Termination::Stuck,
        Termination::TimeLimit,
        Termination::DecisionLimit,
    ];
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Termination {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Termination::ALL
            .into_iter()
            .find(|t| t.to_string() == s)
            .ok_or_else(|| Error::Scenario(format!("unknown termination `{s}`")))
    }
}

/// Mapped clock and weather at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvSample {
    pub t: f64,
    pub mapped_ts: f64,
    pub cloudiness: f64,
    pub rain: f64,
    pub fog: f64,
    pub wetness: f64,
}

impl EnvSample {
    pub fn of(world: &WorldState) -> Self {
        let w = world.weather;
        EnvSample {
            t: world.sim_time_s,
            mapped_ts: world.wall_time_ts,
            cloudiness: w.cloudiness,
            rain: w.rain,
            fog: w.fog,
            wetness: w.wetness,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub scene: Scene,
    pub env: EnvSample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionRecord {
    pub t: f64,
    pub ids: Vec<u32>,
}

/// Result of one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub action_id: usize,
    /// Decision time, before the period ran.
    pub t: f64,
    pub valid: bool,
    pub reward: f64,
    pub buffers: MetricBuffers,
    pub spawn: Option<SpawnRecord>,
    pub samples: Vec<SampleRecord>,
    pub collision: Option<CollisionRecord>,
    pub termination: Option<Termination>,
    pub world_hash: u64,
}

/// A driving episode advanced one action period per decision.
#[derive(Debug, Clone)]
pub struct DrivingEnv {
    pub cfg: EnvConfig,
    world: WorldState,
    decisions: usize,
    done: Option<Termination>,
}

impl DrivingEnv {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        let world = initial_world(&cfg)?;
        Ok(DrivingEnv {
            cfg,
            world,
            decisions: 0,
            done: None,
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn decisions(&self) -> usize {
        self.decisions
    }

    pub fn termination(&self) -> Option<Termination> {
        self.done
    }

    pub fn is_done(&self) -> bool {
        self.done.is_some()
    }

    /// Snapshot of the world plus episode counters, for rollback.
    pub fn checkpoint(&self) -> (crate::world::Snapshot, usize, Option<Termination>) {
        (self.world.snapshot(), self.decisions, self.done)
    }

    pub fn rollback(&mut self, cp: &(crate::world::Snapshot, usize, Option<Termination>)) -> Result<()> {
        self.world = WorldState::restore(&cp.0)?;
        self.decisions = cp.1;
        self.done = cp.2;
        Ok(())
    }

    pub fn valid_actions(&self) -> Vec<usize> {
        actions::valid_actions(&self.world, actions::list_actions())
    }

    /// Applies `action_id` and runs one period. A rejected action earns the
    /// punishment and leaves the world and clock unchanged.
    pub fn step(&mut self, action_id: usize) -> Result<StepOutcome> {
        if let Some(t) = self.done {
            return Err(Error::Config(format!("episode already ended ({t})")));
        }
        let action = actions::action(action_id)?;
        self.decisions += 1;
        let t = self.world.sim_time_s;
        let spawn = match actions::apply(&mut self.world, action) {
            Ok(rec) => rec,
            Err(Error::Rejected(_)) => {
                if self.decisions >= self.cfg.max_decisions {
                    self.done = Some(Termination::DecisionLimit);
                }
                return Ok(StepOutcome {
                    action_id,
                    t,
                    valid: false,
                    reward: PUNISHMENT,
                    buffers: MetricBuffers::default(),
                    spawn: None,
                    samples: Vec::new(),
                    collision: None,
                    termination: self.done,
                    world_hash: self.world.world_hash(),
                });
            }
            Err(e) => return Err(e),
        };
        let mut samples = Vec::new();
        let collection = metrics::collect_with(&mut self.world, PERIOD_S, SAMPLE_S, |w| {
            samples.push(SampleRecord {
                scene: capture_scene(w),
                env: EnvSample::of(w),
            });
        });
        let reward = reward::period_reward(self.cfg.reward_kind, &collection.buffers, &self.cfg.reward);
        let collision = (!collection.collisions.is_empty()).then(|| {
            let mut ids: Vec<u32> = collection
                .collisions
                .iter()
                .flat_map(|((a, b), _)| [*a, *b])
                .collect();
            ids.sort_unstable();
            ids.dedup();
            CollisionRecord {
                t: self.world.sim_time_s,
                ids,
            }
        });
        self.done = self.check_termination(collision.is_some());
        Ok(StepOutcome {
            action_id,
            t,
            valid: true,
            reward,
            buffers: collection.buffers,
            spawn,
            samples,
            collision,
            termination: self.done,
            world_hash: self.world.world_hash(),
        })
    }

    fn check_termination(&self, collided: bool) -> Option<Termination> {
        let ego = self.world.ego();
        if collided {
            Some(Termination::Collision)
        } else if ego.s >= self.world.route.length() - 5.0 {
            Some(Termination::Destination)
        } else if self.world.stuck_time_s >= self.cfg.stuck_limit_s {
            Some(Termination::Stuck)
        } else if self.world.sim_time_s >= self.cfg.max_episode_s {
            Some(Termination::TimeLimit)
        } else if self.decisions >= self.cfg.max_decisions {
            Some(Termination::DecisionLimit)
        } else {
            None
        }
    }
}
