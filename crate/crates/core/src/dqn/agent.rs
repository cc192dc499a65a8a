//! Epsilon-greedy deep Q-learning with replay and a target network.

use super::memory::{ReplayMemory, Transition};
use super::network::{Mlp, QNetwork};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::world::fnv1a64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    /// Observed states over which epsilon falls linearly from start to end.
    pub anneal_states: usize,
    pub eval: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            start: 1.0,
            end: 0.2,
            anneal_states: 10_000,
            eval: 0.05,
        }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, observed: usize) -> f64 {
        if observed >= self.anneal_states {
            self.end
        } else {
            self.start + (self.end - self.start) * observed as f64 / self.anneal_states as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub gamma: f64,
    pub batch: usize,
    /// Training updates between target network copies.
    pub sync_every: usize,
    pub total_states: usize,
    pub learning_rate: f64,
    pub memory_capacity: usize,
    pub hidden: Vec<usize>,
    pub epsilon: EpsilonSchedule,
    /// Optional cap on episodes, reached before `total_states` if smaller.
    pub max_episodes: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.9,
            batch: 64,
            sync_every: 200,
            total_states: 4000,
            learning_rate: 1e-3,
            memory_capacity: 1000,
            hidden: vec![64, 64],
            epsilon: EpsilonSchedule::default(),
            max_episodes: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let e = &self.epsilon;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if self.batch == 0 || self.batch > self.memory_capacity {
            return bad("minibatch must be positive and at most the memory capacity");
        }
        if self.sync_every == 0 {
            return bad("target sync interval must be positive");
        }
        if !(0.0 <= e.end && e.end <= e.start && e.start <= 1.0) || !(0.0..=1.0).contains(&e.eval) {
            return bad("epsilon schedule must satisfy 0 <= end <= start <= 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        Ok(())
    }
}

/// Greedy with probability 1 − eps (lowest id wins ties), uniform otherwise.
pub fn select_action(q: &[f64], eps: f64, rng: &mut SimRng) -> usize {
    if rng.uniform() < eps {
        rng.below(q.len())
    } else {
        argmax(q)
    }
}

pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate() {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// r + γ·max Q̂(s′), without the bootstrap term for terminal transitions.
pub fn td_targets(batch: &[&Transition], target: &Mlp, gamma: f64) -> Vec<f64> {
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                t.r
            } else {
                let next = target.forward(&t.s_next);
                t.r + gamma * next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        })
        .collect()
}

/// Copies the online parameters into the target every `every` updates.
pub fn sync_target(net: &Mlp, target: &mut Mlp, update: usize, every: usize) {
    if update.is_multiple_of(every) {
        target.clone_from(net);
    }
}

/// An episodic task the agent can learn on.
pub trait Environment {
    fn action_count(&self) -> usize;
    fn state_len(&self) -> usize;
    /// Starts episode `episode` and returns its first state.
    fn reset(&mut self, episode: usize) -> Result<Vec<f64>>;
    fn step(&mut self, action: usize) -> Result<EnvStep>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub reward: f64,
    pub state: Vec<f64>,
    pub valid: bool,
    /// The episode is over.
    pub done: bool,
    /// The episode ended in an absorbing state, so nothing is bootstrapped.
    pub terminal: bool,
    pub end: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub steps: Vec<(usize, bool, f64)>,
    pub end: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub header: Vec<(String, String)>,
    pub episodes: Vec<EpisodeRecord>,
    pub losses: Vec<f64>,
}

impl TrainingLog {
    pub fn observed(&self) -> usize {
        self.episodes.iter().map(|e| e.steps.len()).sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            writeln!(out, "# {k}={v}").unwrap();
        }
        for e in &self.episodes {
            let steps: Vec<String> = e
                .steps
                .iter()
                .map(|(a, ok, r)| format!("{a}:{}:{r:?}", u8::from(*ok)))
                .collect();
            writeln!(out, "episode|{}|{}|{}", e.episode, e.end, steps.join(",")).unwrap();
        }
        out
    }

    pub fn hash(&self) -> u64 {
        fnv1a64(self.to_text().as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub cfg: TrainConfig,
    pub net: QNetwork,
    pub target: Mlp,
    pub memory: ReplayMemory,
    pub rng: SimRng,
    pub observed: usize,
    pub updates: usize,
}

impl Agent {
    pub fn new(cfg: TrainConfig, inputs: usize, actions: usize) -> Result<Self> {
        cfg.validate()?;
        let mut rng = SimRng::seed_from(cfg.seed);
        let mut sizes = vec![inputs];
        sizes.extend(&cfg.hidden);
        sizes.push(actions);
        let net = QNetwork::new(&sizes, cfg.learning_rate, &mut rng);
        Ok(Agent {
            target: net.mlp.clone(),
            memory: ReplayMemory::new(cfg.memory_capacity),
            net,
            rng,
            observed: 0,
            updates: 0,
            cfg,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.cfg.epsilon.at(self.observed)
    }

    pub fn act(&mut self, s: &[f64]) -> usize {
        let eps = self.epsilon();
        select_action(&self.net.q_values(s), eps, &mut self.rng)
    }

    /// Stores a transition and, once the memory is full, trains on a minibatch.
    pub fn observe(&mut self, t: Transition) -> Result<Option<f64>> {
        self.memory.push(t);
        self.observed += 1;
        if !self.memory.is_full() {
            return Ok(None);
        }
        let batch = self.memory.sample(self.cfg.batch, &mut self.rng);
        let targets = td_targets(&batch, &self.target, self.cfg.gamma);
        let triples: Vec<(&[f64], usize, f64)> = batch
            .iter()
            .zip(&targets)
            .map(|(t, &y)| (t.s.as_slice(), t.a, y))
            .collect();
        let loss = self.net.train_step(&triples)?;
        self.updates += 1;
        sync_target(&self.net.mlp, &mut self.target, self.updates, self.cfg.sync_every);
        Ok(Some(loss))
    }
}

/// Trains until the configured number of states has been observed. The log
/// receives each episode as it finishes, so it survives an error.
pub fn run_training<E: Environment>(env: &mut E, cfg: &TrainConfig, log: &mut TrainingLog) -> Result<Agent> {
    let mut agent = Agent::new(cfg.clone(), env.state_len(), env.action_count())?;
    log.header.extend([
        ("gamma".to_string(), cfg.gamma.to_string()),
        ("batch".to_string(), cfg.batch.to_string()),
        ("sync_every".to_string(), cfg.sync_every.to_string()),
        ("total_states".to_string(), cfg.total_states.to_string()),
        ("learning_rate".to_string(), cfg.learning_rate.to_string()),
        ("memory_capacity".to_string(), cfg.memory_capacity.to_string()),
        ("seed".to_string(), cfg.seed.to_string()),
    ]);
    let mut episode = 0;
    while agent.observed < cfg.total_states && cfg.max_episodes.is_none_or(|m| episode < m) {
        let mut s = env.reset(episode)?;
        let mut record = EpisodeRecord {
            episode,
            steps: Vec::new(),
            end: "budget".to_string(),
        };
        while agent.observed < cfg.total_states {
            let a = agent.act(&s);
            let out = env.step(a)?;
            record.steps.push((a, out.valid, out.reward));
            let loss = agent.observe(Transition {
                s: std::mem::take(&mut s),
                a,
                r: out.reward,
                s_next: out.state.clone(),
                terminal: out.terminal,
            })?;
            log.losses.extend(loss);
            s = out.state;
            if out.done {
                record.end = out.end.unwrap_or_else(|| "done".to_string());
                break;
            }
        }
        log.episodes.push(record);
        episode += 1;
    }
    Ok(agent)
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"SFQN";
pub const CHECKPOINT_VERSION: u32 = 1;

impl Agent {
    /// Versioned binary image: shapes, parameters, optimizer and RNG state.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = CHECKPOINT_MAGIC.to_vec();
        out.extend(CHECKPOINT_VERSION.to_le_bytes());
        out.extend(bincode::serialize(self).expect("agent serializes"));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "version {version}, expected {CHECKPOINT_VERSION}"
            )));
        }
        bincode::deserialize(&bytes[8..]).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
