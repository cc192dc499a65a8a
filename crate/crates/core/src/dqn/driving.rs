//! The driving environment as a learning task, and policy evaluation runs.

use super::agent::{select_action, EnvStep, Environment};
use super::network::Mlp;
use super::state::{encode_state, STATE_LEN};
use crate::actions::list_actions;
use crate::env::{DrivingEnv, EnvConfig, Termination};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::scenario::log::{ExecutionLog, Strategy};
use crate::world::fnv1a64;

/// Stream reserved for a strategy's own choices, apart from the world's randomness.
pub const POLICY_STREAM: u64 = 0x5eed;

/// World seed of training episode `episode`; disjoint in practice from small evaluation seeds.
pub fn training_seed(base: u64, episode: usize) -> u64 {
    let mut bytes = base.to_le_bytes().to_vec();
    bytes.extend((episode as u64).to_le_bytes());
    fnv1a64(&bytes)
}

pub fn is_absorbing(t: Termination) -> bool {
    matches!(
        t,
        Termination::Collision | Termination::Destination | Termination::Stuck
    )
}

#[derive(Debug, Clone)]
pub struct DrivingTask {
    pub base: EnvConfig,
    env: Option<DrivingEnv>,
}

impl DrivingTask {
    pub fn new(base: EnvConfig) -> Result<Self> {
        base.validate()?;
        Ok(DrivingTask { base, env: None })
    }
}

impl Environment for DrivingTask {
    fn action_count(&self) -> usize {
        list_actions().len()
    }

    fn state_len(&self) -> usize {
        STATE_LEN
    }

    fn reset(&mut self, episode: usize) -> Result<Vec<f64>> {
        let env = DrivingEnv::new(self.base.with_seed(training_seed(self.base.seed, episode)))?;
        let s = encode_state(env.world());
        self.env = Some(env);
        Ok(s)
    }

    fn step(&mut self, action: usize) -> Result<EnvStep> {
        let env = self
            .env
            .as_mut()
            .ok_or_else(|| Error::Config("step before reset".into()))?;
        let out = env.step(action)?;
        Ok(EnvStep {
            reward: out.reward,
            state: encode_state(env.world()),
            valid: out.valid,
            done: out.termination.is_some(),
            terminal: out.termination.is_some_and(is_absorbing),
            end: out.termination.map(|t| t.to_string()),
        })
    }
}

/// One episode under an epsilon-greedy policy over `net`.
pub fn run_policy(cfg: &EnvConfig, net: &Mlp, eps: f64) -> Result<ExecutionLog> {
    let count = list_actions().len();
    if net.outputs() != count || net.inputs() != STATE_LEN {
        return Err(Error::Checkpoint(format!(
            "network shape {}→{} does not fit {STATE_LEN} features and {count} actions",
            net.inputs(),
            net.outputs()
        )));
    }
    let mut env = DrivingEnv::new(cfg.clone())?;
    let mut log = ExecutionLog::new(Strategy::Dqn, cfg);
    log.meta.set("epsilon", eps);
    let mut rng = SimRng::seed_from(cfg.seed).split(POLICY_STREAM);
    while !env.is_done() {
        let q = net.forward(&encode_state(env.world()));
        let a = select_action(&q, eps, &mut rng);
        log.record(&env.step(a)?);
    }
    Ok(log)
}
