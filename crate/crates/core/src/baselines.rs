//! Random and greedy search strategies over the same action registry.

use crate::dqn::driving::POLICY_STREAM;
use crate::env::{DrivingEnv, EnvConfig};
use crate::error::Result;
use crate::rng::SimRng;
use crate::scenario::log::{ExecutionLog, Strategy, TrialRecord};

/// Uniform over currently valid actions each decision.
pub fn run_random(cfg: &EnvConfig) -> Result<ExecutionLog> {
    let mut env = DrivingEnv::new(cfg.clone())?;
    let mut log = ExecutionLog::new(Strategy::Random, cfg);
    let mut rng = SimRng::seed_from(cfg.seed).split(POLICY_STREAM);
    while !env.is_done() {
        let valid = env.valid_actions();
        let a = valid[rng.below(valid.len())];
        log.record(&env.step(a)?);
    }
    Ok(log)
}

/// Tries every valid action from a snapshot, rolls back, then commits the
/// one with the highest period reward. Ties go to the lowest id.
pub fn run_greedy(cfg: &EnvConfig) -> Result<ExecutionLog> {
    let mut env = DrivingEnv::new(cfg.clone())?;
    let mut log = ExecutionLog::new(Strategy::Greedy, cfg);
    let mut step = 0;
    while !env.is_done() {
        let cp = env.checkpoint();
        let mut best: Option<(usize, f64)> = None;
        for a in env.valid_actions() {
            let reward = env.step(a)?.reward;
            env.rollback(&cp)?;
            log.trials.push(TrialRecord {
                step,
                action_id: a,
                reward,
                restored_hash: env.world().world_hash(),
            });
            if best.is_none_or(|(_, r)| reward > r) {
                best = Some((a, reward));
            }
        }
        let (a, _) = best.expect("the no-op action is always valid");
        log.record(&env.step(a)?);
        step += 1;
    }
    Ok(log)
}
