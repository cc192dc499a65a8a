//! Reward functions over a period's metric buffers.

use crate::error::{Error, Result};
use crate::metrics::MetricBuffers;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Metric values at or below zero are replaced by this fraction of the threshold.
const FLOOR_FRACTION: f64 = 1e-3;
pub const PUNISHMENT: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub ttc_thre: f64,
    pub dto_thre: f64,
    pub jerk_thre: f64,
    pub jerk_ratio_cap: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            ttc_thre: 7.0,
            dto_thre: 10.0,
            jerk_thre: 5.0,
            jerk_ratio_cap: 10.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [self.ttc_thre, self.dto_thre, self.jerk_thre, self.jerk_ratio_cap];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::Config("reward thresholds must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RewardKind {
    Ttc,
    Dto,
    Jerk,
}

impl RewardKind {
    pub const ALL: [RewardKind; 3] = [RewardKind::Ttc, RewardKind::Dto, RewardKind::Jerk];
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardKind::Ttc => "ttc",
            RewardKind::Dto => "dto",
            RewardKind::Jerk => "jerk",
        })
    }
}

impl FromStr for RewardKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ttc" => Ok(RewardKind::Ttc),
            "dto" => Ok(RewardKind::Dto),
            "jerk" => Ok(RewardKind::Jerk),
            _ => Err(Error::Config(format!("unknown reward `{s}`"))),
        }
    }
}

/// Min-max normalization of `f` into the unit interval (unclamped).
pub fn nor(f: f64, lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return Err(Error::Config(format!("normalization bounds [{lo}, {hi}] are empty")));
    }
    Ok((f - lo) / (hi - lo))
}

fn floored(value: f64, thre: f64) -> f64 {
    value.max(FLOOR_FRACTION * thre)
}

/// Reward for a proximity metric where small values are dangerous.
fn proximity_reward(value: Option<f64>, thre: f64) -> f64 {
    match value {
        Some(v) if v <= thre => {
            let ratio = nor(floored(v, thre), 0.0, thre).expect("threshold validated").clamp(0.0, 1.0);
            -ratio.ln()
        }
        _ => PUNISHMENT,
    }
}

pub fn ttc_value_reward(ttc: Option<f64>, cfg: &RewardConfig) -> f64 {
    proximity_reward(ttc, cfg.ttc_thre)
}

pub fn dto_value_reward(dto: Option<f64>, cfg: &RewardConfig) -> f64 {
    proximity_reward(dto, cfg.dto_thre)
}

pub fn jerk_value_reward(jerk: Option<f64>, cfg: &RewardConfig) -> f64 {
    match jerk {
        Some(j) if j >= cfg.jerk_thre => {
            let ratio = nor(j, 0.0, cfg.jerk_thre).expect("threshold validated");
            ratio.min(cfg.jerk_ratio_cap).exp() - 1.0
        }
        _ => PUNISHMENT,
    }
}

/// Reward from the smallest TTC in the buffer; missing entries mean no conflict.
pub fn ttc_reward(buff: &[Option<f64>], cfg: &RewardConfig) -> f64 {
    ttc_value_reward(buff.iter().flatten().copied().min_by(f64::total_cmp), cfg)
}

pub fn dto_reward(buff: &[f64], cfg: &RewardConfig) -> f64 {
    dto_value_reward(buff.iter().copied().min_by(f64::total_cmp), cfg)
}

pub fn jerk_reward(buff: &[f64], cfg: &RewardConfig) -> f64 {
    jerk_value_reward(buff.iter().copied().max_by(f64::total_cmp), cfg)
}

/// Step reward for a period. A period ending in contact is scored on the
/// last pre-contact sample; contact with a static obstacle has no TTC
/// conflict and so earns the punishment under the TTC reward.
pub fn period_reward(kind: RewardKind, b: &MetricBuffers, cfg: &RewardConfig) -> f64 {
    if let Some(c) = b.contact {
        return match kind {
            RewardKind::Ttc => ttc_value_reward(c.ttc, cfg),
            RewardKind::Dto => dto_value_reward(Some(c.dto), cfg),
            RewardKind::Jerk => jerk_value_reward(Some(c.jerk), cfg),
        };
    }
    match kind {
        RewardKind::Ttc => ttc_reward(&b.ttc_buff, cfg),
        RewardKind::Dto => dto_reward(&b.dto_buff, cfg),
        RewardKind::Jerk => jerk_reward(&b.jerk_buff, cfg),
    }
}
