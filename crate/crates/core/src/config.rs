//! Flat `key = value` settings used for experiment files and log metadata.

use crate::autopilot::AutopilotParams;
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::reward::RewardConfig;
use std::fmt::Display;
use std::str::FromStr;

/// Ordered key/value pairs. Later assignments to a key replace earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    entries: Vec<(String, String)>,
}

impl Settings {
    pub fn new() -> Self {
        Settings::default()
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", idx + 1)))?;
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", idx + 1)));
            }
            s.set(key, v.trim());
        }
        Ok(s)
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.entries {
            self.set(k, v);
        }
    }

    /// Rejects keys outside `known`.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        match self.entries.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            Some((k, _)) => Err(Error::Config(format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn autopilot_fields(p: &mut AutopilotParams) -> [(&'static str, &mut f64); 18] {
    [
        ("autopilot.target_speed", &mut p.target_speed),
        ("autopilot.base_range_m", &mut p.base_range_m),
        ("autopilot.fog_coef", &mut p.fog_coef),
        ("autopilot.rain_coef", &mut p.rain_coef),
        ("autopilot.night_factor", &mut p.night_factor),
        ("autopilot.max_brake", &mut p.max_brake),
        ("autopilot.wet_brake_coef", &mut p.wet_brake_coef),
        ("autopilot.max_accel", &mut p.max_accel),
        ("autopilot.speed_up_accel", &mut p.speed_up_accel),
        ("autopilot.speed_cut_accel", &mut p.speed_cut_accel),
        ("autopilot.comfort_brake", &mut p.comfort_brake),
        ("autopilot.red_light_margin_m", &mut p.red_light_margin_m),
        ("autopilot.blocked_range_m", &mut p.blocked_range_m),
        ("autopilot.adjacent_clear_m", &mut p.adjacent_clear_m),
        ("autopilot.green_slow_range_m", &mut p.green_slow_range_m),
        ("autopilot.sidewalk_slow_range_m", &mut p.sidewalk_slow_range_m),
        ("autopilot.slow_zone_speed", &mut p.slow_zone_speed),
        ("autopilot.turn_speed", &mut p.turn_speed),
    ]
}

fn reward_fields(r: &mut RewardConfig) -> [(&'static str, &mut f64); 4] {
    [
        ("reward.ttc_thre", &mut r.ttc_thre),
        ("reward.dto_thre", &mut r.dto_thre),
        ("reward.jerk_thre", &mut r.jerk_thre),
        ("reward.jerk_ratio_cap", &mut r.jerk_ratio_cap),
    ]
}

const ENV_SCALARS: [&str; 10] = [
    "route",
    "weather",
    "seed",
    "reward",
    "ego_start_speed",
    "ambient_npcs",
    "time_scale",
    "max_episode_s",
    "stuck_limit_s",
    "max_decisions",
];

/// Every key understood by [`EnvConfig::from_settings`].
pub fn env_keys() -> Vec<&'static str> {
    let mut keys: Vec<&'static str> = ENV_SCALARS.to_vec();
    let mut ap = AutopilotParams::default();
    keys.extend(autopilot_fields(&mut ap).map(|(k, _)| k));
    let mut rw = RewardConfig::default();
    keys.extend(reward_fields(&mut rw).map(|(k, _)| k));
    keys
}

impl EnvConfig {
    pub fn to_settings(&self) -> Settings {
        let mut s = Settings::new();
        s.set("route", self.route);
        s.set("weather", self.preset);
        s.set("seed", self.seed);
        s.set("reward", self.reward_kind);
        s.set("ego_start_speed", self.ego_start_speed);
        s.set("ambient_npcs", self.ambient_npcs);
        s.set("time_scale", self.time_scale);
        s.set("max_episode_s", self.max_episode_s);
        s.set("stuck_limit_s", self.stuck_limit_s);
        s.set("max_decisions", self.max_decisions);
        let mut ap = self.autopilot;
        for (k, v) in autopilot_fields(&mut ap) {
            s.set(k, *v);
        }
        let mut rw = self.reward;
        for (k, v) in reward_fields(&mut rw) {
            s.set(k, *v);
        }
        s
    }

    /// Defaults overridden by any environment keys present; other keys are ignored.
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let d = EnvConfig::default();
        let mut cfg = EnvConfig {
            route: s.get_or("route", d.route)?,
            preset: s.get_or("weather", d.preset)?,
            seed: s.get_or("seed", d.seed)?,
            reward_kind: s.get_or("reward", d.reward_kind)?,
            ego_start_speed: s.get_or("ego_start_speed", d.ego_start_speed)?,
            ambient_npcs: s.get_or("ambient_npcs", d.ambient_npcs)?,
            time_scale: s.get_or("time_scale", d.time_scale)?,
            max_episode_s: s.get_or("max_episode_s", d.max_episode_s)?,
            stuck_limit_s: s.get_or("stuck_limit_s", d.stuck_limit_s)?,
            max_decisions: s.get_or("max_decisions", d.max_decisions)?,
            ..d
        };
        for (k, v) in autopilot_fields(&mut cfg.autopilot) {
            *v = s.get_or(k, *v)?;
        }
        for (k, v) in reward_fields(&mut cfg.reward) {
            *v = s.get_or(k, *v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
