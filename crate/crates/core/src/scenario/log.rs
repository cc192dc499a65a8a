//! Line-oriented execution logs, recording and replay.

use super::scene::Scene;
use crate::actions::SpawnRecord;
use crate::config::Settings;
use crate::env::{CollisionRecord, DrivingEnv, EnvConfig, EnvSample, SampleRecord, StepOutcome, Termination};
use crate::error::{Error, Result};
use crate::metrics::{MetricBuffers, MetricSample};
use crate::world::fnv1a64;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Random,
    Greedy,
    Dqn,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Random => "rs",
            Strategy::Greedy => "gs",
            Strategy::Dqn => "dqn",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rs" | "random" => Ok(Strategy::Random),
            "gs" | "greedy" => Ok(Strategy::Greedy),
            "dqn" => Ok(Strategy::Dqn),
            _ => Err(Error::Config(format!("unknown strategy `{s}`"))),
        }
    }
}

/// One decision as logged.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub action_id: usize,
    pub valid: bool,
    pub reward: f64,
    pub buffers: MetricBuffers,
    pub world_hash: u64,
    /// Decision time and realism facts of an accepted spawn.
    pub spawn: Option<(f64, SpawnRecord)>,
}

/// One counterfactual tried by the greedy strategy before committing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub step: usize,
    pub action_id: usize,
    pub reward: f64,
    /// World hash after rolling the trial back.
    pub restored_hash: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExecutionLog {
    pub meta: Settings,
    pub steps: Vec<StepRecord>,
    pub samples: Vec<SampleRecord>,
    pub trials: Vec<TrialRecord>,
    pub collision: Option<CollisionRecord>,
    pub end: Option<Termination>,
}

impl ExecutionLog {
    pub fn new(strategy: Strategy, cfg: &EnvConfig) -> Self {
        let mut meta = Settings::new();
        meta.set("strategy", strategy);
        meta.merge(&cfg.to_settings());
        ExecutionLog {
            meta,
            ..ExecutionLog::default()
        }
    }

    pub fn strategy(&self) -> Result<Option<Strategy>> {
        self.meta.get("strategy")
    }

    pub fn env_config(&self) -> Result<EnvConfig> {
        EnvConfig::from_settings(&self.meta)
    }

    pub fn record(&mut self, out: &StepOutcome) {
        self.steps.push(StepRecord {
            action_id: out.action_id,
            valid: out.valid,
            reward: out.reward,
            buffers: out.buffers.clone(),
            world_hash: out.world_hash,
            spawn: out.spawn.map(|s| (out.t, s)),
        });
        self.samples.extend(out.samples.iter().cloned());
        if out.collision.is_some() {
            self.collision = out.collision.clone();
        }
        if out.termination.is_some() {
            self.end = out.termination;
        }
    }

    pub fn action_ids(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.action_id).collect()
    }

    pub fn spawns(&self) -> Vec<(f64, SpawnRecord)> {
        self.steps.iter().filter_map(|s| s.spawn).collect()
    }

    pub fn scenes(&self) -> Vec<Scene> {
        self.samples.iter().map(|s| s.scene.clone()).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("schema={SCHEMA_VERSION}\n");
        out.push_str("meta");
        for (k, v) in self.meta.entries() {
            out.push_str(&format!("|{k}={v}"));
        }
        out.push('\n');
        // Samples follow the step whose period produced them.
        let mut sample_iter = self.samples.iter();
        let mut trial_iter = self.trials.iter().peekable();
        for (k, st) in self.steps.iter().enumerate() {
            while let Some(tr) = trial_iter.next_if(|tr| tr.step == k) {
                out.push_str(&format!(
                    "trial|{}|{}|{}|{:016x}\n",
                    tr.step, tr.action_id, tr.reward, tr.restored_hash
                ));
            }
            out.push_str(&format!(
                "step|{}|{}|{}|{}|{}|{}|{:016x}\n",
                st.action_id,
                u8::from(st.valid),
                st.reward,
                join_opt(&st.buffers.ttc_buff),
                join(&st.buffers.dto_buff),
                join(&st.buffers.jerk_buff),
                st.world_hash
            ));
            if let Some(c) = st.buffers.contact {
                out.push_str(&format!(
                    "contact|{}|{}|{}\n",
                    c.ttc.map_or("none".to_string(), |v| v.to_string()),
                    c.dto,
                    c.jerk
                ));
            }
            if let Some((t, s)) = st.spawn {
                out.push_str(&format!(
                    "spawn|{t}|{}|{}|{}|{}\n",
                    s.entity_id, s.min_distance, s.required, s.overlap
                ));
            }
            for s in sample_iter.by_ref().take(st.buffers.len()) {
                write_sample(&mut out, s);
            }
        }
        for s in sample_iter {
            write_sample(&mut out, s);
        }
        for tr in trial_iter {
            out.push_str(&format!(
                "trial|{}|{}|{}|{:016x}\n",
                tr.step, tr.action_id, tr.reward, tr.restored_hash
            ));
        }
        if let Some(c) = &self.collision {
            let ids: Vec<String> = c.ids.iter().map(|i| i.to_string()).collect();
            out.push_str(&format!("collision|{}|{}\n", c.t, ids.join(",")));
        }
        if let Some(e) = self.end {
            out.push_str(&format!("end|{e}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let err = |line: usize, msg: &str| Error::Log {
            line: line + 1,
            msg: msg.to_string(),
        };
        match lines.next() {
            Some((_, l)) if l.trim() == format!("schema={SCHEMA_VERSION}") => {}
            Some((i, l)) => return Err(err(i, &format!("unsupported header `{l}`"))),
            None => return Ok(ExecutionLog::default()),
        }
        let mut log = ExecutionLog::default();
        let mut envs: Vec<EnvSample> = Vec::new();
        let mut scenes: Vec<Scene> = Vec::new();
        for (i, raw) in lines {
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            let (tag, rest) = line.split_once('|').unwrap_or((line, ""));
            let f: Vec<&str> = rest.split('|').collect();
            let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| err(i, &format!("bad number `{s}`"))) };
            let hex = |s: &str| -> Result<u64> { u64::from_str_radix(s, 16).map_err(|_| err(i, &format!("bad hash `{s}`"))) };
            let int = |s: &str| -> Result<usize> { s.parse().map_err(|_| err(i, &format!("bad integer `{s}`"))) };
            let need = |n: usize| -> Result<()> {
                if f.len() == n {
                    Ok(())
                } else {
                    Err(err(i, &format!("`{tag}` needs {n} fields, got {}", f.len())))
                }
            };
            match tag {
                "meta" => {
                    for kv in f.iter().filter(|s| !s.is_empty()) {
                        let (k, v) = kv.split_once('=').ok_or_else(|| err(i, "meta entry without `=`"))?;
                        log.meta.set(k, v);
                    }
                }
                "step" => {
                    need(7)?;
                    let valid = match f[1] {
                        "0" => false,
                        "1" => true,
                        other => return Err(err(i, &format!("bad validity `{other}`"))),
                    };
                    let ttc_buff = split_list(f[3])
                        .map(|s| if s == "none" { Ok(None) } else { num(s).map(Some) })
                        .collect::<Result<Vec<_>>>()?;
                    let dto_buff = split_list(f[4]).map(num).collect::<Result<Vec<_>>>()?;
                    let jerk_buff = split_list(f[5]).map(num).collect::<Result<Vec<_>>>()?;
                    if ttc_buff.len() != dto_buff.len() || dto_buff.len() != jerk_buff.len() {
                        return Err(err(i, "metric buffers differ in length"));
                    }
                    log.steps.push(StepRecord {
                        action_id: int(f[0])?,
                        valid,
                        reward: num(f[2])?,
                        buffers: MetricBuffers {
                            ttc_buff,
                            dto_buff,
                            jerk_buff,
                            contact: None,
                        },
                        world_hash: hex(f[6])?,
                        spawn: None,
                    });
                }
                "contact" => {
                    need(3)?;
                    let step = log.steps.last_mut().ok_or_else(|| err(i, "contact before any step"))?;
                    step.buffers.contact = Some(MetricSample {
                        ttc: if f[0] == "none" { None } else { Some(num(f[0])?) },
                        dto: num(f[1])?,
                        jerk: num(f[2])?,
                    });
                }
                "env" => {
                    need(6)?;
                    envs.push(EnvSample {
                        t: num(f[0])?,
                        mapped_ts: num(f[1])?,
                        cloudiness: num(f[2])?,
                        rain: num(f[3])?,
                        fog: num(f[4])?,
                        wetness: num(f[5])?,
                    });
                }
                "scene" => {
                    let (_, body) = rest.split_once('|').ok_or_else(|| err(i, "scene without time"))?;
                    num(f[0])?;
                    scenes.push(body.parse().map_err(|e: Error| err(i, &e.to_string()))?);
                }
                "spawn" => {
                    need(5)?;
                    let step = log.steps.last_mut().ok_or_else(|| err(i, "spawn before any step"))?;
                    step.spawn = Some((
                        num(f[0])?,
                        SpawnRecord {
                            entity_id: int(f[1])? as u32,
                            min_distance: num(f[2])?,
                            required: num(f[3])?,
                            overlap: num(f[4])?,
                        },
                    ));
                }
                "trial" => {
                    need(4)?;
                    log.trials.push(TrialRecord {
                        step: int(f[0])?,
                        action_id: int(f[1])?,
                        reward: num(f[2])?,
                        restored_hash: hex(f[3])?,
                    });
                }
                "collision" => {
                    need(2)?;
                    let ids = split_list(f[1]).map(|s| int(s).map(|v| v as u32)).collect::<Result<Vec<_>>>()?;
                    log.collision = Some(CollisionRecord { t: num(f[0])?, ids });
                }
                "end" => {
                    need(1)?;
                    log.end = Some(f[0].parse().map_err(|e: Error| err(i, &e.to_string()))?);
                }
                other => return Err(err(i, &format!("unknown record `{other}`"))),
            }
        }
        if envs.len() != scenes.len() {
            return Err(Error::Log {
                line: 0,
                msg: format!("{} env lines but {} scene lines", envs.len(), scenes.len()),
            });
        }
        log.samples = scenes
            .into_iter()
            .zip(envs)
            .map(|(scene, env)| SampleRecord { scene, env })
            .collect();
        Ok(log)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        ExecutionLog::parse(&std::fs::read_to_string(path)?)
    }

    pub fn hash(&self) -> u64 {
        fnv1a64(self.to_text().as_bytes())
    }
}

fn write_sample(out: &mut String, s: &SampleRecord) {
    let e = &s.env;
    out.push_str(&format!(
        "env|{}|{}|{}|{}|{}|{}\n",
        e.t, e.mapped_ts, e.cloudiness, e.rain, e.fog, e.wetness
    ));
    out.push_str(&format!("scene|{}|{}\n", e.t, s.scene));
}

fn join(v: &[f64]) -> String {
    if v.is_empty() {
        "-".to_string()
    } else {
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
    }
}

fn join_opt(v: &[Option<f64>]) -> String {
    if v.is_empty() {
        "-".to_string()
    } else {
        v.iter()
            .map(|x| x.map_or("none".to_string(), |x| x.to_string()))
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').filter(|p| !p.is_empty() && *p != "-")
}

/// Outcome of re-executing a log.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplayReport {
    pub steps_checked: usize,
    /// (step index, logged hash, replayed hash); holds at most the first divergence.
    pub divergences: Vec<(usize, u64, u64)>,
}

impl ReplayReport {
    pub fn into_result(self) -> Result<ReplayReport> {
        match self.divergences.first() {
            Some(&(step, expected, actual)) => Err(Error::ReplayMismatch {
                step,
                expected,
                actual,
            }),
            None => Ok(self),
        }
    }
}

impl fmt::Display for ReplayReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (step, expected, actual) in &self.divergences {
            writeln!(f, "divergence|step={step}|expected={expected:016x}|actual={actual:016x}")?;
        }
        Ok(())
    }
}

/// Re-executes the logged actions from the logged configuration and compares
/// the world hash after every decision.
pub fn replay(log: &ExecutionLog) -> Result<ReplayReport> {
    let mut report = ReplayReport::default();
    if log.steps.is_empty() {
        return Ok(report);
    }
    let mut env = DrivingEnv::new(log.env_config()?)?;
    for (k, st) in log.steps.iter().enumerate() {
        let actual = if env.is_done() {
            0
        } else {
            match env.step(st.action_id) {
                Ok(out) => out.world_hash,
                Err(Error::UnknownAction(_)) => 0,
                Err(e) => return Err(e),
            }
        };
        report.steps_checked += 1;
        if actual != st.world_hash {
            report.divergences.push((k, st.world_hash, actual));
            break;
        }
    }
    Ok(report)
}
