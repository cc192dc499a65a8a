//! Scenario assembly, diversity, safety-and-comfort summaries and realism.

use super::log::ExecutionLog;
use super::scene::Scene;
use super::similarity::{scenario_similarity, to_f64};
use crate::error::Result;
use crate::metrics::SAMPLE_S;
use crate::reward::RewardKind;
use std::collections::BTreeSet;
use std::fmt;

/// Scenes per scenario: one action period of samples.
pub const SCENES_PER_SCENARIO: usize = 6;

/// Fixed-size tiles of consecutive scenes; a trailing partial tile is dropped.
pub fn assemble_scenarios(scenes: &[Scene]) -> Vec<Vec<Scene>> {
    scenes
        .chunks_exact(SCENES_PER_SCENARIO)
        .map(|c| c.to_vec())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub index: usize,
    /// Index of the first scene in the execution's scene stream.
    pub first_scene: usize,
    pub scenes: Vec<Scene>,
    pub t_first: f64,
    pub t_last: f64,
    pub collision: bool,
}

/// Tiles an execution into scenarios. When a collision cuts the last period
/// short, a tail scenario made of the final six scenes is added and carries
/// the collision.
pub fn execution_scenarios(log: &ExecutionLog) -> Vec<Scenario> {
    let n = log.samples.len();
    let make = |index: usize, first: usize| Scenario {
        index,
        first_scene: first,
        scenes: log.samples[first..first + SCENES_PER_SCENARIO]
            .iter()
            .map(|s| s.scene.clone())
            .collect(),
        t_first: log.samples[first].env.t,
        t_last: log.samples[first + SCENES_PER_SCENARIO - 1].env.t,
        collision: false,
    };
    let full = n / SCENES_PER_SCENARIO;
    let mut out: Vec<Scenario> = (0..full).map(|k| make(k, k * SCENES_PER_SCENARIO)).collect();
    if log.collision.is_some() && n >= SCENES_PER_SCENARIO {
        if !n.is_multiple_of(SCENES_PER_SCENARIO) {
            out.push(make(full, n - SCENES_PER_SCENARIO));
        }
        if let Some(last) = out.last_mut() {
            last.collision = true;
        }
    }
    out
}

/// Sum over unordered scenario pairs of (1 − similarity), divided by the
/// number of scenarios.
pub fn div_scenario(scenarios: &[Vec<Scene>]) -> Result<f64> {
    let m = scenarios.len();
    if m < 2 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            total += 1.0 - to_f64(scenario_similarity(&scenarios[i], &scenarios[j])?);
        }
    }
    Ok(total / m as f64)
}

/// Distinct applied actions over applied actions.
pub fn div_api(log: &ExecutionLog) -> Option<f64> {
    let applied: Vec<usize> = log.steps.iter().filter(|s| s.valid).map(|s| s.action_id).collect();
    if applied.is_empty() {
        return None;
    }
    let unique: BTreeSet<usize> = applied.iter().copied().collect();
    Some(unique.len() as f64 / applied.len() as f64)
}

/// Mean over action periods of the period summary: minimum TTC, minimum
/// DTO or maximum jerk. Periods without a TTC conflict are left out of the
/// TTC mean.
pub fn scm(log: &ExecutionLog, kind: RewardKind) -> Option<f64> {
    let values: Vec<f64> = log
        .steps
        .iter()
        .filter(|s| s.valid)
        .filter_map(|s| match kind {
            RewardKind::Ttc => s.buffers.min_ttc(),
            RewardKind::Dto => s.buffers.min_dto(),
            RewardKind::Jerk => s.buffers.max_jerk(),
        })
        .collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Unrealistic configuration kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Defect {
    /// Mapped clock ran backwards or faster than simulation time.
    Utc,
    /// A weather channel changed faster than its hourly bound.
    Uwc,
    /// A spawn closer than its safety distance.
    Vsd,
    /// A spawn overlapping an existing object.
    Oa,
}

impl Defect {
    pub const ALL: [Defect; 4] = [Defect::Utc, Defect::Uwc, Defect::Vsd, Defect::Oa];
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Defect::Utc => "UTC",
            Defect::Uwc => "UWC",
            Defect::Vsd => "VSD",
            Defect::Oa => "OA",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectEvent {
    pub kind: Defect,
    pub t: f64,
    /// Spawn events happen at decision time, before the period's first sample.
    pub at_decision: bool,
}

/// Largest change per mapped hour, as fractions: cloudiness, rain, fog, wetness.
pub const WEATHER_RATE_BOUNDS: [f64; 4] = [0.25, 0.20, 0.10, 0.05];
const RATE_TOLERANCE: f64 = 1e-9;
const CLOCK_TOLERANCE_S: f64 = 1e-6;

/// Every realism defect in an execution, in log order.
pub fn defect_events(log: &ExecutionLog) -> Vec<DefectEvent> {
    let mut events = Vec::new();
    for st in &log.steps {
        if let Some((t, s)) = st.spawn {
            if s.overlap > 0.0 {
                events.push(DefectEvent {
                    kind: Defect::Oa,
                    t,
                    at_decision: true,
                });
            }
            if s.min_distance < s.required {
                events.push(DefectEvent {
                    kind: Defect::Vsd,
                    t,
                    at_decision: true,
                });
            }
        }
    }
    for pair in log.samples.windows(2) {
        let (a, b) = (&pair[0].env, &pair[1].env);
        let dt = b.t - a.t;
        let dts = b.mapped_ts - a.mapped_ts;
        if dts < -CLOCK_TOLERANCE_S || dts > dt + CLOCK_TOLERANCE_S {
            events.push(DefectEvent {
                kind: Defect::Utc,
                t: b.t,
                at_decision: false,
            });
        }
        let hours = dts.max(0.0) / 3600.0;
        let deltas = [
            b.cloudiness - a.cloudiness,
            b.rain - a.rain,
            b.fog - a.fog,
            b.wetness - a.wetness,
        ];
        if deltas
            .iter()
            .zip(WEATHER_RATE_BOUNDS)
            .any(|(d, bound)| d.abs() > bound * hours + RATE_TOLERANCE)
        {
            events.push(DefectEvent {
                kind: Defect::Uwc,
                t: b.t,
                at_decision: false,
            });
        }
    }
    events
}

fn event_in(s: &Scenario, e: &DefectEvent) -> bool {
    if e.at_decision {
        e.t >= s.t_first - SAMPLE_S - CLOCK_TOLERANCE_S && e.t < s.t_first
    } else {
        e.t >= s.t_first - CLOCK_TOLERANCE_S && e.t <= s.t_last + CLOCK_TOLERANCE_S
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RealismReport {
    pub rcs: usize,
    pub ucs: usize,
    pub rns: usize,
    pub uns: usize,
    pub defects: Vec<DefectEvent>,
    /// Time of the collision when it happened in a realistic scenario.
    pub realistic_collision_time: Option<f64>,
}

impl RealismReport {
    pub fn scenarios(&self) -> usize {
        self.rcs + self.ucs + self.rns + self.uns
    }

    pub fn defect_count(&self, kind: Defect) -> usize {
        self.defects.iter().filter(|d| d.kind == kind).count()
    }
}

/// Realistic/unrealistic × collision/no-collision counts for one execution.
pub fn classify_realism(log: &ExecutionLog) -> RealismReport {
    let defects = defect_events(log);
    let mut report = RealismReport::default();
    for s in execution_scenarios(log) {
        let realistic = !defects.iter().any(|e| event_in(&s, e));
        match (realistic, s.collision) {
            (true, true) => {
                report.rcs += 1;
                report.realistic_collision_time = log.collision.as_ref().map(|c| c.t);
            }
            (false, true) => report.ucs += 1,
            (true, false) => report.rns += 1,
            (false, false) => report.uns += 1,
        }
    }
    report.defects = defects;
    report
}
