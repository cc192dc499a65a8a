//! Per-run summaries and pairwise comparison tables.

use scenforge_core::metrics::TTC_HORIZON_S;
use scenforge_core::scenario::analysis::{classify_realism, div_api, div_scenario, execution_scenarios, scm};
use scenforge_core::scenario::log::ExecutionLog;
use scenforge_core::stats::compare;
use scenforge_core::{Result, RewardKind};
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub end: String,
    /// Realistic collision scenarios; at most one per run.
    pub collisions: usize,
    pub collision_time: Option<f64>,
    pub ttc: Option<f64>,
    pub dto: Option<f64>,
    pub jerk: Option<f64>,
    pub div_api: Option<f64>,
    pub div_scenario: f64,
    pub rcs: usize,
    pub ucs: usize,
    pub rns: usize,
    pub uns: usize,
    pub steps: usize,
    pub trials: usize,
}

impl RunSummary {
    pub fn of(log: &ExecutionLog) -> Result<Self> {
        let cfg = log.env_config()?;
        let realism = classify_realism(log);
        let scenarios: Vec<_> = execution_scenarios(log).into_iter().map(|s| s.scenes).collect();
        Ok(RunSummary {
            seed: cfg.seed,
            end: log.end.map_or("-".to_string(), |t| t.to_string()),
            collisions: realism.rcs,
            collision_time: realism.realistic_collision_time,
            ttc: scm(log, RewardKind::Ttc),
            dto: scm(log, RewardKind::Dto),
            jerk: scm(log, RewardKind::Jerk),
            div_api: div_api(log),
            div_scenario: div_scenario(&scenarios)?,
            rcs: realism.rcs,
            ucs: realism.ucs,
            rns: realism.rns,
            uns: realism.uns,
            steps: log.steps.len(),
            trials: log.trials.len(),
        })
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or("-".to_string(), |x| format!("{x:.6}"))
}

pub const RUN_HEADER: &str =
    "seed\tend\tcollision\tcollision_time\tttc\tdto\tjerk\tdiv_api\tdiv_scenario\trcs\tucs\trns\tuns\tsteps\ttrials";

pub fn runs_table(runs: &[RunSummary]) -> String {
    let mut out = format!("{RUN_HEADER}\n");
    for r in runs {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.seed,
            r.end,
            r.collisions,
            cell(r.collision_time),
            cell(r.ttc),
            cell(r.dto),
            cell(r.jerk),
            cell(r.div_api),
            r.div_scenario,
            r.rcs,
            r.ucs,
            r.rns,
            r.uns,
            r.steps,
            r.trials
        )
        .unwrap();
    }
    out
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = v.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Totals and means over a set of runs, one `name<TAB>value` line each.
pub fn totals(runs: &[RunSummary]) -> String {
    let sum = |f: fn(&RunSummary) -> usize| runs.iter().map(f).sum::<usize>();
    let rows = [
        ("runs", runs.len().to_string()),
        ("#Collision", sum(|r| r.collisions).to_string()),
        ("CollisionTime", cell(mean(runs.iter().filter_map(|r| r.collision_time)))),
        ("TTC", cell(mean(runs.iter().filter_map(|r| r.ttc)))),
        ("DTO", cell(mean(runs.iter().filter_map(|r| r.dto)))),
        ("Jerk", cell(mean(runs.iter().filter_map(|r| r.jerk)))),
        ("Div_API", cell(mean(runs.iter().filter_map(|r| r.div_api)))),
        ("Div_Scenario", cell(mean(runs.iter().map(|r| r.div_scenario)))),
        ("RCS", sum(|r| r.rcs).to_string()),
        ("UCS", sum(|r| r.ucs).to_string()),
        ("RNS", sum(|r| r.rns).to_string()),
        ("UNS", sum(|r| r.uns).to_string()),
        ("trials", sum(|r| r.trials).to_string()),
    ];
    rows.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect()
}

/// Per-run value of a compared metric; `None` leaves the run out.
type MetricFn = fn(&RunSummary) -> Option<f64>;

/// Compared metrics. A run with no TTC conflict scores the horizon.
pub const METRICS: [(&str, MetricFn); 9] = [
    ("TTC", |r| Some(r.ttc.unwrap_or(TTC_HORIZON_S))),
    ("DTO", |r| r.dto),
    ("Jerk", |r| r.jerk),
    ("#Collision", |r| Some(r.collisions as f64)),
    ("CollisionTime", |r| r.collision_time),
    ("Div_API", |r| r.div_api),
    ("Div_Scenario", |r| Some(r.div_scenario)),
    ("UCS", |r| Some(r.ucs as f64)),
    ("UNS", |r| Some(r.uns as f64)),
];

/// One row per metric: A12 of set `a` over set `b`, its magnitude and the
/// two-sided p. Metrics missing on either side print `-`.
pub fn comparison_table(a: &[RunSummary], b: &[RunSummary]) -> Result<String> {
    let mut out = "metric\ta12\tmagnitude\tp\tn_a\tn_b\n".to_string();
    for (name, value) in METRICS {
        let x: Vec<f64> = a.iter().filter_map(value).collect();
        let y: Vec<f64> = b.iter().filter_map(value).collect();
        if x.is_empty() || y.is_empty() {
            writeln!(out, "{name}\t-\t-\t-\t{}\t{}", x.len(), y.len()).unwrap();
            continue;
        }
        let c = compare(&x, &y)?;
        writeln!(
            out,
            "{name}\t{:.4}\t{}\t{:.6}\t{}\t{}",
            c.a12,
            c.magnitude,
            c.p_value,
            x.len(),
            y.len()
        )
        .unwrap();
    }
    Ok(out)
}
