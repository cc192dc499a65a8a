//! Surrogate safety metrics: time-to-collision, distance-to-obstacle and jerk.

use crate::geometry::Vec2;
use crate::world::{Entity, WorldState, DT};
use serde::{Deserialize, Serialize};

/// Conflicts further out than this are ignored.
pub const TTC_HORIZON_S: f64 = 30.0;
/// DTO recorded when nothing is around.
pub const DTO_CAP_M: f64 = 100.0;
/// Sampling cadence inside an action period.
pub const SAMPLE_S: f64 = 0.5;
/// Length of one action period.
pub const PERIOD_S: f64 = 3.0;

/// Kinematic summary of a body for pairwise metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Body {
    pub position: Vec2,
    pub velocity: Vec2,
    pub heading: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl From<&Entity> for Body {
    fn from(e: &Entity) -> Self {
        Body {
            position: e.pose.position(),
            velocity: e.velocity,
            heading: e.pose.heading,
            half_length: e.length / 2.0,
            half_width: e.width / 2.0,
        }
    }
}

/// Predicted time to collision of two bodies under constant velocity.
///
/// The conflict point is the closest point of approach of the two
/// trajectories. A conflict exists when it lies strictly inside the horizon
/// and the bodies' centers pass within the sum of their half widths there.
pub fn ttc_pair(ego: &Body, other: &Body) -> Option<f64> {
    let p = other.position - ego.position;
    let v = other.velocity - ego.velocity;
    let vv = v.norm_sq();
    if vv < 1e-12 {
        return None;
    }
    let t = -p.dot(v) / vv;
    if !(t > 0.0 && t < TTC_HORIZON_S) {
        return None;
    }
    let miss = (p + v * t).norm();
    (miss <= ego.half_width + other.half_width).then_some(t)
}

/// Minimum TTC between the ego and every dynamic obstacle.
pub fn ttc_min(world: &WorldState) -> Option<f64> {
    let ego = Body::from(world.ego());
    world
        .others()
        .filter(|o| o.is_dynamic())
        .filter_map(|o| ttc_pair(&ego, &Body::from(o)))
        .min_by(f64::total_cmp)
}

fn support(b: &Body, u: Vec2) -> f64 {
    let f = Vec2::from_angle(b.heading);
    u.dot(f).abs() * b.half_length + u.dot(f.perp()).abs() * b.half_width
}

/// Center distance minus each body's extent toward the other, floored at zero.
pub fn dto_pair(a: &Body, b: &Body) -> f64 {
    let c = b.position - a.position;
    let dist = c.norm();
    if dist == 0.0 {
        return 0.0;
    }
    let u = c * (1.0 / dist);
    (dist - support(a, u) - support(b, u)).max(0.0)
}

/// Minimum DTO over every obstacle, static ones included; capped.
pub fn dto_min(world: &WorldState) -> f64 {
    let ego = Body::from(world.ego());
    world
        .others()
        .map(|o| dto_pair(&ego, &Body::from(o)))
        .fold(DTO_CAP_M, f64::min)
}

pub fn jerk_between(a_prev: f64, a_now: f64, step: f64) -> f64 {
    (a_now - a_prev).abs() / step
}

/// Jerk at the latest history entry against the entry one sampling step earlier.
pub fn jerk_now(history: &[(f64, f64)]) -> Option<f64> {
    jerk_at(history, SAMPLE_S)
}

pub fn jerk_at(history: &[(f64, f64)], step: f64) -> Option<f64> {
    let &(t_now, a_now) = history.last()?;
    if history.len() < 2 {
        return None;
    }
    let want = t_now - step;
    history
        .iter()
        .rev()
        .find(|(t, _)| (t - want).abs() < DT / 2.0)
        .map(|&(_, a_prev)| jerk_between(a_prev, a_now, step))
}

/// One joint observation of the three metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub ttc: Option<f64>,
    pub dto: f64,
    pub jerk: f64,
}

pub fn sample(world: &WorldState) -> MetricSample {
    let history: Vec<(f64, f64)> = world.accel_history.iter().copied().collect();
    MetricSample {
        ttc: ttc_min(world),
        dto: dto_min(world),
        jerk: jerk_now(&history).unwrap_or(0.0),
    }
}

/// Metric lists gathered over one action period.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricBuffers {
    pub ttc_buff: Vec<Option<f64>>,
    pub dto_buff: Vec<f64>,
    pub jerk_buff: Vec<f64>,
    /// Sample taken on the last tick before contact, when the period ended in a collision.
    pub contact: Option<MetricSample>,
}

impl MetricBuffers {
    pub fn push(&mut self, s: MetricSample) {
        self.ttc_buff.push(s.ttc);
        self.dto_buff.push(s.dto);
        self.jerk_buff.push(s.jerk);
    }

    pub fn len(&self) -> usize {
        self.dto_buff.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dto_buff.is_empty()
    }

    fn with_contact(&self) -> impl Iterator<Item = MetricSample> + '_ {
        (0..self.len())
            .map(|i| MetricSample {
                ttc: self.ttc_buff[i],
                dto: self.dto_buff[i],
                jerk: self.jerk_buff[i],
            })
            .chain(self.contact)
    }

    /// Period summaries: minimum TTC, minimum DTO, maximum jerk.
    pub fn min_ttc(&self) -> Option<f64> {
        self.with_contact().filter_map(|s| s.ttc).min_by(f64::total_cmp)
    }

    pub fn min_dto(&self) -> Option<f64> {
        self.with_contact().map(|s| s.dto).min_by(f64::total_cmp)
    }

    pub fn max_jerk(&self) -> Option<f64> {
        self.with_contact().map(|s| s.jerk).max_by(f64::total_cmp)
    }
}

/// How a metrics collection period ended.
#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    pub buffers: MetricBuffers,
    pub collisions: Vec<((u32, u32), f64)>,
}

/// Steps `world` through `period` seconds, sampling every `step` seconds.
/// Stops at the first tick with a collision.
pub fn collect(world: &mut WorldState, period: f64, step: f64) -> Collection {
    collect_with(world, period, step, |_| {})
}

/// As [`collect`], calling `on_sample` after each regular sample.
pub fn collect_with(
    world: &mut WorldState,
    period: f64,
    step: f64,
    mut on_sample: impl FnMut(&WorldState),
) -> Collection {
    let ticks_per_sample = (step / DT).round() as usize;
    let samples = (period / step).round() as usize;
    let mut buffers = MetricBuffers::default();
    for _ in 0..samples {
        for _ in 0..ticks_per_sample {
            let before = sample(world);
            world.step(DT);
            let collisions = world.collision_events();
            if !collisions.is_empty() {
                buffers.contact = Some(before);
                return Collection {
                    buffers,
                    collisions,
                };
            }
        }
        buffers.push(sample(world));
        on_sample(world);
    }
    Collection {
        buffers,
        collisions: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn car(x: f64, y: f64, vx: f64, vy: f64) -> Body {
        Body {
            position: Vec2::new(x, y),
            velocity: Vec2::new(vx, vy),
            heading: vy.atan2(vx),
            half_length: 2.3,
            half_width: 0.95,
        }
    }

    #[test]
    fn stopped_car_ahead() {
        let t = ttc_pair(&car(0.0, 0.0, 10.0, 0.0), &car(50.0, 0.0, 0.0, 0.0)).unwrap();
        assert!((t - 5.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_lanes_never_conflict() {
        assert_eq!(ttc_pair(&car(0.0, 0.0, 10.0, 0.0), &car(5.0, 3.5, 10.0, 0.0)), None);
        assert_eq!(ttc_pair(&car(0.0, 0.0, 10.0, 0.0), &car(20.0, 3.5, 5.0, 0.0)), None);
    }

    #[test]
    fn crossing_cases() {
        let ego = car(0.0, 0.0, 10.0, 0.0);
        let mut early = car(30.0, -20.0, 0.0, 10.0);
        early.heading = FRAC_PI_2;
        assert_eq!(ttc_pair(&ego, &early), None);
        let mut sync = car(30.0, -30.0, 0.0, 10.0);
        sync.heading = FRAC_PI_2;
        assert!((ttc_pair(&ego, &sync).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dto_geometry() {
        let ego = Body {
            half_length: 2.0,
            ..car(0.0, 0.0, 0.0, 0.0)
        };
        let cone = Body {
            position: Vec2::new(13.0, 0.0),
            half_length: 1.0,
            half_width: 1.0,
            ..ego
        };
        assert!((dto_pair(&ego, &cone) - 10.0).abs() < 1e-12);
        let touching = Body {
            position: Vec2::new(3.0, 0.0),
            ..cone
        };
        assert_eq!(dto_pair(&ego, &touching), 0.0);
    }

    #[test]
    fn jerk_examples() {
        let h = [(0.0, -2.22), (0.5, 1.73)];
        assert!((jerk_now(&h).unwrap() - 7.9).abs() < 1e-12);
        assert_eq!(jerk_now(&[(0.0, 3.0), (0.5, -6.0)]), Some(18.0));
        assert_eq!(jerk_now(&[(0.0, 1.0), (0.5, 1.0)]), Some(0.0));
        assert_eq!(jerk_now(&[(0.5, 1.0)]), None);
    }

    #[test]
    fn summaries_skip_missing_ttc() {
        let mut b = MetricBuffers::default();
        for (t, d, j) in [(None, 40.0, 1.0), (Some(4.0), 12.0, 0.5), (Some(6.0), 20.0, 3.0)] {
            b.push(MetricSample { ttc: t, dto: d, jerk: j });
        }
        assert_eq!(b.min_ttc(), Some(4.0));
        assert_eq!(b.min_dto(), Some(12.0));
        assert_eq!(b.max_jerk(), Some(3.0));
    }

    proptest::proptest! {
        #[test]
        fn dto_is_symmetric(ax in -50.0..50.0f64, ay in -50.0..50.0f64, ah in -3.0..3.0f64,
                            bx in -50.0..50.0f64, by in -50.0..50.0f64, bh in -3.0..3.0f64) {
            let a = Body { heading: ah, ..car(ax, ay, 0.0, 0.0) };
            let b = Body { heading: bh, half_length: 0.3, half_width: 0.3, ..car(bx, by, 0.0, 0.0) };
            proptest::prop_assert!((dto_pair(&a, &b) - dto_pair(&b, &a)).abs() < 1e-9);
        }

        #[test]
        fn doubling_accel_step_doubles_jerk(a in -6.0..3.0f64, b in -6.0..3.0f64) {
            let j1 = jerk_between(a, b, 0.5);
            let j2 = jerk_between(2.0 * a, 2.0 * b, 0.5);
            proptest::prop_assert_eq!(j2, 2.0 * j1);
        }
    }
}
