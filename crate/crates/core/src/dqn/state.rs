//! Structured feature vector observed by the tester.

use crate::autopilot::sensing_range;
use crate::world::{EntityKind, LightColor, WorldState};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

pub const STATE_LEN: usize = 32;
/// Relative sectors around the ego: ahead, ahead-left, ahead-right, behind-left, behind-right.
pub const SECTORS: usize = 5;

const SPEED_SCALE: f64 = 20.0;
const ACCEL_SCALE: f64 = 8.0;
const CLOSING_SCALE: f64 = 20.0;
const COUNT_SCALE: f64 = 10.0;
const AHEAD_HALF_ANGLE: f64 = PI / 8.0;

pub type StateVector = Vec<f64>;

fn sector(bearing: f64) -> usize {
    if bearing.abs() <= AHEAD_HALF_ANGLE {
        0
    } else if bearing > 0.0 {
        if bearing <= FRAC_PI_2 {
            1
        } else {
            3
        }
    } else if bearing >= -FRAC_PI_2 {
        2
    } else {
        4
    }
}

/// Ego speed, accel and progress; per sector the nearest obstacle's distance
/// and closing speed; the nearest light ahead; weather; local hour; lane;
/// road damage; nearby counts; zero padding. Distances are fractions of the
/// current sensing range.
pub fn encode_state(world: &WorldState) -> StateVector {
    let ego = world.ego();
    let range = sensing_range(&world.weather, &world.params).max(1e-6);
    let mut v = Vec::with_capacity(STATE_LEN);
    v.push(ego.speed / SPEED_SCALE);
    v.push((ego.accel / ACCEL_SCALE).clamp(-1.0, 1.0));
    v.push((ego.s / world.route.length()).clamp(0.0, 1.0));

    let forward = crate::geometry::Vec2::from_angle(ego.pose.heading);
    let mut nearest = [(1.0, 0.0); SECTORS];
    let mut counts = [0.0; 3];
    for o in world.others() {
        let rel = o.pose.position() - ego.pose.position();
        let dist = rel.norm();
        if dist > range {
            continue;
        }
        let bearing = rel.dot(forward.perp()).atan2(rel.dot(forward));
        let k = sector(bearing);
        let frac = dist / range;
        if frac < nearest[k].0 {
            let closing = -(o.velocity - ego.velocity).dot(rel.normalized());
            nearest[k] = (frac, (closing / CLOSING_SCALE).clamp(-1.0, 1.0));
        }
        match o.kind {
            EntityKind::NpcVehicle => counts[0] += 1.0,
            EntityKind::Pedestrian => counts[1] += 1.0,
            EntityKind::TrafficCone => counts[2] += 1.0,
            EntityKind::Ego => {}
        }
    }
    for (d, c) in nearest {
        v.push(d);
        v.push(c);
    }

    let front = ego.s + ego.length / 2.0;
    let light = world
        .lights
        .iter()
        .filter(|l| l.s - front > -0.5 && l.s - front <= range)
        .min_by(|a, b| a.s.total_cmp(&b.s));
    let color = light.map(|l| l.color);
    for c in [LightColor::Green, LightColor::Yellow, LightColor::Red] {
        v.push(if color == Some(c) { 1.0 } else { 0.0 });
    }
    v.push(light.map_or(1.0, |l| ((l.s - front).max(0.0) / range).min(1.0)));

    let w = &world.weather;
    v.extend([w.cloudiness, w.rain, w.fog, w.wetness]);
    let phase = TAU * w.local_hour / 24.0;
    v.extend([phase.sin(), phase.cos()]);
    let lanes = world.route.lane_count;
    v.push(if lanes > 1 {
        world.route.lane_of(ego.d) as f64 / (lanes - 1) as f64
    } else {
        0.0
    });
    v.push(world.damage_at(ego.s));
    v.extend(counts.map(|c| (c / COUNT_SCALE).min(1.0)));
    v.resize(STATE_LEN, 0.0);
    v
}
