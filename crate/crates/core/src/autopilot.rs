//! Rule-based autopilot under test: perception, planning and control.

use crate::world::{Entity, EntityKind, LightColor, Motion, WorldState};
use crate::weather::WeatherState;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Tunable testbed physics for the autopilot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutopilotParams {
    pub target_speed: f64,
    pub base_range_m: f64,
    pub fog_coef: f64,
    pub rain_coef: f64,
    pub night_factor: f64,
    /// Dry-road maximum deceleration.
    pub max_brake: f64,
    pub wet_brake_coef: f64,
    pub max_accel: f64,
    pub speed_up_accel: f64,
    pub speed_cut_accel: f64,
    /// Comfortable deceleration used to decide when to start stopping for a light.
    pub comfort_brake: f64,
    pub red_light_margin_m: f64,
    pub blocked_range_m: f64,
    pub adjacent_clear_m: f64,
    pub green_slow_range_m: f64,
    pub sidewalk_slow_range_m: f64,
    /// Speed below which SpeedCut stops applying near intersections and sidewalks.
    pub slow_zone_speed: f64,
    pub turn_speed: f64,
}

impl Default for AutopilotParams {
    fn default() -> Self {
        AutopilotParams {
            target_speed: 12.0,
            base_range_m: 60.0,
            fog_coef: 0.6,
            rain_coef: 0.3,
            night_factor: 0.7,
            max_brake: 6.0,
            wet_brake_coef: 0.4,
            max_accel: 3.0,
            speed_up_accel: 2.5,
            speed_cut_accel: -2.0,
            comfort_brake: 2.0,
            red_light_margin_m: 15.0,
            blocked_range_m: 25.0,
            adjacent_clear_m: 15.0,
            green_slow_range_m: 30.0,
            sidewalk_slow_range_m: 20.0,
            slow_zone_speed: 6.0,
            turn_speed: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Operation {
    Stop,
    Cruise,
    SpeedUp,
    SpeedCut,
    EmergencyBrake,
    SwitchLaneToRight,
    SwitchLaneToLeft,
    TurnLeft,
    TurnRight,
}

impl Operation {
    /// Lane index step for lane switches (left lowers the index).
    pub fn lane_direction(self) -> Option<i64> {
        match self {
            Operation::SwitchLaneToLeft => Some(1),
            Operation::SwitchLaneToRight => Some(-1),
            _ => None,
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceivedEntity {
    pub id: u32,
    pub kind: EntityKind,
    /// Center-to-center distance.
    pub distance: f64,
    /// Rate at which the distance shrinks.
    pub closing_speed: f64,
    /// Route-frame offsets from the ego (along, left).
    pub longitudinal: f64,
    pub lateral: f64,
    pub length: f64,
    pub width: f64,
    pub speed: f64,
    pub motion: Motion,
}

impl PerceivedEntity {
    /// Free space between bumpers along the route.
    pub fn gap(&self, ego: &Entity) -> f64 {
        self.longitudinal.abs() - (self.length + ego.length) / 2.0
    }

    fn overlaps_lateral(&self, ego_width: f64, offset: f64) -> bool {
        (self.lateral - offset).abs() < (self.width + ego_width) / 2.0 + 0.3
    }

    /// Whether a crossing pedestrian enters the corridor at `offset` within `horizon` seconds.
    fn crosses_into(&self, ego_width: f64, offset: f64, horizon: f64) -> bool {
        if self.kind != EntityKind::Pedestrian || self.motion.lat() == 0.0 || self.speed <= 0.0 {
            return false;
        }
        let end = self.lateral + self.speed * self.motion.lat() * horizon;
        let (lo, hi) = (self.lateral.min(end), self.lateral.max(end));
        let half = (self.width + ego_width) / 2.0 + 0.3;
        lo < offset + half && hi > offset - half
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceivedLight {
    pub id: u32,
    pub color: LightColor,
    /// Distance from the ego's front bumper to the stop line.
    pub distance: f64,
    pub remaining_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perception {
    pub visible_entities: Vec<PerceivedEntity>,
    pub visible_lights: Vec<PerceivedLight>,
    pub sensing_range_m: f64,
    pub sidewalk_ahead: Option<f64>,
}

fn is_night(hour: f64) -> bool {
    !(6.0..20.0).contains(&hour)
}

pub fn sensing_range(weather: &WeatherState, p: &AutopilotParams) -> f64 {
    let night = if is_night(weather.local_hour) {
        p.night_factor
    } else {
        1.0
    };
    p.base_range_m * (1.0 - p.fog_coef * weather.fog) * (1.0 - p.rain_coef * weather.rain) * night
}

pub fn perceive(world: &WorldState) -> Perception {
    let ego = world.ego();
    let range = sensing_range(&world.weather, &world.params);
    let front = ego.s + ego.length / 2.0;
    let visible_entities = world
        .others()
        .filter_map(|o| {
            let rel = o.pose.position() - ego.pose.position();
            let distance = rel.norm();
            if distance > range {
                return None;
            }
            let dir = rel.normalized();
            let closing_speed = -(o.velocity - ego.velocity).dot(dir);
            Some(PerceivedEntity {
                id: o.id,
                kind: o.kind,
                distance,
                closing_speed,
                longitudinal: o.s - ego.s,
                lateral: o.d - ego.d,
                length: o.length,
                width: o.width,
                speed: o.speed,
                motion: o.motion,
            })
        })
        .collect();
    let visible_lights = world
        .lights
        .iter()
        .filter(|l| l.s - front > -0.5 && l.s - front <= range)
        .map(|l| PerceivedLight {
            id: l.id,
            color: l.color,
            distance: (l.s - front).max(0.0),
            remaining_s: l.remaining_s(),
        })
        .collect();
    let sidewalk_ahead = world
        .route
        .sidewalk_ahead(ego.s)
        .filter(|&d| d <= range);
    Perception {
        visible_entities,
        visible_lights,
        sensing_range_m: range,
        sidewalk_ahead,
    }
}

/// What the planner decided and, for stops, the distance available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub op: Operation,
    pub stop_distance: Option<f64>,
}

pub fn plan(p: &Perception, ego: &Entity, world: &WorldState) -> Operation {
    decide(p, ego, world).op
}

fn lateral_targets(ego: &Entity) -> Vec<f64> {
    let mut offsets = vec![0.0];
    if let Some(lc) = ego.lane_change {
        offsets.push(lc.to_d - ego.d);
    }
    offsets
}

/// Nearest in-path gap ahead of the ego, with the obstacle's speed. Crossing
/// pedestrians count once they would reach the path before the ego passes.
fn path_gap(p: &Perception, ego: &Entity, offsets: &[f64]) -> Option<(f64, f64)> {
    p.visible_entities
        .iter()
        .filter(|o| {
            let horizon = o.gap(ego).max(0.0) / ego.speed.max(1.0) + 1.0;
            o.longitudinal > 0.0
                && offsets.iter().any(|&off| {
                    o.overlaps_lateral(ego.width, off) || o.crosses_into(ego.width, off, horizon)
                })
        })
        .map(|o| (o.gap(ego), o.speed * o.motion.lon()))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

/// A target lane is clear when nothing is beside the ego within `window` and
/// nothing slower sits ahead inside `ahead_window`.
fn lane_clear(p: &Perception, ego: &Entity, offset: f64, window: f64, ahead_window: f64) -> bool {
    !p.visible_entities.iter().any(|o| {
        let slower_ahead = o.longitudinal > 0.0 && o.speed * o.motion.lon() < ego.speed;
        o.overlaps_lateral(ego.width, offset)
            && (o.gap(ego) <= window || (slower_ahead && o.gap(ego) <= ahead_window))
    })
}

/// In-path obstacles slower than this (or approaching) are stopped for.
const STATIONARY_SPEED: f64 = 0.5;
/// Free space kept in front of a standing obstacle.
const OBSTACLE_STOP_MARGIN_M: f64 = 1.0;

pub fn decide(p: &Perception, ego: &Entity, world: &WorldState) -> Decision {
    let prm = &world.params;
    let v = ego.speed;
    let decision = |op| Decision {
        op,
        stop_distance: None,
    };

    let ahead = path_gap(p, ego, &lateral_targets(ego));
    let brake = available_brake(&world.weather, prm);
    if let Some((gap, _)) = ahead {
        if gap <= v * v / (2.0 * brake) + 2.0 {
            return decision(Operation::EmergencyBrake);
        }
    }

    if let Some(light) = p
        .visible_lights
        .iter()
        .min_by(|a, b| a.distance.total_cmp(&b.distance))
    {
        let stop = match light.color {
            LightColor::Red => {
                light.distance <= v * v / (2.0 * prm.comfort_brake) + prm.red_light_margin_m
            }
            LightColor::Yellow => v * v / (2.0 * light.distance.max(0.1)) <= 3.0,
            LightColor::Green => false,
        };
        if stop {
            return Decision {
                op: Operation::Stop,
                stop_distance: Some(light.distance),
            };
        }
    }

    let route = &world.route;
    if ego.lane_change.is_none() {
        if let Some((gap, _)) = ahead {
            if gap <= prm.blocked_range_m {
                let lane = route.lane_of(ego.d);
                for (op, target) in [
                    (Operation::SwitchLaneToLeft, lane as i64 - 1),
                    (Operation::SwitchLaneToRight, lane as i64 + 1),
                ] {
                    if (0..route.lane_count as i64).contains(&target) {
                        let offset = route.lane_center(target as usize) - ego.d;
                        let ahead_window = prm.blocked_range_m + v * v / (2.0 * brake);
                        if lane_clear(p, ego, offset, prm.adjacent_clear_m, ahead_window) {
                            return decision(op);
                        }
                    }
                }
            }
        }
    }

    if let Some((gap, lead_speed)) = ahead {
        if lead_speed < STATIONARY_SPEED && gap <= v * v / (2.0 * prm.comfort_brake) + prm.red_light_margin_m {
            return Decision {
                op: Operation::Stop,
                stop_distance: Some(gap - OBSTACLE_STOP_MARGIN_M),
            };
        }
    }

    let near_green = p
        .visible_lights
        .iter()
        .any(|l| l.color == LightColor::Green && l.distance <= prm.green_slow_range_m);
    let near_sidewalk = p
        .sidewalk_ahead
        .is_some_and(|d| d <= prm.sidewalk_slow_range_m);
    let slow_leader = ahead.is_some_and(|(gap, lead_speed)| gap <= 2.0 * v + 5.0 && lead_speed < v);
    if ((near_green || near_sidewalk) && v > prm.slow_zone_speed)
        || slow_leader
        || v > prm.target_speed + 0.5
    {
        return decision(Operation::SpeedCut);
    }

    let turn = route.turn_ahead(ego.s, 15.0);
    if turn.abs() > 0.3 {
        return decision(if turn > 0.0 {
            Operation::TurnLeft
        } else {
            Operation::TurnRight
        });
    }

    if v < prm.target_speed - 0.5 {
        return decision(Operation::SpeedUp);
    }
    decision(Operation::Cruise)
}

/// Deceleration the ego can count on; wet roads reduce it. Road damage is
/// not perceived.
pub fn available_brake(weather: &WeatherState, prm: &AutopilotParams) -> f64 {
    prm.max_brake * (1.0 - prm.wet_brake_coef * weather.wetness)
}

/// Longitudinal command for an operation; braking is limited by wetness.
pub fn control(
    op: Operation,
    speed: f64,
    weather: &WeatherState,
    stop_distance: Option<f64>,
    prm: &AutopilotParams,
) -> f64 {
    let available = available_brake(weather, prm);
    let cmd = match op {
        Operation::SpeedUp => prm.speed_up_accel,
        Operation::Cruise | Operation::SwitchLaneToLeft | Operation::SwitchLaneToRight => 0.0,
        Operation::SpeedCut => prm.speed_cut_accel,
        Operation::TurnLeft | Operation::TurnRight => {
            if speed > prm.turn_speed {
                prm.speed_cut_accel
            } else {
                0.0
            }
        }
        Operation::EmergencyBrake => -available,
        Operation::Stop => {
            let needed = match stop_distance {
                Some(d) if speed > 0.0 => speed * speed / (2.0 * (d - 1.0).max(0.1)),
                Some(_) => 0.0,
                None => f64::INFINITY,
            };
            -available.min(needed)
        }
    };
    cmd.clamp(-prm.max_brake, prm.max_accel)
}

/// Full perceive-plan-control pass for the ego.
pub fn drive(world: &WorldState) -> (Operation, f64) {
    let ego = world.ego();
    let p = perceive(world);
    let d = decide(&p, ego, world);
    let cmd = control(d.op, ego.speed, &world.weather, d.stop_distance, &world.params);
    (d.op, cmd)
}
