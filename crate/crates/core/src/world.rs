//! Deterministic 2D kinematic driving world.

use crate::autopilot::{self, AutopilotParams, Operation};
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Obb, Vec2};
use crate::rng::SimRng;
use crate::route::{RoadSegment, Route};
use crate::weather::{weather_at, WeatherState, WeatherTrace};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// Physics tick.
pub const DT: f64 = 0.1;
/// Ego accel history kept for jerk, in ticks.
const ACCEL_HISTORY_LEN: usize = 64;
/// Lateral blend duration for lane changes.
pub const LANE_CHANGE_S: f64 = 2.0;
/// Gap a walking pedestrian keeps from vehicle bodies.
const PEDESTRIAN_CLEARANCE_M: f64 = 0.3;
pub const PEDESTRIAN_SPEED: f64 = 1.4;
/// Entities further behind the ego than this are removed.
const DESPAWN_BEHIND_M: f64 = 60.0;
const NPC_MAX_BRAKE: f64 = 4.0;
const NPC_ACCEL: f64 = 1.5;
/// Braking lost on fully damaged road.
pub const DAMAGE_BRAKE_LOSS: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LightColor {
    Red,
    Green,
    Yellow,
}

impl LightColor {
    pub fn duration_s(self) -> f64 {
        match self {
            LightColor::Red => 24.0,
            LightColor::Green => 30.0,
            LightColor::Yellow => 6.0,
        }
    }

    pub fn next(self) -> LightColor {
        match self {
            LightColor::Red => LightColor::Green,
            LightColor::Green => LightColor::Yellow,
            LightColor::Yellow => LightColor::Red,
        }
    }
}

impl fmt::Display for LightColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for LightColor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "red" => Ok(LightColor::Red),
            "green" => Ok(LightColor::Green),
            "yellow" => Ok(LightColor::Yellow),
            _ => Err(Error::Config(format!("unknown light color `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    Ego,
    NpcVehicle,
    Pedestrian,
    TrafficCone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NpcType {
    Sedan,
    Suv,
    Jeep,
    Hatchback,
    SchoolBus,
    BoxTruck,
}

impl NpcType {
    pub const ALL: [NpcType; 6] = [
        NpcType::Sedan,
        NpcType::Suv,
        NpcType::Jeep,
        NpcType::Hatchback,
        NpcType::SchoolBus,
        NpcType::BoxTruck,
    ];

    /// Footprint as (length, width).
    pub fn dims(self) -> (f64, f64) {
        if self.is_large() {
            (10.0, 2.5)
        } else {
            (4.6, 1.9)
        }
    }

    pub fn height(self) -> f64 {
        match self {
            NpcType::Sedan => 1.4,
            NpcType::Suv | NpcType::Jeep => 1.8,
            NpcType::Hatchback => 1.1,
            NpcType::SchoolBus | NpcType::BoxTruck => 3.0,
        }
    }

    pub fn is_large(self) -> bool {
        matches!(self, NpcType::SchoolBus | NpcType::BoxTruck)
    }

    pub fn cruise_speed(self) -> f64 {
        if self.is_large() {
            7.0
        } else {
            9.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NpcBehavior {
    Stop,
    SwitchLane,
    LeftLaneDriving,
    RightLaneDriving,
    CurrentLaneDriving,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PedestrianBehavior {
    Stop,
    CrossRoad,
    FrontLaneWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Behavior {
    None,
    Npc(NpcBehavior),
    Pedestrian(PedestrianBehavior),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VehicleColor {
    White,
    Black,
    Red,
    Blue,
    Silver,
}

impl VehicleColor {
    pub const ALL: [VehicleColor; 5] = [
        VehicleColor::White,
        VehicleColor::Black,
        VehicleColor::Red,
        VehicleColor::Blue,
        VehicleColor::Silver,
    ];
}

/// Direction of travel relative to the route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Motion {
    Along,
    Against,
    CrossLeft,
    CrossRight,
}

impl Motion {
    pub fn lon(self) -> f64 {
        match self {
            Motion::Along => 1.0,
            Motion::Against => -1.0,
            _ => 0.0,
        }
    }

    pub fn lat(self) -> f64 {
        match self {
            Motion::CrossLeft => 1.0,
            Motion::CrossRight => -1.0,
            _ => 0.0,
        }
    }

    fn angle(self) -> f64 {
        match self {
            Motion::Along => 0.0,
            Motion::Against => PI,
            Motion::CrossLeft => FRAC_PI_2,
            Motion::CrossRight => -FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneChange {
    pub from_d: f64,
    pub to_d: f64,
    pub elapsed: f64,
}

/// Scheduled lane change: starts after `delay` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendingLaneChange {
    pub delay: f64,
    pub to_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: u32,
    pub kind: EntityKind,
    pub pose: Pose,
    pub velocity: Vec2,
    pub speed: f64,
    pub accel: f64,
    pub length: f64,
    pub width: f64,
    pub npc_type: Option<NpcType>,
    pub behavior: Behavior,
    pub color: Option<VehicleColor>,
    /// Arc length along the route.
    pub s: f64,
    /// Lateral offset, positive to the left of the centerline.
    pub d: f64,
    pub motion: Motion,
    pub target_speed: f64,
    pub lateral_rate: f64,
    pub lane_change: Option<LaneChange>,
    pub pending_lane_change: Option<PendingLaneChange>,
}

impl Entity {
    fn base(id: u32, kind: EntityKind, (length, width): (f64, f64), s: f64, d: f64) -> Self {
        Entity {
            id,
            kind,
            pose: Pose::default(),
            velocity: Vec2::ZERO,
            speed: 0.0,
            accel: 0.0,
            length,
            width,
            npc_type: None,
            behavior: Behavior::None,
            color: None,
            s,
            d,
            motion: Motion::Along,
            target_speed: 0.0,
            lateral_rate: 0.0,
            lane_change: None,
            pending_lane_change: None,
        }
    }

    pub fn ego(id: u32, s: f64, d: f64, speed: f64) -> Self {
        Entity {
            speed,
            ..Entity::base(id, EntityKind::Ego, (4.6, 1.9), s, d)
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn npc(
        id: u32,
        npc_type: NpcType,
        behavior: NpcBehavior,
        color: VehicleColor,
        s: f64,
        d: f64,
        motion: Motion,
        speed: f64,
        target_speed: f64,
    ) -> Self {
        Entity {
            npc_type: Some(npc_type),
            behavior: Behavior::Npc(behavior),
            color: Some(color),
            motion,
            speed,
            target_speed,
            ..Entity::base(id, EntityKind::NpcVehicle, npc_type.dims(), s, d)
        }
    }

    pub fn pedestrian(id: u32, behavior: PedestrianBehavior, s: f64, d: f64, motion: Motion) -> Self {
        let speed = if behavior == PedestrianBehavior::Stop {
            0.0
        } else {
            PEDESTRIAN_SPEED
        };
        Entity {
            behavior: Behavior::Pedestrian(behavior),
            motion,
            speed,
            target_speed: speed,
            ..Entity::base(id, EntityKind::Pedestrian, (0.6, 0.6), s, d)
        }
    }

    pub fn cone(id: u32, s: f64, d: f64) -> Self {
        Entity::base(id, EntityKind::TrafficCone, (0.4, 0.4), s, d)
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self.kind, EntityKind::NpcVehicle | EntityKind::Pedestrian)
    }

    /// Nominal height used for volume buckets.
    pub fn height(&self) -> f64 {
        match self.kind {
            EntityKind::Ego => 1.4,
            EntityKind::NpcVehicle => self.npc_type.map_or(1.4, NpcType::height),
            EntityKind::Pedestrian => 1.7,
            EntityKind::TrafficCone => 0.7,
        }
    }

    pub fn volume(&self) -> f64 {
        self.length * self.width * self.height()
    }

    pub fn obb(&self) -> Obb {
        Obb {
            center: self.pose.position(),
            heading: self.pose.heading,
            half_length: self.length / 2.0,
            half_width: self.width / 2.0,
        }
    }

    /// Recomputes pose and world velocity from route coordinates.
    pub fn refresh(&mut self, route: &Route) {
        let p = route.to_world(self.s, self.d);
        let h = route.heading_at(self.s);
        let tangent = Vec2::from_angle(h);
        let v_s = self.speed * self.motion.lon();
        let v_d = self.speed * self.motion.lat() + self.lateral_rate;
        self.velocity = tangent * v_s + tangent.perp() * v_d;
        let slope = if self.motion.lon() != 0.0 && self.speed > 0.0 {
            (self.lateral_rate * self.motion.lon()).atan2(self.speed)
        } else {
            0.0
        };
        self.pose = Pose::new(p.x, p.y, h + self.motion.angle() + slope);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficLight {
    pub id: u32,
    pub pose: Pose,
    /// Stop-line arc length.
    pub s: f64,
    pub color: LightColor,
    pub active_duration_s: f64,
    pub elapsed_s: f64,
}

impl TrafficLight {
    pub fn remaining_s(&self) -> f64 {
        self.active_duration_s - self.elapsed_s
    }

    fn advance(&mut self, dt: f64) {
        self.elapsed_s += dt;
        while self.elapsed_s > self.active_duration_s {
            self.elapsed_s -= self.active_duration_s;
            self.color = self.color.next();
            self.active_duration_s = self.color.duration_s();
        }
    }

    /// Switches to the next color with a fresh phase.
    pub fn force_next(&mut self) {
        self.color = self.color.next();
        self.active_duration_s = self.color.duration_s();
        self.elapsed_s = 0.0;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub sim_time_s: f64,
    /// Mapped real-world unix timestamp.
    pub wall_time_ts: f64,
    pub route: Arc<Route>,
    pub road: Vec<RoadSegment>,
    pub ego_id: u32,
    pub entities: Vec<Entity>,
    pub lights: Vec<TrafficLight>,
    pub weather: WeatherState,
    pub trace: Arc<WeatherTrace>,
    pub rng: SimRng,
    pub ego_route_progress: f64,
    pub accel_history: VecDeque<(f64, f64)>,
    pub ego_operation: Operation,
    pub stuck_time_s: f64,
    pub next_id: u32,
    pub params: AutopilotParams,
}

impl WorldState {
    /// Fresh world with the ego at the start of the middle lane.
    pub fn new(
        route: Arc<Route>,
        trace: Arc<WeatherTrace>,
        params: AutopilotParams,
        seed: u64,
        ego_speed: f64,
    ) -> Self {
        let ego_d = route.lane_center(route.lane_count / 2);
        let mut ego = Entity::ego(0, 10.0, ego_d, ego_speed);
        ego.refresh(&route);
        let lights = route
            .lights
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let p = route.to_world(spec.arclen, route.half_road_width() + 1.0);
                TrafficLight {
                    id: i as u32,
                    pose: Pose::new(p.x, p.y, route.heading_at(spec.arclen)),
                    s: spec.arclen,
                    color: spec.initial,
                    active_duration_s: spec.initial.duration_s(),
                    elapsed_s: 0.0,
                }
            })
            .collect();
        let weather = weather_at(&trace, 0.0).unwrap_or_default();
        let mut accel_history = VecDeque::with_capacity(ACCEL_HISTORY_LEN);
        accel_history.push_back((0.0, 0.0));
        WorldState {
            sim_time_s: 0.0,
            wall_time_ts: trace.mapped_timestamp(0.0),
            road: route.segments(),
            route,
            ego_id: 0,
            entities: vec![ego],
            lights,
            weather,
            trace,
            rng: SimRng::seed_from(seed),
            ego_route_progress: 10.0,
            accel_history,
            ego_operation: Operation::Cruise,
            stuck_time_s: 0.0,
            next_id: 1,
            params,
        }
    }

    pub fn ego(&self) -> &Entity {
        self.entities
            .iter()
            .find(|e| e.id == self.ego_id)
            .expect("ego present")
    }

    pub fn ego_mut(&mut self) -> &mut Entity {
        let idx = self.ego_index();
        &mut self.entities[idx]
    }

    fn ego_index(&self) -> usize {
        self.entities
            .iter()
            .position(|e| e.id == self.ego_id)
            .expect("ego present")
    }

    pub fn entity(&self, id: u32) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn others(&self) -> impl Iterator<Item = &Entity> {
        let ego = self.ego_id;
        self.entities.iter().filter(move |e| e.id != ego)
    }

    pub fn damage_at(&self, s: f64) -> f64 {
        self.road[self.route.segment_index(s)].damage_level
    }

    pub fn alloc_id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Inserts an entity, recomputing its pose from route coordinates.
    pub fn insert(&mut self, mut e: Entity) {
        e.refresh(&self.route);
        self.entities.push(e);
    }

    /// Advances the world by one tick of `dt` seconds (nominally [`DT`]).
    pub fn step(&mut self, dt: f64) {
        let (op, ego_cmd) = autopilot::drive(self);
        self.ego_operation = op;

        let mut commands: Vec<f64> = Vec::with_capacity(self.entities.len());
        for e in &self.entities {
            let cmd = match e.kind {
                EntityKind::Ego => ego_cmd,
                EntityKind::NpcVehicle => self.npc_command(e),
                _ => 0.0,
            };
            commands.push(cmd);
        }

        let ego_idx = self.ego_index();
        if let Some(dir) = op.lane_direction() {
            let route = &self.route;
            let ego = &mut self.entities[ego_idx];
            if ego.lane_change.is_none() {
                let lane = route.lane_of(ego.d);
                let target = lane as i64 - dir;
                if (0..route.lane_count as i64).contains(&target) {
                    ego.lane_change = Some(LaneChange {
                        from_d: ego.d,
                        to_d: route.lane_center(target as usize),
                        elapsed: 0.0,
                    });
                }
            }
        }

        let damage: Vec<f64> = self.entities.iter().map(|e| self.damage_at(e.s)).collect();
        let holds: Vec<Option<Option<f64>>> = self
            .entities
            .iter()
            .map(|e| self.pedestrian_blocked(e, dt).then(|| self.sidestep(e, dt)))
            .collect();
        let route = Arc::clone(&self.route);
        for (((e, cmd), dmg), hold) in self.entities.iter_mut().zip(commands).zip(damage).zip(holds) {
            match hold {
                None => integrate(e, cmd, dmg, dt, &route),
                Some(None) => e.velocity = Vec2::ZERO,
                Some(Some(d)) => {
                    e.d = d;
                    e.refresh(&route);
                    e.velocity = Vec2::ZERO;
                }
            }
        }
        self.advance_pedestrians(&route);

        for light in &mut self.lights {
            light.advance(dt);
        }
        self.sim_time_s += dt;
        self.wall_time_ts = self.trace.mapped_timestamp(self.sim_time_s);
        let (first, last) = self.trace.span();
        let clamped = self.wall_time_ts.clamp(first as f64, last as f64);
        let t_in_span = (clamped - self.trace.anchor_ts as f64) / self.trace.time_scale;
        if let Ok(w) = weather_at(&self.trace, t_in_span) {
            self.weather = w;
        }

        let ego = self.ego().clone();
        if self.accel_history.len() == ACCEL_HISTORY_LEN {
            self.accel_history.pop_front();
        }
        self.accel_history.push_back((self.sim_time_s, ego.accel));
        self.ego_route_progress = ego.s;
        if ego.speed < 0.1 {
            self.stuck_time_s += dt;
        } else {
            self.stuck_time_s = 0.0;
        }
        let len = self.route.length();
        self.entities.retain(|e| {
            e.kind == EntityKind::Ego
                || (e.s - ego.s > -DESPAWN_BEHIND_M && e.s > -DESPAWN_BEHIND_M && e.s < len + DESPAWN_BEHIND_M)
        });
    }

    /// A walking pedestrian waits rather than step into a vehicle's body.
    fn pedestrian_blocked(&self, e: &Entity, dt: f64) -> bool {
        if e.kind != EntityKind::Pedestrian || e.speed <= 0.0 {
            return false;
        }
        let mut next = e.clone();
        next.s += e.speed * e.motion.lon() * dt;
        next.d += e.speed * e.motion.lat() * dt;
        next.refresh(&self.route);
        let mut probe = next.obb();
        probe.half_length += PEDESTRIAN_CLEARANCE_M;
        probe.half_width += PEDESTRIAN_CLEARANCE_M;
        self.entities
            .iter()
            .filter(|o| matches!(o.kind, EntityKind::Ego | EntityKind::NpcVehicle))
            .any(|o| probe.intersects(&o.obb()))
    }

    /// Lateral offset after a blocked lane walker steps toward its road
    /// edge, if that step is clear. Crossing pedestrians just wait.
    fn sidestep(&self, e: &Entity, dt: f64) -> Option<f64> {
        if e.behavior != Behavior::Pedestrian(PedestrianBehavior::FrontLaneWalk) {
            return None;
        }
        let mut next = e.clone();
        next.d += e.d.signum() * e.speed * dt;
        next.refresh(&self.route);
        let mut probe = next.obb();
        probe.half_length += PEDESTRIAN_CLEARANCE_M;
        probe.half_width += PEDESTRIAN_CLEARANCE_M;
        let clear = !self
            .entities
            .iter()
            .filter(|o| matches!(o.kind, EntityKind::Ego | EntityKind::NpcVehicle))
            .any(|o| probe.intersects(&o.obb()));
        clear.then_some(next.d)
    }

    fn advance_pedestrians(&mut self, route: &Route) {
        let edge = route.half_road_width() + 1.0;
        for e in &mut self.entities {
            if e.behavior == Behavior::Pedestrian(PedestrianBehavior::CrossRoad) && e.d * e.motion.lat() > edge {
                e.behavior = Behavior::Pedestrian(PedestrianBehavior::Stop);
                e.speed = 0.0;
                e.target_speed = 0.0;
                e.refresh(route);
            }
        }
    }

    /// Car-following command for an NPC vehicle.
    fn npc_command(&self, e: &Entity) -> f64 {
        if e.behavior == Behavior::Npc(NpcBehavior::Stop) {
            return if e.speed > 0.0 { -NPC_MAX_BRAKE } else { 0.0 };
        }
        let dir = e.motion.lon();
        let mut gap = f64::INFINITY;
        for o in self.entities.iter().filter(|o| o.id != e.id) {
            let ahead = (o.s - e.s) * dir;
            let lateral = (o.d - e.d).abs();
            if ahead > 0.0 && lateral < (o.width + e.width) / 2.0 + 0.3 {
                gap = gap.min(ahead - (o.length + e.length) / 2.0);
            }
        }
        if e.motion == Motion::Along {
            for l in &self.lights {
                let ahead = l.s - (e.s + e.length / 2.0);
                let halting = match l.color {
                    LightColor::Red => true,
                    LightColor::Yellow => e.speed * e.speed / (2.0 * ahead.max(0.1)) <= 3.0,
                    LightColor::Green => false,
                };
                if halting && ahead > -0.5 {
                    gap = gap.min(ahead + 3.0);
                }
            }
        }
        let desired = 4.0 + 1.5 * e.speed;
        if gap < desired {
            if e.speed > 0.0 {
                -NPC_MAX_BRAKE
            } else {
                0.0
            }
        } else if e.speed < e.target_speed - 0.2 {
            NPC_ACCEL
        } else if e.speed > e.target_speed + 0.2 {
            -NPC_ACCEL
        } else {
            0.0
        }
    }

    /// Pairs of (ego, other) with positive bounding-box overlap.
    pub fn collision_events(&self) -> Vec<((u32, u32), f64)> {
        let ego = self.ego();
        let ego_box = ego.obb();
        self.others()
            .filter_map(|o| {
                let area = ego_box.overlap_area(&o.obb());
                (area > 0.0).then_some(((ego.id, o.id), area))
            })
            .collect()
    }

    pub fn snapshot(&self) -> Snapshot {
        let bytes = bincode::serialize(self).expect("world serializes");
        let hash = fnv1a64(&bytes);
        Snapshot { bytes, hash }
    }

    pub fn restore(snap: &Snapshot) -> Result<WorldState> {
        if fnv1a64(&snap.bytes) != snap.hash {
            return Err(Error::Decode("content hash mismatch".into()));
        }
        WorldState::from_bytes(&snap.bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<WorldState> {
        bincode::deserialize(bytes).map_err(|e| Error::Decode(e.to_string()))
    }

    /// 64-bit digest of the canonical encoding.
    pub fn world_hash(&self) -> u64 {
        fnv1a64(&bincode::serialize(self).expect("world serializes"))
    }
}

/// Advances one entity's kinematics by `dt` under a longitudinal command.
fn integrate(e: &mut Entity, cmd: f64, damage: f64, dt: f64, route: &Route) {
    if e.kind == EntityKind::TrafficCone {
        return;
    }
    e.s += e.speed * e.motion.lon() * dt;
    let mut d = e.d + e.speed * e.motion.lat() * dt;

    if let Some(p) = e.pending_lane_change.as_mut() {
        p.delay -= dt;
        if p.delay <= 0.0 {
            e.lane_change = Some(LaneChange {
                from_d: e.d,
                to_d: p.to_d,
                elapsed: 0.0,
            });
            e.pending_lane_change = None;
        }
    }
    e.lateral_rate = 0.0;
    if let Some(lc) = e.lane_change.as_mut() {
        lc.elapsed += dt;
        let tau = (lc.elapsed / LANE_CHANGE_S).min(1.0);
        d = lc.from_d + (lc.to_d - lc.from_d) * tau * tau * (3.0 - 2.0 * tau);
        if tau >= 1.0 {
            e.lane_change = None;
        } else {
            e.lateral_rate = (lc.to_d - lc.from_d) * 6.0 * tau * (1.0 - tau) / LANE_CHANGE_S;
        }
    }
    e.d = d;

    if e.kind != EntityKind::Pedestrian {
        let a = if cmd < 0.0 {
            cmd * (1.0 - DAMAGE_BRAKE_LOSS * damage)
        } else {
            cmd
        };
        let v = (e.speed + a * dt).max(0.0);
        e.accel = (v - e.speed) / dt;
        e.speed = v;
    }
    e.refresh(route);
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub bytes: Vec<u8>,
    pub hash: u64,
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
