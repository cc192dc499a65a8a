//! Environment-configuration action space, realism constraints and application.

use crate::error::{Error, Result};
use crate::geometry::Obb;
use crate::world::{
    Entity, LightColor, Motion, NpcBehavior, NpcType, PedestrianBehavior,
    PendingLaneChange, VehicleColor, WorldState,
};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::OnceLock;

pub const SPAWN_DISTANCES: [f64; 3] = [10.0, 20.0, 35.0];
pub const DAMAGE_LEVELS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
/// Minimum center distance between a new object and anything else.
pub const SAFE_DISTANCE_M: f64 = 8.0;
pub const SAFE_DISTANCE_LARGE_M: f64 = 10.0;
/// Arc-length lookahead of the segment targeted by road damage.
pub const DAMAGE_LOOKAHEAD_M: f64 = 50.0;
/// Forcing a light is legal only this close to its natural phase end.
pub const PHASE_BOUNDARY_S: f64 = 3.0;
/// Delay before a lane-switching NPC starts moving over.
const CUT_IN_DELAY_S: f64 = 1.0;
/// Pedestrians start this far outside the road edge.
const CURB_OFFSET_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    AheadSame,
    AheadLeft,
    AheadRight,
    Behind,
    Oncoming,
}

impl Slot {
    pub const ALL: [Slot; 5] = [
        Slot::AheadSame,
        Slot::AheadLeft,
        Slot::AheadRight,
        Slot::Behind,
        Slot::Oncoming,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    NoOp,
    SpawnNpc,
    SpawnPedestrian,
    PlaceCone,
    SetLightPhase,
    SetRoadDamage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ActionParams {
    NoOp,
    SpawnNpc {
        npc_type: NpcType,
        behavior: NpcBehavior,
        slot: Slot,
        distance: f64,
    },
    SpawnPedestrian {
        side: Side,
        behavior: PedestrianBehavior,
        distance: f64,
    },
    PlaceCone {
        distance: f64,
    },
    SetLightPhase {
        target: LightColor,
    },
    SetRoadDamage {
        level: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvAction {
    pub id: usize,
    pub params: ActionParams,
}

impl EnvAction {
    pub fn kind(&self) -> ActionKind {
        match self.params {
            ActionParams::NoOp => ActionKind::NoOp,
            ActionParams::SpawnNpc { .. } => ActionKind::SpawnNpc,
            ActionParams::SpawnPedestrian { .. } => ActionKind::SpawnPedestrian,
            ActionParams::PlaceCone { .. } => ActionKind::PlaceCone,
            ActionParams::SetLightPhase { .. } => ActionKind::SetLightPhase,
            ActionParams::SetRoadDamage { .. } => ActionKind::SetRoadDamage,
        }
    }

    pub fn params_text(&self) -> String {
        match self.params {
            ActionParams::NoOp => "-".to_string(),
            ActionParams::SpawnNpc {
                npc_type,
                behavior,
                slot,
                distance,
            } => format!("type={npc_type:?},behavior={behavior:?},slot={slot:?},distance={distance}"),
            ActionParams::SpawnPedestrian {
                side,
                behavior,
                distance,
            } => format!("side={side:?},behavior={behavior:?},distance={distance}"),
            ActionParams::PlaceCone { distance } => format!("distance={distance}"),
            ActionParams::SetLightPhase { target } => format!("target={target:?}"),
            ActionParams::SetRoadDamage { level } => format!("level={level}"),
        }
    }
}

impl fmt::Display for EnvAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{:?}\t{}", self.id, self.kind(), self.params_text())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintRule {
    SafeDistance,
    LightOrder,
    RoadOccupied,
    Overlap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintViolation {
    pub rule: ConstraintRule,
    pub detail: String,
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.rule, self.detail)
    }
}

fn violation(rule: ConstraintRule, detail: impl Into<String>) -> ConstraintViolation {
    ConstraintViolation {
        rule,
        detail: detail.into(),
    }
}

fn build_registry() -> Vec<EnvAction> {
    let mut params = vec![ActionParams::NoOp];
    for npc_type in [NpcType::Sedan, NpcType::BoxTruck] {
        for slot in Slot::ALL {
            let behavior = match slot {
                Slot::AheadLeft => NpcBehavior::LeftLaneDriving,
                Slot::AheadRight => NpcBehavior::RightLaneDriving,
                _ => NpcBehavior::CurrentLaneDriving,
            };
            for distance in SPAWN_DISTANCES {
                params.push(ActionParams::SpawnNpc {
                    npc_type,
                    behavior,
                    slot,
                    distance,
                });
            }
        }
    }
    for distance in SPAWN_DISTANCES {
        params.push(ActionParams::SpawnNpc {
            npc_type: NpcType::Sedan,
            behavior: NpcBehavior::Stop,
            slot: Slot::AheadSame,
            distance,
        });
    }
    for slot in [Slot::AheadLeft, Slot::AheadRight] {
        for distance in SPAWN_DISTANCES {
            params.push(ActionParams::SpawnNpc {
                npc_type: NpcType::Sedan,
                behavior: NpcBehavior::SwitchLane,
                slot,
                distance,
            });
        }
    }
    for side in [Side::Left, Side::Right] {
        for behavior in [PedestrianBehavior::CrossRoad, PedestrianBehavior::FrontLaneWalk] {
            for distance in SPAWN_DISTANCES {
                params.push(ActionParams::SpawnPedestrian {
                    side,
                    behavior,
                    distance,
                });
            }
        }
    }
    for distance in SPAWN_DISTANCES {
        params.push(ActionParams::PlaceCone { distance });
    }
    for target in [LightColor::Red, LightColor::Green, LightColor::Yellow] {
        params.push(ActionParams::SetLightPhase { target });
    }
    for level in DAMAGE_LEVELS {
        params.push(ActionParams::SetRoadDamage { level });
    }
    params
        .into_iter()
        .enumerate()
        .map(|(id, params)| EnvAction { id, params })
        .collect()
}

/// The default registry, in stable id order.
pub fn list_actions() -> &'static [EnvAction] {
    static REGISTRY: OnceLock<Vec<EnvAction>> = OnceLock::new();
    REGISTRY.get_or_init(build_registry)
}

pub fn action(id: usize) -> Result<&'static EnvAction> {
    list_actions().get(id).ok_or(Error::UnknownAction(id))
}

/// Tab-separated dump, one action per line.
pub fn registry_dump(actions: &[EnvAction]) -> String {
    actions.iter().map(|a| format!("{a}\n")).collect()
}

/// Entity a spawn action would create, before the distance checks. Slots
/// beside the ego that fall off the road are rejected.
fn spawn_candidate(world: &mut WorldState, params: &ActionParams) -> std::result::Result<Entity, ConstraintViolation> {
    let route = world.route.clone();
    let ego = world.ego().clone();
    let lanes = route.lane_count as i64;
    let ego_lane = route.lane_of(ego.d) as i64;
    let lane_d = |lane: i64| route.lane_center(lane as usize);
    match *params {
        ActionParams::SpawnNpc {
            npc_type,
            behavior,
            slot,
            distance,
        } => {
            let (s, lane, motion) = match slot {
                Slot::AheadSame => (ego.s + distance, ego_lane, Motion::Along),
                Slot::AheadLeft => (ego.s + distance, ego_lane - 1, Motion::Along),
                Slot::AheadRight => (ego.s + distance, ego_lane + 1, Motion::Along),
                Slot::Behind => (ego.s - distance, ego_lane, Motion::Along),
                Slot::Oncoming => (ego.s + distance, -1, Motion::Against),
            };
            if !(-1..lanes).contains(&lane) || (lane == -1 && slot != Slot::Oncoming) {
                return Err(violation(
                    ConstraintRule::RoadOccupied,
                    format!("no lane {lane} beside the ego"),
                ));
            }
            // Oncoming traffic uses the opposing lane next to lane 0.
            let lane_d = |lane: i64| {
                if lane < 0 {
                    route.lane_center(0) + route.lane_width
                } else {
                    route.lane_center(lane as usize)
                }
            };
            let jitter = world.rng.range(-1.0, 1.0);
            let color = VehicleColor::ALL[world.rng.below(VehicleColor::ALL.len())];
            let cruise = npc_type.cruise_speed() + jitter;
            let (speed, target) = match (behavior, slot) {
                (NpcBehavior::Stop, _) => (0.0, 0.0),
                (_, Slot::Behind) => (ego.speed, world.params.target_speed + 1.0 + jitter),
                _ => (cruise, cruise),
            };
            let id = world.alloc_id();
            let mut e = Entity::npc(id, npc_type, behavior, color, s, lane_d(lane), motion, speed, target);
            if behavior == NpcBehavior::SwitchLane {
                e.pending_lane_change = Some(PendingLaneChange {
                    delay: CUT_IN_DELAY_S,
                    to_d: lane_d(ego_lane),
                });
            }
            Ok(e)
        }
        ActionParams::SpawnPedestrian {
            side,
            behavior,
            distance,
        } => {
            let sign = match side {
                Side::Left => 1.0,
                Side::Right => -1.0,
            };
            let (d, motion) = match behavior {
                PedestrianBehavior::FrontLaneWalk => {
                    let lane = if sign > 0.0 { 0 } else { lanes - 1 };
                    (lane_d(lane), Motion::Against)
                }
                PedestrianBehavior::CrossRoad => (
                    sign * (route.half_road_width() + CURB_OFFSET_M),
                    if sign > 0.0 {
                        Motion::CrossRight
                    } else {
                        Motion::CrossLeft
                    },
                ),
                PedestrianBehavior::Stop => (sign * (route.half_road_width() + CURB_OFFSET_M), Motion::Along),
            };
            let id = world.alloc_id();
            Ok(Entity::pedestrian(id, behavior, ego.s + distance, d, motion))
        }
        ActionParams::PlaceCone { distance } => {
            let id = world.alloc_id();
            Ok(Entity::cone(id, ego.s + distance, lane_d(ego_lane)))
        }
        _ => unreachable!("not a spawn action"),
    }
}

fn required_distance(e: &Entity) -> f64 {
    match e.npc_type {
        Some(t) if t.is_large() => SAFE_DISTANCE_LARGE_M,
        _ => SAFE_DISTANCE_M,
    }
}

/// Checks a candidate object against everything already in the world.
fn check_spawn(world: &WorldState, e: &Entity) -> std::result::Result<(), ConstraintViolation> {
    let bbox: Obb = e.obb();
    for o in &world.entities {
        let area = bbox.overlap_area(&o.obb());
        if area > 0.0 {
            return Err(violation(
                ConstraintRule::Overlap,
                format!("new object overlaps entity {} by {area:.3} m²", o.id),
            ));
        }
    }
    let required = required_distance(e);
    for o in &world.entities {
        let dist = (o.pose.position() - e.pose.position()).norm();
        if dist < required {
            return Err(violation(
                ConstraintRule::SafeDistance,
                format!("new object {dist:.2} m from entity {} (< {required} m)", o.id),
            ));
        }
    }
    Ok(())
}

/// Index of the nearest light whose stop line is ahead of the ego's front.
pub fn light_ahead(world: &WorldState) -> Option<usize> {
    let ego = world.ego();
    let front = ego.s + ego.length / 2.0;
    world
        .lights
        .iter()
        .enumerate()
        .filter(|(_, l)| l.s >= front)
        .min_by(|a, b| a.1.s.total_cmp(&b.1.s))
        .map(|(i, _)| i)
}

/// Road segment targeted by the damage action and whether the ego is on it.
pub fn damage_target(world: &WorldState) -> (usize, bool) {
    let ego = world.ego();
    let idx = world.route.segment_index(ego.s + DAMAGE_LOOKAHEAD_M);
    let seg = &world.road[idx];
    let occupied = ego.s + ego.length / 2.0 >= seg.start_s && ego.s - ego.length / 2.0 < seg.end_s;
    (idx, occupied)
}

/// Realizes the action in place or reports the first violated rule, in the
/// order Overlap, SafeDistance, LightOrder, RoadOccupied. The world may be
/// partially modified on error; callers work on a copy.
fn realize(world: &mut WorldState, a: &EnvAction) -> std::result::Result<Option<SpawnRecord>, ConstraintViolation> {
    match a.params {
        ActionParams::NoOp => Ok(None),
        ActionParams::SpawnNpc { .. } | ActionParams::SpawnPedestrian { .. } | ActionParams::PlaceCone { .. } => {
            let mut e = spawn_candidate(world, &a.params)?;
            e.refresh(&world.route);
            check_spawn(world, &e)?;
            let record = spawn_record(world, &e);
            world.entities.push(e);
            Ok(Some(record))
        }
        ActionParams::SetLightPhase { target } => {
            let Some(idx) = light_ahead(world) else {
                return Err(violation(ConstraintRule::LightOrder, "no traffic light ahead"));
            };
            let light = &world.lights[idx];
            if target != light.color.next() {
                return Err(violation(
                    ConstraintRule::LightOrder,
                    format!("{:?} cannot follow {:?}", target, light.color),
                ));
            }
            if light.remaining_s() > PHASE_BOUNDARY_S {
                return Err(violation(
                    ConstraintRule::LightOrder,
                    format!("{:.1} s left in the {:?} phase", light.remaining_s(), light.color),
                ));
            }
            world.lights[idx].force_next();
            Ok(None)
        }
        ActionParams::SetRoadDamage { level } => {
            let (idx, occupied) = damage_target(world);
            if occupied {
                return Err(violation(
                    ConstraintRule::RoadOccupied,
                    format!("ego is on segment {idx}"),
                ));
            }
            world.road[idx].damage_level = level;
            Ok(None)
        }
    }
}

/// Realism facts about an accepted spawn, kept for logging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnRecord {
    pub entity_id: u32,
    pub min_distance: f64,
    pub required: f64,
    pub overlap: f64,
}

fn spawn_record(world: &WorldState, e: &Entity) -> SpawnRecord {
    let bbox = e.obb();
    let mut min_distance = f64::INFINITY;
    let mut overlap = 0.0;
    for o in &world.entities {
        min_distance = min_distance.min((o.pose.position() - e.pose.position()).norm());
        overlap += bbox.overlap_area(&o.obb());
    }
    SpawnRecord {
        entity_id: e.id,
        min_distance,
        required: required_distance(e),
        overlap,
    }
}

pub fn validate(world: &WorldState, a: &EnvAction) -> std::result::Result<(), ConstraintViolation> {
    let mut probe = world.clone();
    realize(&mut probe, a).map(|_| ())
}

/// Applies a validated action; rejected actions leave the world untouched.
pub fn apply(world: &mut WorldState, a: &EnvAction) -> Result<Option<SpawnRecord>> {
    let mut next = world.clone();
    match realize(&mut next, a) {
        Ok(rec) => {
            *world = next;
            Ok(rec)
        }
        Err(v) => Err(Error::Rejected(v)),
    }
}

/// Ids of actions valid in `world`, in registry order.
pub fn valid_actions(world: &WorldState, actions: &[EnvAction]) -> Vec<usize> {
    actions
        .iter()
        .filter(|a| validate(world, a).is_ok())
        .map(|a| a.id)
        .collect()
}

/// Checks the realism rules on a whole world: spawned objects keep their
/// distances, nothing overlaps, lights are in a legal phase. Returns the
/// first offending rule.
pub fn check_world(world: &WorldState) -> std::result::Result<(), ConstraintViolation> {
    for l in &world.lights {
        if l.active_duration_s != l.color.duration_s() || !(0.0..=l.active_duration_s).contains(&l.elapsed_s) {
            return Err(violation(ConstraintRule::LightOrder, format!("light {} out of phase", l.id)));
        }
    }
    for (i, a) in world.entities.iter().enumerate() {
        for b in &world.entities[i + 1..] {
            if a.obb().overlap_area(&b.obb()) > 0.0 {
                return Err(violation(ConstraintRule::Overlap, format!("{} overlaps {}", a.id, b.id)));
            }
        }
    }
    for l in &world.road {
        if !(0.0..=1.0).contains(&l.damage_level) {
            return Err(violation(ConstraintRule::RoadOccupied, format!("segment {} damage", l.id)));
        }
    }
    Ok(())
}

/// Whether `e` was placed with at least its required clearance from every other entity.
pub fn has_clearance(world: &WorldState, e: &Entity) -> bool {
    let required = required_distance(e);
    world
        .entities
        .iter()
        .filter(|o| o.id != e.id)
        .all(|o| (o.pose.position() - e.pose.position()).norm() >= required)
}
