//! Scene capture with bucketed properties.

use crate::autopilot::{self, Operation};
use crate::error::{Error, Result};
use crate::world::{
    EntityKind, LightColor, NpcBehavior, PedestrianBehavior, WorldState, Behavior,
};
use std::fmt;
use std::str::FromStr;

/// Enums with a fixed variant list and a Debug-name text form.
pub trait Named: Sized + Copy + fmt::Debug + 'static {
    const ALL: &'static [Self];

    fn name(&self) -> String {
        format!("{self:?}")
    }

    fn parse_name(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Scenario(format!("unknown value `{s}`")))
    }
}

macro_rules! bucket_enum {
    ($(#[$m:meta])* $name:ident { $($v:ident),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($v),+ }
        impl Named for $name {
            const ALL: &'static [Self] = &[$($name::$v),+];
        }
    };
}

bucket_enum!(SpeedBucket { Zero, Slow, Moderate, Fast });
bucket_enum!(LevelBucket { None, Light, Moderate, Heavy });
bucket_enum!(TimeOfDay { Morning, Noon, Night });
bucket_enum!(DistanceBucket { Zero, VeryNear, Near, Far, VeryFar });
bucket_enum!(NpcVolume { Small, Medium, Large });
bucket_enum!(PedestrianVolume { Small });
bucket_enum!(StaticVolume { Small, Medium, Large });
bucket_enum!(LightState { None, Green, Yellow, Red });
bucket_enum!(SidewalkState { None, SlowDown });

impl Named for Operation {
    const ALL: &'static [Self] = &[
        Operation::Stop,
        Operation::Cruise,
        Operation::SpeedUp,
        Operation::SpeedCut,
        Operation::EmergencyBrake,
        Operation::SwitchLaneToRight,
        Operation::SwitchLaneToLeft,
        Operation::TurnLeft,
        Operation::TurnRight,
    ];
}

impl Named for NpcBehavior {
    const ALL: &'static [Self] = &[
        NpcBehavior::Stop,
        NpcBehavior::SwitchLane,
        NpcBehavior::LeftLaneDriving,
        NpcBehavior::RightLaneDriving,
        NpcBehavior::CurrentLaneDriving,
    ];
}

impl Named for PedestrianBehavior {
    const ALL: &'static [Self] = &[
        PedestrianBehavior::Stop,
        PedestrianBehavior::CrossRoad,
        PedestrianBehavior::FrontLaneWalk,
    ];
}

/// Speed buckets; non-positive speeds fall in the lowest bucket.
pub fn speed_bucket(v: f64) -> SpeedBucket {
    if v <= 1.0 {
        SpeedBucket::Zero
    } else if v <= 5.0 {
        SpeedBucket::Slow
    } else if v <= 12.0 {
        SpeedBucket::Moderate
    } else {
        SpeedBucket::Fast
    }
}

pub fn level_bucket(level: f64) -> LevelBucket {
    if level <= 0.0 {
        LevelBucket::None
    } else if level <= 0.2 {
        LevelBucket::Light
    } else if level <= 0.5 {
        LevelBucket::Moderate
    } else {
        LevelBucket::Heavy
    }
}

pub fn time_of_day(hour: f64) -> TimeOfDay {
    if (5.0..11.0).contains(&hour) {
        TimeOfDay::Morning
    } else if (11.0..17.0).contains(&hour) {
        TimeOfDay::Noon
    } else {
        TimeOfDay::Night
    }
}

pub fn distance_bucket(d: f64) -> DistanceBucket {
    let d = d.abs();
    if d == 0.0 {
        DistanceBucket::Zero
    } else if d <= 8.0 {
        DistanceBucket::VeryNear
    } else if d <= 18.0 {
        DistanceBucket::Near
    } else if d <= 28.0 {
        DistanceBucket::Far
    } else {
        DistanceBucket::VeryFar
    }
}

pub fn npc_volume(v: f64) -> NpcVolume {
    if v <= 10.0 {
        NpcVolume::Small
    } else if v <= 60.0 {
        NpcVolume::Medium
    } else {
        NpcVolume::Large
    }
}

pub fn static_volume(v: f64) -> StaticVolume {
    if v <= 3.0 {
        StaticVolume::Small
    } else if v <= 10.0 {
        StaticVolume::Medium
    } else {
        StaticVolume::Large
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NpcObs {
    pub volume: NpcVolume,
    pub operation: NpcBehavior,
    pub speed: SpeedBucket,
    pub distance: DistanceBucket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PedestrianObs {
    pub volume: PedestrianVolume,
    pub operation: PedestrianBehavior,
    pub distance: DistanceBucket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StaticObs {
    pub volume: StaticVolume,
    pub distance: DistanceBucket,
}

/// Obstacle descriptors compared field by field.
pub trait Obstacle: Copy + Ord + fmt::Debug {
    fn fields(&self) -> Vec<String>;
    fn parse(text: &str) -> Result<Self>;
}

fn split_fields(text: &str, n: usize) -> Result<Vec<&str>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != n {
        return Err(Error::Scenario(format!("obstacle `{text}` needs {n} fields")));
    }
    Ok(parts)
}

impl Obstacle for NpcObs {
    fn fields(&self) -> Vec<String> {
        vec![self.volume.name(), self.operation.name(), self.speed.name(), self.distance.name()]
    }

    fn parse(text: &str) -> Result<Self> {
        let f = split_fields(text, 4)?;
        Ok(NpcObs {
            volume: Named::parse_name(f[0])?,
            operation: Named::parse_name(f[1])?,
            speed: Named::parse_name(f[2])?,
            distance: Named::parse_name(f[3])?,
        })
    }
}

impl Obstacle for PedestrianObs {
    fn fields(&self) -> Vec<String> {
        vec![self.volume.name(), self.operation.name(), self.distance.name()]
    }

    fn parse(text: &str) -> Result<Self> {
        let f = split_fields(text, 3)?;
        Ok(PedestrianObs {
            volume: Named::parse_name(f[0])?,
            operation: Named::parse_name(f[1])?,
            distance: Named::parse_name(f[2])?,
        })
    }
}

impl Obstacle for StaticObs {
    fn fields(&self) -> Vec<String> {
        vec![self.volume.name(), self.distance.name()]
    }

    fn parse(text: &str) -> Result<Self> {
        let f = split_fields(text, 2)?;
        Ok(StaticObs {
            volume: Named::parse_name(f[0])?,
            distance: Named::parse_name(f[1])?,
        })
    }
}

/// Eleven bucketed properties describing the ego and its surroundings.
/// Obstacle lists are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scene {
    pub operation: Operation,
    pub speed: SpeedBucket,
    pub rain: LevelBucket,
    pub fog: LevelBucket,
    pub wetness: LevelBucket,
    pub time_of_day: TimeOfDay,
    pub npcs: Vec<NpcObs>,
    pub pedestrians: Vec<PedestrianObs>,
    pub statics: Vec<StaticObs>,
    pub traffic_light: LightState,
    pub sidewalk: SidewalkState,
}

impl Scene {
    pub const PROPERTY_COUNT: usize = 11;

    pub fn normalize(&mut self) {
        self.npcs.sort();
        self.pedestrians.sort();
        self.statics.sort();
    }
}

pub fn capture_scene(world: &WorldState) -> Scene {
    let ego = world.ego();
    let p = autopilot::perceive(world);
    let mut npcs = Vec::new();
    let mut pedestrians = Vec::new();
    let mut statics = Vec::new();
    for seen in &p.visible_entities {
        let Some(e) = world.entity(seen.id) else {
            continue;
        };
        let distance = distance_bucket(seen.distance);
        match (e.kind, e.behavior) {
            (EntityKind::NpcVehicle, Behavior::Npc(op)) => npcs.push(NpcObs {
                volume: npc_volume(e.volume()),
                operation: op,
                speed: speed_bucket(e.speed),
                distance,
            }),
            (EntityKind::Pedestrian, Behavior::Pedestrian(op)) => pedestrians.push(PedestrianObs {
                volume: PedestrianVolume::Small,
                operation: op,
                distance,
            }),
            (EntityKind::TrafficCone, _) => statics.push(StaticObs {
                volume: static_volume(e.volume()),
                distance,
            }),
            _ => {}
        }
    }
    let traffic_light = p
        .visible_lights
        .iter()
        .min_by(|a, b| a.distance.total_cmp(&b.distance))
        .map_or(LightState::None, |l| match l.color {
            LightColor::Red => LightState::Red,
            LightColor::Green => LightState::Green,
            LightColor::Yellow => LightState::Yellow,
        });
    let sidewalk = match p.sidewalk_ahead {
        Some(d) if d <= world.params.sidewalk_slow_range_m => SidewalkState::SlowDown,
        _ => SidewalkState::None,
    };
    let mut scene = Scene {
        operation: world.ego_operation,
        speed: speed_bucket(ego.speed),
        rain: level_bucket(world.weather.rain),
        fog: level_bucket(world.weather.fog),
        wetness: level_bucket(world.weather.wetness),
        time_of_day: time_of_day(world.weather.local_hour),
        npcs,
        pedestrians,
        statics,
        traffic_light,
        sidewalk,
    };
    scene.normalize();
    scene
}

fn list_text<T: Obstacle>(items: &[T]) -> String {
    if items.is_empty() {
        "-".to_string()
    } else {
        items
            .iter()
            .map(|o| o.fields().join(":"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

fn parse_list<T: Obstacle>(text: &str) -> Result<Vec<T>> {
    if text == "-" {
        return Ok(Vec::new());
    }
    text.split(';').map(T::parse).collect()
}

impl fmt::Display for Scene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}",
            self.operation.name(),
            self.speed.name(),
            self.rain.name(),
            self.fog.name(),
            self.wetness.name(),
            self.time_of_day.name(),
            list_text(&self.npcs),
            list_text(&self.pedestrians),
            list_text(&self.statics),
            self.traffic_light.name(),
            self.sidewalk.name(),
        )
    }
}

impl FromStr for Scene {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let f: Vec<&str> = s.split('|').collect();
        if f.len() != Scene::PROPERTY_COUNT {
            return Err(Error::Scenario(format!(
                "scene needs {} fields, got {}",
                Scene::PROPERTY_COUNT,
                f.len()
            )));
        }
        let mut scene = Scene {
            operation: Named::parse_name(f[0])?,
            speed: Named::parse_name(f[1])?,
            rain: Named::parse_name(f[2])?,
            fog: Named::parse_name(f[3])?,
            wetness: Named::parse_name(f[4])?,
            time_of_day: Named::parse_name(f[5])?,
            npcs: parse_list(f[6])?,
            pedestrians: parse_list(f[7])?,
            statics: parse_list(f[8])?,
            traffic_light: Named::parse_name(f[9])?,
            sidewalk: Named::parse_name(f[10])?,
        };
        scene.normalize();
        Ok(scene)
    }
}
