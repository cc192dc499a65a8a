//! Route geometry: a polyline centerline with lanes, sidewalks, lights and damage segments.

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Vec2};
use crate::world::LightColor;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Arc length covered by one damage segment.
pub const SEGMENT_LENGTH: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RouteId {
    R1,
    R2,
    R3,
    R4,
}

impl RouteId {
    pub const ALL: [RouteId; 4] = [RouteId::R1, RouteId::R2, RouteId::R3, RouteId::R4];

    fn source(self) -> &'static str {
        match self {
            RouteId::R1 => include_str!("../routes/R1.route"),
            RouteId::R2 => include_str!("../routes/R2.route"),
            RouteId::R3 => include_str!("../routes/R3.route"),
            RouteId::R4 => include_str!("../routes/R4.route"),
        }
    }

    pub fn load(self) -> Route {
        Route::parse(&self.to_string(), self.source()).expect("bundled route parses")
    }
}

impl fmt::Display for RouteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for RouteId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "R1" => Ok(RouteId::R1),
            "R2" => Ok(RouteId::R2),
            "R3" => Ok(RouteId::R3),
            "R4" => Ok(RouteId::R4),
            _ => Err(Error::Config(format!("unknown route `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightSpec {
    pub arclen: f64,
    pub initial: LightColor,
}

/// A fixed stretch of the route whose surface damage can be configured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadSegment {
    pub id: u32,
    pub start_s: f64,
    pub end_s: f64,
    pub damage_level: f64,
}

impl RoadSegment {
    pub fn contains(&self, s: f64) -> bool {
        s >= self.start_s && s < self.end_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub name: String,
    pub points: Vec<Vec2>,
    cumulative: Vec<f64>,
    pub lane_count: usize,
    pub lane_width: f64,
    pub sidewalks: Vec<(f64, f64)>,
    pub lights: Vec<LightSpec>,
}

impl Route {
    pub fn load_file(path: &Path) -> Result<Route> {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Route::parse(&name, &text)
    }

    pub fn parse(name: &str, text: &str) -> Result<Route> {
        let mut points = Vec::new();
        let mut lane_count = 1usize;
        let mut lane_width = 3.5;
        let mut sidewalks = Vec::new();
        let mut lights = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let bad = |msg: String| Error::RouteParse { line: line_no, msg };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                let num = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(format!("bad number `{v}`")))
                };
                match key.trim() {
                    "lanes" => {
                        lane_count = value
                            .trim()
                            .parse()
                            .ok()
                            .filter(|&n: &usize| n >= 1)
                            .ok_or_else(|| bad(format!("bad lane count `{value}`")))?
                    }
                    "lane_width" => {
                        lane_width = num(value)?;
                        if lane_width <= 0.0 {
                            return Err(bad("lane width must be positive".into()));
                        }
                    }
                    "sidewalk" => {
                        let (a, b) = value
                            .split_once("..")
                            .ok_or_else(|| bad("sidewalk needs `a..b`".into()))?;
                        let (a, b) = (num(a)?, num(b)?);
                        if b <= a {
                            return Err(bad("empty sidewalk interval".into()));
                        }
                        sidewalks.push((a, b));
                    }
                    "light" => {
                        let (s, c) = value
                            .split_once(',')
                            .ok_or_else(|| bad("light needs `arclen,color`".into()))?;
                        let initial = c.trim().parse().map_err(|_| bad(format!("bad color `{c}`")))?;
                        lights.push(LightSpec { arclen: num(s)?, initial });
                    }
                    other => return Err(bad(format!("unknown header `{other}`"))),
                }
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(x), Some(y), None) = (it.next(), it.next(), it.next()) else {
                return Err(bad(format!("expected `x y`, got `{line}`")));
            };
            let p = Vec2::new(
                x.parse().map_err(|_| bad(format!("bad x `{x}`")))?,
                y.parse().map_err(|_| bad(format!("bad y `{y}`")))?,
            );
            if !p.is_finite() {
                return Err(bad("non-finite coordinate".into()));
            }
            points.push(p);
        }
        if points.len() < 2 {
            return Err(Error::RouteParse {
                line: 0,
                msg: "centerline needs at least 2 points".into(),
            });
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        for w in points.windows(2) {
            let seg = (w[1] - w[0]).norm();
            if seg == 0.0 {
                return Err(Error::RouteParse {
                    line: 0,
                    msg: "repeated centerline point".into(),
                });
            }
            cumulative.push(cumulative.last().unwrap() + seg);
        }
        lights.sort_by(|a: &LightSpec, b| a.arclen.total_cmp(&b.arclen));
        Ok(Route {
            name: name.to_string(),
            points,
            cumulative,
            lane_count,
            lane_width,
            sidewalks,
            lights,
        })
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(0.0, self.length());
        let i = match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(self.points.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.points.len() - 2),
        };
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        (i, (s - self.cumulative[i]) / seg)
    }

    /// Centerline heading at arc length `s`; beyond the ends the boundary heading holds.
    pub fn heading_at(&self, s: f64) -> f64 {
        let (i, _) = self.locate(s);
        let d = self.points[i + 1] - self.points[i];
        d.y.atan2(d.x)
    }

    /// World position of route coordinates (`s` along, `d` left of the centerline).
    /// Points past either end extrapolate along the boundary tangent.
    pub fn to_world(&self, s: f64, d: f64) -> Vec2 {
        let (i, frac) = self.locate(s);
        let a = self.points[i];
        let b = self.points[i + 1];
        let dir = (b - a).normalized();
        let overshoot = if s < 0.0 {
            s
        } else if s > self.length() {
            s - self.length()
        } else {
            0.0
        };
        let base = a + (b - a) * frac + dir * overshoot;
        base + dir.perp() * d
    }

    /// Signed heading change over the next `ahead` meters (positive = left).
    pub fn turn_ahead(&self, s: f64, ahead: f64) -> f64 {
        normalize_angle(self.heading_at(s + ahead) - self.heading_at(s))
    }

    /// Lateral offset of lane `i` (lane 0 is leftmost).
    pub fn lane_center(&self, lane: usize) -> f64 {
        ((self.lane_count as f64 - 1.0) / 2.0 - lane as f64) * self.lane_width
    }

    /// Nearest lane index for a lateral offset.
    pub fn lane_of(&self, d: f64) -> usize {
        let raw = (self.lane_count as f64 - 1.0) / 2.0 - d / self.lane_width;
        raw.round().clamp(0.0, self.lane_count as f64 - 1.0) as usize
    }

    pub fn half_road_width(&self) -> f64 {
        self.lane_count as f64 * self.lane_width / 2.0
    }

    pub fn segments(&self) -> Vec<RoadSegment> {
        let n = (self.length() / SEGMENT_LENGTH).ceil().max(1.0) as u32;
        (0..n)
            .map(|id| RoadSegment {
                id,
                start_s: id as f64 * SEGMENT_LENGTH,
                end_s: ((id + 1) as f64 * SEGMENT_LENGTH).min(self.length()),
                damage_level: 0.0,
            })
            .collect()
    }

    pub fn segment_index(&self, s: f64) -> usize {
        let n = (self.length() / SEGMENT_LENGTH).ceil().max(1.0) as usize;
        ((s.max(0.0) / SEGMENT_LENGTH) as usize).min(n - 1)
    }

    pub fn in_sidewalk(&self, s: f64) -> bool {
        self.sidewalks.iter().any(|&(a, b)| s >= a && s <= b)
    }

    /// Distance from `s` to the start of the next sidewalk zone, zero inside one.
    pub fn sidewalk_ahead(&self, s: f64) -> Option<f64> {
        self.sidewalks
            .iter()
            .filter(|&&(_, b)| b >= s)
            .map(|&(a, _)| (a - s).max(0.0))
            .min_by(f64::total_cmp)
    }
}
