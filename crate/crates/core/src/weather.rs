//! Historical weather traces replayed onto simulated time.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Offset of the bundled traces' local time from UTC (San Francisco, daylight time).
pub const DEFAULT_UTC_OFFSET_S: i64 = -7 * 3600;

/// Percent-valued observation, as exported by weather services.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub unix_ts: i64,
    pub cloudiness: f64,
    pub rain: f64,
    pub fog: f64,
    pub wetness: f64,
}

impl WeatherRecord {
    fn channels(&self) -> [f64; 4] {
        [self.cloudiness, self.rain, self.fog, self.wetness]
    }
}

/// Simulator-facing weather: unit fractions plus the local hour.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WeatherState {
    pub cloudiness: f64,
    pub rain: f64,
    pub fog: f64,
    pub wetness: f64,
    pub local_hour: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherTrace {
    pub records: Vec<WeatherRecord>,
    /// Trace timestamp aligned with sim time zero.
    pub anchor_ts: i64,
    /// Real seconds of trace advanced per simulated second, in (0, 1].
    pub time_scale: f64,
    pub utc_offset_s: i64,
}

impl WeatherTrace {
    pub fn new(records: Vec<WeatherRecord>, anchor_ts: i64) -> Result<Self> {
        let trace = WeatherTrace {
            records,
            anchor_ts,
            time_scale: 1.0,
            utc_offset_s: DEFAULT_UTC_OFFSET_S,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn with_time_scale(mut self, time_scale: f64) -> Result<Self> {
        self.time_scale = time_scale;
        self.validate()?;
        Ok(self)
    }

    pub fn with_anchor(mut self, anchor_ts: i64) -> Result<Self> {
        self.anchor_ts = anchor_ts;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.records.len() < 2 {
            return Err(Error::TraceValidation("need at least 2 records".into()));
        }
        for (i, r) in self.records.iter().enumerate() {
            if r.channels().iter().any(|v| !(0.0..=100.0).contains(v)) {
                return Err(Error::TraceValidation(format!(
                    "record {} has a channel outside [0, 100]",
                    i + 1
                )));
            }
        }
        if let Some(i) = self
            .records
            .windows(2)
            .position(|w| w[1].unix_ts <= w[0].unix_ts)
        {
            return Err(Error::TraceValidation(format!(
                "timestamps not strictly increasing at record {}",
                i + 2
            )));
        }
        if !(self.time_scale > 0.0 && self.time_scale <= 1.0) {
            return Err(Error::TraceValidation(format!(
                "time scale {} outside (0, 1]",
                self.time_scale
            )));
        }
        let (first, last) = self.span();
        if self.anchor_ts < first || self.anchor_ts > last {
            return Err(Error::TraceValidation("anchor outside the record span".into()));
        }
        Ok(())
    }

    pub fn span(&self) -> (i64, i64) {
        (self.records[0].unix_ts, self.records[self.records.len() - 1].unix_ts)
    }

    /// Real-world timestamp (fractional seconds) reached at `sim_time_s`.
    pub fn mapped_timestamp(&self, sim_time_s: f64) -> f64 {
        self.anchor_ts as f64 + sim_time_s * self.time_scale
    }

    pub fn local_hour_of(&self, ts: f64) -> f64 {
        ((ts + self.utc_offset_s as f64).rem_euclid(86_400.0)) / 3600.0
    }
}

pub fn parse_trace(text: &str) -> Result<Vec<WeatherRecord>> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 {
            if line.replace(' ', "") != "unix_ts,cloudiness,rain,fog,wetness" {
                return Err(Error::TraceParse {
                    line: 1,
                    msg: format!("unexpected header `{line}`"),
                });
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::TraceParse {
                line: line_no,
                msg: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let bad = |f: &str| Error::TraceParse {
            line: line_no,
            msg: format!("bad value `{f}`"),
        };
        let unix_ts = fields[0].parse::<i64>().map_err(|_| bad(fields[0]))?;
        let mut v = [0.0; 4];
        for (slot, f) in v.iter_mut().zip(&fields[1..]) {
            *slot = f.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad(f))?;
        }
        records.push(WeatherRecord {
            unix_ts,
            cloudiness: v[0],
            rain: v[1],
            fog: v[2],
            wetness: v[3],
        });
    }
    Ok(records)
}

/// Loads a trace anchored at its first record.
pub fn load_trace(path: &Path) -> Result<WeatherTrace> {
    let records = parse_trace(&std::fs::read_to_string(path)?)?;
    let anchor = records.first().map(|r| r.unix_ts).unwrap_or_default();
    WeatherTrace::new(records, anchor)
}

/// Interpolated weather at a simulated time.
pub fn weather_at(trace: &WeatherTrace, sim_time_s: f64) -> Result<WeatherState> {
    let ts = trace.mapped_timestamp(sim_time_s);
    let (first, last) = trace.span();
    if !(ts >= first as f64 && ts <= last as f64) {
        return Err(Error::OutOfSpan(sim_time_s));
    }
    let recs = &trace.records;
    let i = recs
        .partition_point(|r| (r.unix_ts as f64) <= ts)
        .saturating_sub(1)
        .min(recs.len() - 2);
    let (a, b) = (&recs[i], &recs[i + 1]);
    let frac = (ts - a.unix_ts as f64) / (b.unix_ts - a.unix_ts) as f64;
    let lerp = |x: f64, y: f64| {
        if frac == 0.0 {
            x / 100.0
        } else if frac == 1.0 {
            y / 100.0
        } else {
            (x + (y - x) * frac) / 100.0
        }
    };
    Ok(WeatherState {
        cloudiness: lerp(a.cloudiness, b.cloudiness),
        rain: lerp(a.rain, b.rain),
        fog: lerp(a.fog, b.fog),
        wetness: lerp(a.wetness, b.wetness),
        local_hour: trace.local_hour_of(ts),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeatherPreset {
    RainyDay,
    RainyNight,
    SunnyDay,
    SunnyNight,
}

const HEAVY_RAIN_FILE: &str = "heavy_rain_2021-08-07.csv";
const CLEAR_SKY_FILE: &str = "clear_sky_2021-07-24.csv";
/// 2021-08-07 08:00 local.
const HEAVY_RAIN_MORNING: i64 = 1_628_348_400;
/// 2021-07-24 08:00 local.
const CLEAR_SKY_MORNING: i64 = 1_627_138_800;

impl WeatherPreset {
    pub const ALL: [WeatherPreset; 4] = [
        WeatherPreset::RainyDay,
        WeatherPreset::RainyNight,
        WeatherPreset::SunnyDay,
        WeatherPreset::SunnyNight,
    ];

    pub fn code(self) -> &'static str {
        match self {
            WeatherPreset::RainyDay => "RD",
            WeatherPreset::RainyNight => "RN",
            WeatherPreset::SunnyDay => "SD",
            WeatherPreset::SunnyNight => "SN",
        }
    }

    fn file(self) -> &'static str {
        match self {
            WeatherPreset::RainyDay | WeatherPreset::RainyNight => HEAVY_RAIN_FILE,
            _ => CLEAR_SKY_FILE,
        }
    }

    fn bundled_text(self) -> &'static str {
        match self {
            WeatherPreset::RainyDay | WeatherPreset::RainyNight => {
                include_str!("../traces/heavy_rain_2021-08-07.csv")
            }
            _ => include_str!("../traces/clear_sky_2021-07-24.csv"),
        }
    }

    pub fn anchor_ts(self) -> i64 {
        match self {
            WeatherPreset::RainyDay => HEAVY_RAIN_MORNING,
            WeatherPreset::RainyNight => HEAVY_RAIN_MORNING + 12 * 3600,
            WeatherPreset::SunnyDay => CLEAR_SKY_MORNING,
            WeatherPreset::SunnyNight => CLEAR_SKY_MORNING + 12 * 3600,
        }
    }

    /// The preset's trace from the copy compiled into the library.
    pub fn trace(self) -> WeatherTrace {
        let records = parse_trace(self.bundled_text()).expect("bundled trace parses");
        WeatherTrace::new(records, self.anchor_ts()).expect("bundled trace is valid")
    }

    /// The preset's trace read from `dir`, for drop-in replacement data.
    pub fn trace_from_dir(self, dir: &Path) -> Result<WeatherTrace> {
        let records = parse_trace(&std::fs::read_to_string(dir.join(self.file()))?)?;
        WeatherTrace::new(records, self.anchor_ts())
    }
}

impl fmt::Display for WeatherPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for WeatherPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        WeatherPreset::ALL
            .into_iter()
            .find(|p| p.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown weather preset `{s}`")))
    }
}

/// The four bundled conditions in fixed order RD, RN, SD, SN.
pub fn four_conditions() -> Vec<(WeatherPreset, WeatherTrace)> {
    WeatherPreset::ALL.into_iter().map(|p| (p, p.trace())).collect()
}

/// As [`four_conditions`], but reading trace files from `dir`.
pub fn four_conditions_from(dir: &Path) -> Result<Vec<(WeatherPreset, WeatherTrace)>> {
    WeatherPreset::ALL
        .into_iter()
        .map(|p| Ok((p, p.trace_from_dir(dir)?)))
        .collect()
}
