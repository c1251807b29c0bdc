//! Simulator weather parameter records sampled uniformly from per-condition
//! intervals. Snow has no simulator preset and is not offered here.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimCondition {
    Clear,
    Fog,
    Rain,
    Night,
}

impl SimCondition {
    pub const ALL: [SimCondition; 4] = [Self::Clear, Self::Fog, Self::Rain, Self::Night];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Clear => "clear",
            Self::Fog => "fog",
            Self::Rain => "rain",
            Self::Night => "night",
        }
    }
}

impl fmt::Display for SimCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownCondition(s.to_string()))
    }
}

pub const MIE_SCATTERING_SCALE: f64 = 0.03;
pub const RAYLEIGH_SCATTERING_SCALE: f64 = 0.0331;
pub const SCATTERING_INTENSITY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherParams {
    pub cloudiness: f64,
    pub dust_storm: f64,
    pub fog_density: f64,
    pub fog_distance: f64,
    pub fog_falloff: f64,
    pub precipitation: f64,
    pub precipitation_deposits: f64,
    pub sun_altitude_angle: f64,
    pub sun_azimuth_angle: f64,
    pub wetness: f64,
    pub wind_intensity: f64,
    pub mie_scattering_scale: f64,
    pub rayleigh_scattering_scale: f64,
    pub scattering_intensity: f64,
}

/// Names of the sampled fields, in declaration order.
pub const VARIABLE_FIELDS: [&str; 11] = [
    "cloudiness",
    "dust_storm",
    "fog_density",
    "fog_distance",
    "fog_falloff",
    "precipitation",
    "precipitation_deposits",
    "sun_altitude_angle",
    "sun_azimuth_angle",
    "wetness",
    "wind_intensity",
];

pub const FIELD_COUNT: usize = 14;

/// Closed sampling intervals for the variable fields, in [`VARIABLE_FIELDS`] order.
pub fn intervals(condition: SimCondition) -> [(f64, f64); 11] {
    match condition {
        SimCondition::Clear => [
            (0.0, 30.0),
            (10.0, 50.0),
            (0.0, 0.1),
            (300.0, 1000.0),
            (0.1, 0.2),
            (0.0, 0.1),
            (0.0, 0.1),
            (30.0, 90.0),
            (0.0, 360.0),
            (0.0, 10.0),
            (0.0, 20.0),
        ],
        SimCondition::Fog => [
            (10.0, 60.0),
            (0.0, 20.0),
            (20.0, 40.0),
            (7.0, 20.0),
            (1.0, 4.0),
            (0.0, 7.0),
            (10.0, 30.0),
            (30.0, 90.0),
            (0.0, 360.0),
            (60.0, 100.0),
            (0.0, 10.0),
        ],
        SimCondition::Rain => [
            (30.0, 90.0),
            (0.0, 20.0),
            (0.0, 7.0),
            (6.0, 10.0),
            (0.1, 0.5),
            (60.0, 100.0),
            (50.0, 90.0),
            (30.0, 90.0),
            (0.0, 360.0),
            (0.0, 40.0),
            (30.0, 100.0),
        ],
        SimCondition::Night => [
            (0.0, 40.0),
            (10.0, 50.0),
            (5.0, 15.0),
            (3.0, 100.0),
            (0.1, 1.0),
            (0.0, 0.1),
            (0.0, 20.0),
            (-90.0, -45.0),
            (0.0, 360.0),
            (0.0, 60.0),
            (0.0, 20.0),
        ],
    }
}

impl WeatherParams {
    /// Variable fields in [`VARIABLE_FIELDS`] order.
    pub fn variable_values(&self) -> [f64; 11] {
        [
            self.cloudiness,
            self.dust_storm,
            self.fog_density,
            self.fog_distance,
            self.fog_falloff,
            self.precipitation,
            self.precipitation_deposits,
            self.sun_altitude_angle,
            self.sun_azimuth_angle,
            self.wetness,
            self.wind_intensity,
        ]
    }

    fn from_variable_values(v: [f64; 11]) -> Self {
        Self {
            cloudiness: v[0],
            dust_storm: v[1],
            fog_density: v[2],
            fog_distance: v[3],
            fog_falloff: v[4],
            precipitation: v[5],
            precipitation_deposits: v[6],
            sun_altitude_angle: v[7],
            sun_azimuth_angle: v[8],
            wetness: v[9],
            wind_intensity: v[10],
            mie_scattering_scale: MIE_SCATTERING_SCALE,
            rayleigh_scattering_scale: RAYLEIGH_SCATTERING_SCALE,
            scattering_intensity: SCATTERING_INTENSITY,
        }
    }

    /// Checks every field against the condition's intervals and the constants.
    pub fn validate(&self, condition: SimCondition) -> Result<()> {
        for ((name, v), (lo, hi)) in VARIABLE_FIELDS
            .iter()
            .zip(self.variable_values())
            .zip(intervals(condition))
        {
            if !(lo..=hi).contains(&v) {
                return Err(Error::Config(format!(
                    "{name} = {v} outside [{lo}, {hi}] for {condition}"
                )));
            }
        }
        if self.mie_scattering_scale != MIE_SCATTERING_SCALE
            || self.rayleigh_scattering_scale != RAYLEIGH_SCATTERING_SCALE
            || self.scattering_intensity != SCATTERING_INTENSITY
        {
            return Err(Error::Config("scattering constants altered".into()));
        }
        Ok(())
    }
}

/// Draws every variable field independently and uniformly from its closed interval.
pub fn sample_weather(condition: SimCondition, seed: u64) -> WeatherParams {
    let mut rng = rng_from_seed(seed);
    WeatherParams::from_variable_values(intervals(condition).map(|(lo, hi)| rng.gen_range(lo..=hi)))
}

/// Record `index` of a suite: its seed is derived from `(seed, condition, index)`.
pub fn sample_suite_record(condition: SimCondition, seed: u64, index: usize) -> WeatherParams {
    sample_weather(
        condition,
        derive_seed(seed, &["weather", condition.as_str(), &index.to_string()]),
    )
}

pub fn sample_suite(condition: SimCondition, count: usize, seed: u64) -> Vec<WeatherParams> {
    (0..count)
        .map(|i| sample_suite_record(condition, seed, i))
        .collect()
}

pub fn emit_config(params: &WeatherParams) -> String {
    serde_json::to_string_pretty(params).expect("plain struct serializes")
}

pub fn parse_config(text: &str) -> Result<WeatherParams> {
    Ok(serde_json::from_str(text)?)
}

/// Writes `<condition>_<index>.json` per record and returns the paths.
pub fn write_suite(dir: &Path, condition: SimCondition, records: &[WeatherParams]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let width = records.len().saturating_sub(1).to_string().len().max(4);
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let path = dir.join(format!("{condition}_{i:0width$}.json"));
            std::fs::write(&path, emit_config(r) + "\n").map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
