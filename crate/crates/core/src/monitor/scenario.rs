use std::io::Write;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{
    write_events, ActivityLevel, SensorRecord, StoreError, HUMIDITY_RANGE_PCT, TEMP_RANGE_C,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("scenario does not parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Write(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivityStep {
    pub offset_minutes: f64,
    pub level: ActivityLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientProfile {
    pub base_temp_c: f64,
    pub base_humidity_pct: f64,
    #[serde(default)]
    pub temp_drift_per_min: f64,
    #[serde(default)]
    pub humidity_drift_per_min: f64,
    /// Standard deviation of the Gaussian jitter added to both readings.
    #[serde(default)]
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedSound {
    pub offset_minutes: f64,
    pub sound: String,
}

/// A sound emitted at random with the given per-minute rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoundRate {
    pub sound: String,
    pub per_minute: f64,
    /// Restricts the sound to samples at these activity levels.
    #[serde(default)]
    pub during: Vec<ActivityLevel>,
}

fn default_interval() -> u32 {
    5
}

fn default_first_id() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub date: NaiveDate,
    pub start_time: NaiveTime,
    pub duration_minutes: f64,
    #[serde(default = "default_interval")]
    pub sample_interval_seconds: u32,
    pub seed: u64,
    #[serde(default = "default_first_id")]
    pub first_id: u64,
    pub ambient: AmbientProfile,
    #[serde(default)]
    pub activity: Vec<ActivityStep>,
    #[serde(default)]
    pub symptoms: Vec<ScriptedSound>,
    #[serde(default)]
    pub rates: Vec<SoundRate>,
}

impl ScenarioConfig {
    pub fn from_toml_str(src: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = toml::from_str(src)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        ScenarioConfig::from_toml_str(&src)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        let d = self.duration_minutes;
        if !d.is_finite() || d < 0.0 {
            return bad(format!("duration_minutes {d} must be a non-negative number"));
        }
        if self.sample_interval_seconds == 0 {
            return bad("sample_interval_seconds must be positive".into());
        }
        for a in &self.activity {
            if !(0.0..=d).contains(&a.offset_minutes) {
                return bad(format!(
                    "activity offset {} outside [0, {d}] minutes",
                    a.offset_minutes
                ));
            }
        }
        for s in &self.symptoms {
            if !(s.offset_minutes >= 0.0 && s.offset_minutes < d) {
                return bad(format!(
                    "symptom `{}` offset {} outside [0, {d}) minutes",
                    s.sound, s.offset_minutes
                ));
            }
        }
        for r in &self.rates {
            if !(r.per_minute >= 0.0 && r.per_minute.is_finite()) {
                return bad(format!("rate for `{}` must be non-negative", r.sound));
            }
        }
        let amb = &self.ambient;
        if !(amb.noise_sd >= 0.0 && amb.noise_sd.is_finite()) {
            return bad("noise_sd must be non-negative".into());
        }
        Ok(())
    }

    fn level_at(&self, minute: f64) -> Option<ActivityLevel> {
        self.activity
            .iter()
            .filter(|a| a.offset_minutes <= minute)
            .max_by(|a, b| a.offset_minutes.total_cmp(&b.offset_minutes))
            .map(|a| a.level)
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Generates the event stream described by `cfg`. Same config, same records.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Vec<SensorRecord>, ScenarioError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.ambient.noise_sd.max(f64::MIN_POSITIVE))
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    let step = cfg.sample_interval_seconds as f64;
    let total_seconds = cfg.duration_minutes * 60.0;
    let start = cfg.date.and_time(cfg.start_time);

    let mut records = Vec::new();
    let mut k: u64 = 0;
    loop {
        let secs = k as f64 * step;
        if secs >= total_seconds {
            break;
        }
        let minute = secs / 60.0;
        let ts = start + Duration::seconds(secs as i64);
        let level = cfg.level_at(minute);

        let amb = &cfg.ambient;
        let jitter_t = if amb.noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        let jitter_h = if amb.noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        let temperature_c = round2(amb.base_temp_c + amb.temp_drift_per_min * minute + jitter_t)
            .clamp(TEMP_RANGE_C.0, TEMP_RANGE_C.1);
        let relative_humidity =
            round2(amb.base_humidity_pct + amb.humidity_drift_per_min * minute + jitter_h)
                .clamp(HUMIDITY_RANGE_PCT.0, HUMIDITY_RANGE_PCT.1);

        let scripted = cfg
            .symptoms
            .iter()
            .find(|s| {
                let at = s.offset_minutes * 60.0;
                at >= secs && at < secs + step
            })
            .map(|s| s.sound.clone());
        // one draw per rate per sample keeps the stream stable under edits
        let mut random = None;
        for r in &cfg.rates {
            let p = (r.per_minute * step / 60.0).min(1.0);
            let hit = rng.gen_bool(p);
            let allowed = r.during.is_empty() || level.is_some_and(|l| r.during.contains(&l));
            if hit && allowed && random.is_none() {
                random = Some(r.sound.clone());
            }
        }

        records.push(SensorRecord {
            id: cfg.first_id + k,
            sound_detected: scripted.or(random),
            activity_level: level,
            relative_humidity,
            temperature_c,
            event_time: ts.time(),
            date: ts.date(),
        });
        k += 1;
    }
    Ok(records)
}

pub fn simulate_to_writer<W: Write>(cfg: &ScenarioConfig, out: W) -> Result<usize, ScenarioError> {
    let records = simulate(cfg)?;
    write_events(out, &records)?;
    Ok(records.len())
}
