use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use super::StoreError;

pub const HEADER: [&str; 7] = [
    "ID",
    "Sound_Detected",
    "Activity_Level",
    "Relative_Humidity",
    "Temperature_C",
    "Event_Time",
    "Date",
];

pub const TEMP_RANGE_C: (f64, f64) = (-40.0, 60.0);
pub const HUMIDITY_RANGE_PCT: (f64, f64) = (0.0, 100.0);

const NULL: &str = "null";
const TIME_FORMAT: &str = "%H:%M:%S";
const DATE_FORMAT: &str = "%Y-%m-%d";
const LEGACY_DATE_FORMAT: &str = "%b %d %Y";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActivityLevel {
    Sedentary,
    Moderate,
    Vigorous,
}

impl ActivityLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            ActivityLevel::Sedentary => "Sedentary",
            ActivityLevel::Moderate => "Moderate",
            ActivityLevel::Vigorous => "Vigorous",
        }
    }
}

impl fmt::Display for ActivityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActivityLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sedentary" => Ok(ActivityLevel::Sedentary),
            "moderate" => Ok(ActivityLevel::Moderate),
            "vigorous" => Ok(ActivityLevel::Vigorous),
            other => Err(format!("unknown activity level `{other}`")),
        }
    }
}

/// One captured sensor event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorRecord {
    pub id: u64,
    pub sound_detected: Option<String>,
    pub activity_level: Option<ActivityLevel>,
    pub relative_humidity: f64,
    pub temperature_c: f64,
    pub event_time: NaiveTime,
    pub date: NaiveDate,
}

impl SensorRecord {
    pub fn timestamp(&self) -> NaiveDateTime {
        self.date.and_time(self.event_time)
    }

    /// Ordering key used everywhere records are sorted.
    pub fn sort_key(&self) -> (NaiveDate, NaiveTime, u64) {
        (self.date, self.event_time, self.id)
    }

    pub fn validate(&self) -> Result<(), String> {
        let (hlo, hhi) = HUMIDITY_RANGE_PCT;
        if !(hlo..=hhi).contains(&self.relative_humidity) {
            return Err(format!(
                "relative humidity {} outside [{hlo}, {hhi}]",
                self.relative_humidity
            ));
        }
        let (tlo, thi) = TEMP_RANGE_C;
        if !(tlo..=thi).contains(&self.temperature_c) {
            return Err(format!("temperature {} outside [{tlo}, {thi}]", self.temperature_c));
        }
        if let Some(s) = &self.sound_detected {
            if s.trim().is_empty() || s.contains([',', '\n', '\r', '"']) {
                return Err(format!("unusable sound label {s:?}"));
            }
        }
        Ok(())
    }

    pub(crate) fn from_fields(fields: &[&str]) -> Result<Self, String> {
        if fields.len() != HEADER.len() {
            return Err(format!(
                "expected {} fields, found {}",
                HEADER.len(),
                fields.len()
            ));
        }
        let id = fields[0]
            .trim()
            .parse::<u64>()
            .map_err(|e| format!("bad ID `{}`: {e}", fields[0]))?;
        let sound_detected = optional(fields[1]).map(str::to_string);
        let activity_level = optional(fields[2]).map(str::parse).transpose()?;
        let relative_humidity = parse_number("Relative_Humidity", fields[3])?;
        let temperature_c = parse_number("Temperature_C", fields[4])?;
        let event_time = NaiveTime::parse_from_str(fields[5].trim(), TIME_FORMAT)
            .map_err(|e| format!("bad Event_Time `{}`: {e}", fields[5]))?;
        let date = parse_date(fields[6])?;
        let record = SensorRecord {
            id,
            sound_detected,
            activity_level,
            relative_humidity,
            temperature_c,
            event_time,
            date,
        };
        record.validate()?;
        Ok(record)
    }

    pub(crate) fn to_fields(&self) -> [String; 7] {
        [
            self.id.to_string(),
            self.sound_detected.clone().unwrap_or_else(|| NULL.into()),
            self.activity_level
                .map_or_else(|| NULL.into(), |a| a.as_str().into()),
            self.relative_humidity.to_string(),
            self.temperature_c.to_string(),
            self.event_time.format(TIME_FORMAT).to_string(),
            self.date.format(DATE_FORMAT).to_string(),
        ]
    }
}

fn optional(field: &str) -> Option<&str> {
    let f = field.trim();
    (!f.is_empty() && !f.eq_ignore_ascii_case(NULL)).then_some(f)
}

fn parse_number(name: &str, field: &str) -> Result<f64, String> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|e| format!("bad {name} `{field}`: {e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("bad {name} `{field}`: not finite"))
    }
}

/// Accepts ISO dates and the legacy `Apr 08 2017` form.
pub fn parse_date(field: &str) -> Result<NaiveDate, String> {
    let f = field.trim();
    NaiveDate::parse_from_str(f, DATE_FORMAT)
        .or_else(|_| NaiveDate::parse_from_str(f, LEGACY_DATE_FORMAT))
        .map_err(|_| format!("bad Date `{field}`: expected YYYY-MM-DD or `Mon DD YYYY`"))
}

pub(crate) fn check_header(fields: &[&str]) -> Result<(), StoreError> {
    let normalized: Vec<String> = fields
        .iter()
        .map(|f| f.trim().trim_start_matches('\u{feff}').replace('°', ""))
        .collect();
    if normalized.len() == HEADER.len()
        && normalized.iter().zip(HEADER).all(|(a, b)| a == b)
    {
        Ok(())
    } else {
        Err(StoreError::HeaderMismatch {
            found: fields.join(","),
        })
    }
}
